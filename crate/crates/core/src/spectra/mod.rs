//! Spectral measures of self-adjoint operators: construction, smoothing,
//! distances and spectral entropy.

mod distance;
mod entropy;
mod kde;
mod measure;

pub use distance::{ks_against_cdf, measure_distance, MeasureDistanceReport};
pub use entropy::{gridded_entropy, spectral_entropy, spectral_entropy_with};
pub use kde::{density_estimate, silverman_bandwidth, KdeOptions, DEFAULT_GRID_POINTS};
pub use measure::{spectral_measure, AtomicMeasure, GriddedMeasure, SpectralMeasure, ATOM_MERGE_TOL};
