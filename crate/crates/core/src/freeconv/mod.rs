//! Free additive convolution and its oracles.

mod cauchy;
mod montecarlo;
mod rtransform;
mod subordination;

pub use cauchy::{cauchy_transform, CauchyTransform, TransformKind, TransformTable};
pub use montecarlo::{
    haar_sum_eigenvalues, monte_carlo_free_sum, monte_carlo_from_spectra, product_spectrum_report,
    ProductSpectrumReport,
};
pub use rtransform::{inversion_radius, r_transform};
pub use subordination::{
    free_add_convolve, iterated_convolve, ConvolutionMethod, ConvolutionResult, FreeSum, SubordinationOptions,
};
