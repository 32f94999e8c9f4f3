use super::measure::{AtomicMeasure, GriddedMeasure, SpectralMeasure};
use crate::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KdeOptions {
    /// Kernel bandwidth; Silverman's rule when `None`.
    pub bandwidth: Option<f64>,
    pub points: usize,
}

impl Default for KdeOptions {
    fn default() -> Self {
        Self { bandwidth: None, points: DEFAULT_GRID_POINTS }
    }
}

/// Silverman's rule `1.06 σ n^{-1/5}` with the Kish effective sample size
/// `n = 1 / Σ w²`, which equals the sample count for unmerged equal weights.
pub fn silverman_bandwidth(mu: &AtomicMeasure) -> f64 {
    let mean: f64 = mu.atoms().map(|(x, w)| w * x).sum();
    let var: f64 = mu.atoms().map(|(x, w)| w * (x - mean) * (x - mean)).sum();
    let n_eff = 1.0 / mu.weights().iter().map(|w| w * w).sum::<f64>();
    1.06 * var.sqrt() * n_eff.powf(-0.2)
}

/// Gaussian kernel density on `[min - 4h, max + 4h]`, normalized to unit mass.
pub fn density_estimate(mu: &SpectralMeasure, options: KdeOptions) -> Result<GriddedMeasure> {
    let atoms = match mu {
        SpectralMeasure::Atomic(a) => a,
        SpectralMeasure::Gridded(_) => {
            return Err(Error::InvalidMeasure("density estimation expects an atomic measure".into()))
        }
    };
    if atoms.len() < 2 {
        return Err(Error::SingularMeasure);
    }
    let h = match options.bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}"))),
        None => silverman_bandwidth(atoms),
    };
    if !(h > 0.0) {
        return Err(Error::SingularMeasure);
    }
    let locs = atoms.locations();
    let weights = atoms.weights();
    let lo = locs[0] - 4.0 * h;
    let hi = locs[locs.len() - 1] + 4.0 * h;
    let points = options.points.max(3);
    let step = (hi - lo) / (points - 1) as f64;
    let reach = 8.0 * h;
    let norm = 1.0 / (h * (2.0 * std::f64::consts::PI).sqrt());
    let density = (0..points)
        .map(|i| {
            let x = lo + step * i as f64;
            let first = locs.partition_point(|&l| l < x - reach);
            let last = locs.partition_point(|&l| l <= x + reach);
            (first..last)
                .map(|k| {
                    let u = (x - locs[k]) / h;
                    weights[k] * (-0.5 * u * u).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    GriddedMeasure::normalized(lo, step, density)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_atoms_give_symmetric_density() {
        let mu = SpectralMeasure::atomic([(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let g = density_estimate(&mu, KdeOptions { bandwidth: Some(0.1), points: 2049 }).unwrap();
        let d = g.density();
        for i in 0..d.len() {
            assert!((d[i] - d[d.len() - 1 - i]).abs() < 1e-9);
        }
        let mass = SpectralMeasure::Gridded(g).cdf(f64::INFINITY);
        assert!((mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn point_mass_is_singular() {
        let mu = SpectralMeasure::point_mass(0.3);
        assert!(matches!(density_estimate(&mu, KdeOptions::default()), Err(Error::SingularMeasure)));
    }

    #[test]
    fn silverman_uses_sample_count() {
        let samples: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let mu = AtomicMeasure::from_samples(&samples).unwrap();
        let sd = (samples.iter().map(|x| (x - 49.5) * (x - 49.5)).sum::<f64>() / 100.0).sqrt();
        assert!((silverman_bandwidth(&mu) - 1.06 * sd * 100f64.powf(-0.2)).abs() < 1e-10);
    }
}
