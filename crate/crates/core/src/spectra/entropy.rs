use super::kde::{density_estimate, KdeOptions};
use super::measure::{GriddedMeasure, SpectralMeasure};
use crate::Result;

/// Differential entropy `-∫ ρ log ρ` by the trapezoid rule on the grid.
pub fn gridded_entropy(g: &GriddedMeasure) -> f64 {
    let h = g.step();
    let f: Vec<f64> = g.density().iter().map(|&d| if d > 0.0 { -d * d.ln() } else { 0.0 }).collect();
    let n = f.len();
    h * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[n - 1]))
}

/// Spectral entropy of `mu`.
///
/// Atomic measures have no density (their differential entropy is `-∞`);
/// they are smoothed first by [`density_estimate`] with `kde`, so the value
/// depends on the bandwidth.
pub fn spectral_entropy_with(mu: &SpectralMeasure, kde: KdeOptions) -> Result<f64> {
    match mu {
        SpectralMeasure::Gridded(g) => Ok(gridded_entropy(g)),
        SpectralMeasure::Atomic(_) => Ok(gridded_entropy(&density_estimate(mu, kde)?)),
    }
}

/// [`spectral_entropy_with`] using Silverman's bandwidth and the default grid.
pub fn spectral_entropy(mu: &SpectralMeasure) -> Result<f64> {
    spectral_entropy_with(mu, KdeOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn uniform_closed_forms() {
        let u01 = SpectralMeasure::Gridded(GriddedMeasure::new(0.0, 0.01, vec![1.0; 101]).unwrap());
        assert!(spectral_entropy(&u01).unwrap().abs() < 1e-12);
        let u02 = SpectralMeasure::Gridded(GriddedMeasure::new(0.0, 0.02, vec![0.5; 101]).unwrap());
        assert!((spectral_entropy(&u02).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_entropy() {
        let g = GriddedMeasure::from_fn(-10.0, 10.0, 4001, |x| (-0.5 * x * x).exp()).unwrap();
        let want = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((gridded_entropy(&g) - want).abs() < 1e-3);
    }

    #[test]
    fn scaling_shifts_entropy_by_log() {
        let g = SpectralMeasure::semicircle(1.0, 1001).unwrap();
        let h0 = spectral_entropy(&g).unwrap();
        for c in [0.5, 2.0, 10.0] {
            let h = spectral_entropy(&g.affine_pushforward(c, 0.0).unwrap()).unwrap();
            assert!((h - h0 - f64::ln(c)).abs() < 1e-3);
        }
    }

    #[test]
    fn point_mass_entropy_is_singular() {
        assert!(matches!(spectral_entropy(&SpectralMeasure::point_mass(1.0)), Err(Error::SingularMeasure)));
    }
}
