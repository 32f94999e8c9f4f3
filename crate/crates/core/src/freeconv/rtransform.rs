use num_complex::Complex64;

use super::cauchy::CauchyTransform;
use crate::{Error, Result};

const MAX_NEWTON: usize = 200;
const INVERSION_RESIDUAL: f64 = 1e-8;

/// Radius around `w = 0` where `R` is computed: `1 / (6 r)` with `r` the half
/// width of the support, infinite for a point mass.
pub fn inversion_radius(mu: &(impl CauchyTransform + ?Sized)) -> f64 {
    let (lo, hi) = mu.support_bounds();
    let r = 0.5 * (hi - lo);
    if r > 0.0 {
        1.0 / (6.0 * r)
    } else {
        f64::INFINITY
    }
}

/// `R(w) = G⁻¹(w) - 1/w`, with `G⁻¹` found by Newton's method from
/// `1/w + mean`. `R(0)` is the mean.
pub fn r_transform(mu: &(impl CauchyTransform + ?Sized), w: Complex64) -> Result<Complex64> {
    let mean = mu.first_moment();
    if w == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(mean, 0.0));
    }
    if w.im > 0.0 {
        // G(z̄) = conj G(z), and R has real Taylor coefficients
        return r_transform(mu, w.conj()).map(|r| r.conj());
    }
    let outside = |residual: f64| Error::OutsideInversionDomain { w, residual };
    let radius = inversion_radius(mu);
    let mut z = w.inv() + mean;
    let (mut g, mut dg) = mu.cauchy_with_derivative(z);
    for _ in 0..MAX_NEWTON {
        let f = g - w;
        if f.norm() <= 1e-15 * w.norm() {
            break;
        }
        let mut step = f / dg;
        let mut next = z - step;
        let mut tries = 0;
        while (next.im < 0.0 || !next.re.is_finite() || !next.im.is_finite()) && tries < 60 {
            step *= 0.5;
            next = z - step;
            tries += 1;
        }
        let (gn, dgn) = mu.cauchy_with_derivative(next);
        if !((gn - w).norm() < f.norm()) {
            break;
        }
        z = next;
        g = gn;
        dg = dgn;
    }
    let residual = (g - w).norm();
    if !(residual.is_finite()) {
        return Err(outside(f64::INFINITY));
    }
    if w.norm() > radius || residual >= INVERSION_RESIDUAL {
        return Err(outside(residual));
    }
    Ok(z - w.inv())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::SpectralMeasure;

    #[test]
    fn point_mass_is_constant() {
        let mu = SpectralMeasure::point_mass(1.5);
        for w in [Complex64::new(0.3, -0.2), Complex64::new(-2.0, -1.0), Complex64::new(0.1, 0.4)] {
            let r = r_transform(&mu, w).unwrap();
            assert!((r - 1.5).norm() < 1e-12, "{r}");
        }
    }

    #[test]
    fn semicircle_is_linear() {
        let mu = SpectralMeasure::semicircle(1.0, 8001).unwrap();
        let w = Complex64::from_polar(0.05, -1.0);
        let r = r_transform(&mu, w).unwrap();
        assert!((r - w).norm() < 1e-5, "{r}");
    }

    #[test]
    fn bernoulli_closed_form() {
        // symmetric Bernoulli: R(w) = (√(1 + 4w²) - 1) / (2w)
        let mu = SpectralMeasure::atomic([(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let w = Complex64::from_polar(0.1, -0.7);
        let want = ((1.0 + 4.0 * w * w).sqrt() - 1.0) / (2.0 * w);
        assert!((r_transform(&mu, w).unwrap() - want).norm() < 1e-10);
    }

    #[test]
    fn far_point_is_outside() {
        let mu = SpectralMeasure::atomic([(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let err = r_transform(&mu, Complex64::new(0.0, -5.0)).unwrap_err();
        assert!(matches!(err, Error::OutsideInversionDomain { .. }));
    }
}
