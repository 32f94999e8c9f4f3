use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::spectra::{AtomicMeasure, GriddedMeasure, SpectralMeasure};
use crate::{Error, Result};

/// Something with a Cauchy transform `G(z) = ∫ dμ(λ) / (z - λ)` on the upper
/// half-plane.
pub trait CauchyTransform {
    /// `(G(z), G'(z))`.
    fn cauchy_with_derivative(&self, z: Complex64) -> (Complex64, Complex64);

    fn cauchy(&self, z: Complex64) -> Complex64 {
        self.cauchy_with_derivative(z).0
    }

    fn first_moment(&self) -> f64;

    /// Closed interval containing the support.
    fn support_bounds(&self) -> (f64, f64);
}

impl CauchyTransform for AtomicMeasure {
    fn cauchy_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut g = Complex64::new(0.0, 0.0);
        let mut dg = Complex64::new(0.0, 0.0);
        for (x, w) in self.atoms() {
            let r = (z - x).inv();
            g += r * w;
            dg -= r * r * w;
        }
        (g, dg)
    }

    fn first_moment(&self) -> f64 {
        self.atoms().map(|(x, w)| x * w).sum()
    }

    fn support_bounds(&self) -> (f64, f64) {
        (self.locations()[0], self.locations()[self.len() - 1])
    }
}

/// `log(1 + u)` without cancellation for small `u`.
fn log1p(u: Complex64) -> Complex64 {
    let re = 0.5 * (2.0 * u.re + u.norm_sqr()).ln_1p();
    Complex64::new(re, u.im.atan2(1.0 + u.re))
}

/// `(log(1 + u) - u, (1 + u) log(1 + u) - u)`, by series when `|u|` is small.
fn log1p_remainders(u: Complex64, l: Complex64) -> (Complex64, Complex64) {
    if u.norm() >= 0.25 {
        return (l - u, (1.0 + u) * l - u);
    }
    // log(1+u) - u = Σ_{k≥2} (-1)^{k+1} u^k / k
    // (1+u)log(1+u) - u = Σ_{k≥2} (-1)^k u^k / (k (k-1))
    let mut a = Complex64::new(0.0, 0.0);
    let mut b = Complex64::new(0.0, 0.0);
    let mut p = u * u;
    let mut k = 2.0;
    loop {
        let sign = if (k as i32) % 2 == 0 { 1.0 } else { -1.0 };
        a -= p * (sign / k);
        b += p * (sign / (k * (k - 1.0)));
        if p.norm() < 1e-17 * (u.norm_sqr()) || k > 60.0 {
            break;
        }
        p *= u;
        k += 1.0;
    }
    (a, b)
}

impl CauchyTransform for GriddedMeasure {
    /// Exact transform of the piecewise-linear density.
    ///
    /// On a cell `[a, b]` with density `ρ_a + s (λ - a)`:
    /// `∫ ρ / (z - λ) = ρ_a L + s ((z - a) L - h)` with `L = log((z - a) / (z - b))`,
    /// evaluated through `u = h / (z - b)` to stay accurate far from the cell.
    fn cauchy_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let h = self.step();
        let rho = self.density();
        let mut g = Complex64::new(0.0, 0.0);
        let mut dg = Complex64::new(0.0, 0.0);
        for k in 0..rho.len() - 1 {
            let (ra, rb) = (rho[k], rho[k + 1]);
            if ra == 0.0 && rb == 0.0 {
                continue;
            }
            let zb = z - self.node(k + 1);
            let u = h / zb;
            let l = log1p(u);
            let (l_minus_u, phi) = log1p_remainders(u, l);
            // dL/dz = 1/(z-a) - 1/(z-b) = -u / (z-a)
            let dl = -u / (zb + h);
            let s = (rb - ra) / h;
            g += l * ra + zb * phi * s;
            dg += dl * ra + l_minus_u * s;
        }
        (g, dg)
    }

    fn first_moment(&self) -> f64 {
        SpectralMeasure::Gridded(self.clone()).mean()
    }

    fn support_bounds(&self) -> (f64, f64) {
        (self.start(), self.end())
    }
}

impl CauchyTransform for SpectralMeasure {
    fn cauchy_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        match self {
            SpectralMeasure::Atomic(a) => a.cauchy_with_derivative(z),
            SpectralMeasure::Gridded(g) => g.cauchy_with_derivative(z),
        }
    }

    fn first_moment(&self) -> f64 {
        self.mean()
    }

    fn support_bounds(&self) -> (f64, f64) {
        self.support()
    }
}

/// `G_μ(z)` for `Im z > 0`.
pub fn cauchy_transform(mu: &impl CauchyTransform, z: Complex64) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::RealEvaluationPoint(z));
    }
    Ok(mu.cauchy(z))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Cauchy,
    RTransform,
}

/// Transform values of one measure on a list of complex points.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformTable {
    pub kind: TransformKind,
    pub points: Vec<Complex64>,
    pub values: Vec<Complex64>,
    /// Free-form description of the source measure.
    pub source: String,
}

fn sorted_points(points: &[Complex64]) -> Vec<Complex64> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts
}

impl TransformTable {
    /// `G` on `points` (all with `Im z > 0`), sorted by real part.
    pub fn cauchy(mu: &impl CauchyTransform, points: &[Complex64], source: impl Into<String>) -> Result<Self> {
        let points = sorted_points(points);
        let values = points.iter().map(|&z| cauchy_transform(mu, z)).collect::<Result<_>>()?;
        Ok(Self { kind: TransformKind::Cauchy, points, values, source: source.into() })
    }

    /// `R` on `points` inside the inversion domain, sorted by real part.
    pub fn r_transform(mu: &impl CauchyTransform, points: &[Complex64], source: impl Into<String>) -> Result<Self> {
        let points = sorted_points(points);
        let values = points.iter().map(|&w| super::r_transform(mu, w)).collect::<Result<_>>()?;
        Ok(Self { kind: TransformKind::RTransform, points, values, source: source.into() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn point_mass_at_i() {
        let g = cauchy_transform(&SpectralMeasure::point_mass(0.0), c(0.0, 1.0)).unwrap();
        assert!((g - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn semicircle_closed_form_at_2i() {
        let mu = SpectralMeasure::semicircle(1.0, 20001).unwrap();
        let z = c(0.0, 2.0);
        let want = c(0.0, (2.0 - 8f64.sqrt()) / 2.0);
        assert!((want.im + 0.41421).abs() < 1e-5);
        let g = cauchy_transform(&mu, z).unwrap();
        assert!((g - want).norm() < 1e-5, "{g}");
    }

    #[test]
    fn decays_like_one_over_z() {
        let z = c(0.0, 1e6);
        for mu in [
            SpectralMeasure::atomic([(-1.0, 0.2), (0.5, 0.8)]).unwrap(),
            SpectralMeasure::semicircle(2.0, 2048).unwrap(),
        ] {
            let g = cauchy_transform(&mu, z).unwrap();
            assert!((g - z.inv()).norm() < 1e-9);
        }
    }

    #[test]
    fn maps_upper_to_lower_half_plane() {
        let mu = SpectralMeasure::semicircle(1.0, 512).unwrap();
        for re in [-3.0, -1.0, 0.0, 0.7, 2.5] {
            for im in [1e-4, 1e-2, 1.0, 10.0] {
                assert!(mu.cauchy(c(re, im)).im < 0.0);
            }
        }
    }

    #[test]
    fn real_point_rejected() {
        let mu = SpectralMeasure::point_mass(0.0);
        assert!(matches!(cauchy_transform(&mu, c(1.0, 0.0)), Err(Error::RealEvaluationPoint(_))));
    }

    #[test]
    fn gridded_derivative_matches_finite_difference() {
        let mu = SpectralMeasure::semicircle(1.0, 300).unwrap();
        let z = c(0.3, 0.2);
        let e = 1e-6;
        let fd = (mu.cauchy(z + e) - mu.cauchy(z - e)) / (2.0 * e);
        let (_, dg) = mu.cauchy_with_derivative(z);
        assert!((fd - dg).norm() < 1e-6);
    }

    #[test]
    fn table_sorted_by_real_part() {
        let mu = SpectralMeasure::point_mass(0.0);
        let t = TransformTable::cauchy(&mu, &[c(2.0, 1.0), c(-1.0, 1.0)], "delta").unwrap();
        assert_eq!(t.points[0].re, -1.0);
        assert!(t.values.iter().all(|g| g.im < 0.0));
    }
}
