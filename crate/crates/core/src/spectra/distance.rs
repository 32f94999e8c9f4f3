use serde::{Deserialize, Serialize};

use super::measure::SpectralMeasure;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureDistanceReport {
    pub kolmogorov_smirnov: f64,
    pub wasserstein1: f64,
}

fn merged_breakpoints(mu: &SpectralMeasure, nu: &SpectralMeasure) -> Vec<f64> {
    let mut xs = mu.breakpoints();
    xs.extend(nu.breakpoints());
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// `∫_0^1 |a + b t + c t²| dt`.
fn abs_quadratic_integral(a: f64, b: f64, c: f64) -> f64 {
    let mut cuts = vec![0.0, 1.0];
    if c.abs() > 1e-300 {
        let disc = b * b - 4.0 * a * c;
        if disc > 0.0 {
            let s = disc.sqrt();
            let q = -0.5 * (b + b.signum() * s);
            for r in [q / c, if q != 0.0 { a / q } else { f64::NAN }] {
                if r > 0.0 && r < 1.0 {
                    cuts.push(r);
                }
            }
        }
    } else if b.abs() > 1e-300 {
        let r = -a / b;
        if r > 0.0 && r < 1.0 {
            cuts.push(r);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let prim = |t: f64| a * t + b * t * t / 2.0 + c * t * t * t / 3.0;
    cuts.windows(2).map(|w| (prim(w[1]) - prim(w[0])).abs()).sum()
}

/// Kolmogorov-Smirnov and Wasserstein-1 distances between two measures.
///
/// Between consecutive breakpoints both CDFs are polynomials of degree at
/// most two, so `|F - G|` is integrated exactly from three interior samples
/// and the supremum is taken over breakpoints and interior samples.
pub fn measure_distance(mu: &SpectralMeasure, nu: &SpectralMeasure) -> MeasureDistanceReport {
    let xs = merged_breakpoints(mu, nu);
    let diff = |x: f64| mu.cdf(x) - nu.cdf(x);
    let mut ks: f64 = 0.0;
    let mut w1 = 0.0;
    for &x in &xs {
        ks = ks.max(diff(x).abs());
    }
    for w in xs.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let len = x1 - x0;
        let f1 = diff(x0 + 0.25 * len);
        let f2 = diff(x0 + 0.5 * len);
        let f3 = diff(x0 + 0.75 * len);
        ks = ks.max(f1.abs()).max(f2.abs()).max(f3.abs());
        // quadratic through (1/4, f1), (1/2, f2), (3/4, f3) in t ∈ [0, 1]
        let c = 8.0 * (f1 - 2.0 * f2 + f3);
        let b = (f3 - f1) * 2.0 - c;
        let a = f2 - b * 0.5 - c * 0.25;
        w1 += len * abs_quadratic_integral(a, b, c);
    }
    MeasureDistanceReport { kolmogorov_smirnov: ks, wasserstein1: w1 }
}

/// Supremum distance between the CDF of `mu` and a reference CDF, checked at
/// the breakpoints of `mu` (both one-sided limits for atoms) and at cell
/// midpoints.
pub fn ks_against_cdf(mu: &SpectralMeasure, cdf: impl Fn(f64) -> f64) -> f64 {
    let xs = mu.breakpoints();
    let mut ks: f64 = 0.0;
    let mut prev = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        let here = mu.cdf(x);
        ks = ks.max((here - f).abs()).max((prev - f).abs());
        if let Some(&next) = xs.get(i + 1) {
            let mid = 0.5 * (x + next);
            ks = ks.max((mu.cdf(mid) - cdf(mid)).abs());
        }
        prev = here;
    }
    ks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_distance_is_zero() {
        let mu = SpectralMeasure::atomic([(0.0, 0.3), (1.0, 0.7)]).unwrap();
        let d = measure_distance(&mu, &mu);
        assert_eq!(d.kolmogorov_smirnov, 0.0);
        assert_eq!(d.wasserstein1, 0.0);
        let g = SpectralMeasure::semicircle(1.0, 101).unwrap();
        let d = measure_distance(&g, &g);
        assert_eq!((d.kolmogorov_smirnov, d.wasserstein1), (0.0, 0.0));
    }

    #[test]
    fn translated_point_mass() {
        let a = 2.5;
        let d = measure_distance(&SpectralMeasure::point_mass(0.0), &SpectralMeasure::point_mass(a));
        assert!((d.wasserstein1 - a).abs() < 1e-12);
        assert_eq!(d.kolmogorov_smirnov, 1.0);
    }

    #[test]
    fn two_atom_hand_value() {
        let mu = SpectralMeasure::atomic([(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let nu = SpectralMeasure::atomic([(0.0, 0.5), (2.0, 0.5)]).unwrap();
        let d = measure_distance(&mu, &nu);
        assert!((d.wasserstein1 - 0.5).abs() < 1e-12);
        assert!((d.kolmogorov_smirnov - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gridded_vs_shifted_gridded() {
        // uniform on [0, 1] vs uniform on [0.5, 1.5]: W1 = 0.5, KS = 0.5
        let u0 = SpectralMeasure::Gridded(super::super::GriddedMeasure::new(0.0, 0.5, vec![1.0; 3]).unwrap());
        let u1 = u0.affine_pushforward(1.0, 0.5).unwrap();
        let d = measure_distance(&u0, &u1);
        assert!((d.wasserstein1 - 0.5).abs() < 1e-12);
        assert!((d.kolmogorov_smirnov - 0.5).abs() < 1e-12);
    }

    #[test]
    fn abs_quadratic_integral_sign_changes() {
        // ∫_0^1 |t - 1/2| dt = 1/4
        assert!((abs_quadratic_integral(-0.5, 1.0, 0.0) - 0.25).abs() < 1e-15);
        // ∫_0^1 |t² - 1/4| dt = 1/4
        assert!((abs_quadratic_integral(-0.25, 0.0, 1.0) - 0.25).abs() < 1e-15);
    }
}
