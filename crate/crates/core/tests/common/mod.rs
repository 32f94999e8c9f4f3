#![allow(dead_code)]

use freeformer::spectra::SpectralMeasure;
use rand::Rng;

/// Random atomic law with at most `max_atoms` atoms in [-2, 2] whose weights
/// are multiples of `1/dim`, together with a diagonal of length `dim`
/// realizing it exactly.
pub fn random_atomic<R: Rng>(rng: &mut R, max_atoms: usize, dim: usize) -> (SpectralMeasure, Vec<f64>) {
    let k = rng.random_range(2..=max_atoms);
    let mut locs: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
    locs.sort_by(f64::total_cmp);
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut counts: Vec<usize> = raw.iter().map(|w| ((w / total) * dim as f64).floor().max(1.0) as usize).collect();
    let used: usize = counts.iter().sum();
    counts[0] += dim - used;
    let diag: Vec<f64> = locs.iter().zip(&counts).flat_map(|(&x, &c)| std::iter::repeat_n(x, c)).collect();
    let mu = SpectralMeasure::from_samples(&diag).expect("valid law");
    (mu, diag)
}

pub fn semicircle_cdf(variance: f64) -> impl Fn(f64) -> f64 {
    let r = 2.0 * variance.sqrt();
    move |x: f64| {
        let t = (x / r).clamp(-1.0, 1.0);
        0.5 + (t * (1.0 - t * t).sqrt() + t.asin()) / std::f64::consts::PI
    }
}

pub fn arcsine_cdf(x: f64) -> f64 {
    0.5 + (x / 2.0).clamp(-1.0, 1.0).asin() / std::f64::consts::PI
}
