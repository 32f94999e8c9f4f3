//! Free additive convolution through the subordination fixed point.
//!
//! For `z` in the upper half-plane let `h(w) = 1/G(w) - w`. The subordination
//! function `ω₁` of `μ ⊞ ν` is the attracting fixed point of
//!
//! ```text
//! ω ↦ z + h_ν(z + h_μ(ω))
//! ```
//!
//! and `G_{μ⊞ν}(z) = G_μ(ω₁(z))`. The density of the sum is read off at
//! `x + iη` by Stieltjes inversion, `ρ(x) = -Im G(x + iη) / π`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cauchy::CauchyTransform;
use crate::spectra::{GriddedMeasure, SpectralMeasure};
use crate::{Error, Result};

/// Grid points solved sequentially with warm starts; chunks run in parallel.
const CHUNK: usize = 64;
/// Iteration allowance for a warm-started solve before falling back to
/// continuation in the imaginary part.
const WARM_BUDGET: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubordinationOptions {
    /// Imaginary offset for Stieltjes inversion.
    pub eta: f64,
    pub grid_points: usize,
    pub tolerance: f64,
    /// Per grid point.
    pub max_iterations: usize,
}

impl Default for SubordinationOptions {
    fn default() -> Self {
        Self { eta: 1e-3, grid_points: 2048, tolerance: 1e-10, max_iterations: 5000 }
    }
}

impl SubordinationOptions {
    fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("eta must be positive, got {}", self.eta)));
        }
        if self.grid_points < 3 {
            return Err(Error::InvalidArgument("grid needs at least three points".into()));
        }
        if !(self.tolerance >= 0.0) || self.max_iterations == 0 {
            return Err(Error::InvalidArgument("tolerance must be >= 0 and max_iterations >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionMethod {
    Subordination,
    Montecarlo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvolutionResult {
    pub measure: SpectralMeasure,
    pub method: ConvolutionMethod,
    /// Largest per-point iteration count.
    pub iterations: usize,
    /// Largest per-point fixed-point residual.
    pub residual: f64,
    /// Negative density mass removed by clipping, relative to the total.
    pub clipped_mass: f64,
}

#[derive(Clone, Copy, Debug)]
struct Evaluation {
    omega1: Complex64,
    omega2: Complex64,
    /// `T(ω) - ω`
    step: Complex64,
    /// `T'(ω) - 1`
    slope: Complex64,
    g1: Complex64,
    dg1: Complex64,
    /// `h_ν'(ω₂)`
    dh2: Complex64,
    /// `h_μ'(ω₁)`
    dh1: Complex64,
}

#[derive(Clone, Copy, Debug)]
struct PointSolution {
    eval: Evaluation,
    iterations: usize,
    residual: f64,
}

fn evaluate<M, N>(mu: &M, nu: &N, z: Complex64, omega1: Complex64) -> Evaluation
where
    M: CauchyTransform + ?Sized,
    N: CauchyTransform + ?Sized,
{
    let (g1, dg1) = mu.cauchy_with_derivative(omega1);
    let f1 = g1.inv();
    let dh1 = -dg1 * f1 * f1 - 1.0;
    let omega2 = z + f1 - omega1;
    let (g2, dg2) = nu.cauchy_with_derivative(omega2);
    let f2 = g2.inv();
    let dh2 = -dg2 * f2 * f2 - 1.0;
    let next = z + f2 - omega2;
    Evaluation { omega1, omega2, step: next - omega1, slope: dh2 * dh1 - 1.0, g1, dg1, dh2, dh1 }
}

fn residual_of(e: &Evaluation) -> f64 {
    let r = e.step.norm() / e.omega1.norm().max(1.0);
    if r.is_finite() {
        r
    } else {
        f64::INFINITY
    }
}

/// Newton steps on `T(ω) - ω`, accepted only when they reduce the residual;
/// otherwise a fixed-point step, damped by 1/2 after a stall.
fn solve_point<M, N>(mu: &M, nu: &N, z: Complex64, start: Complex64, tol: f64, budget: usize) -> Result<PointSolution>
where
    M: CauchyTransform + ?Sized,
    N: CauchyTransform + ?Sized,
{
    let mut w = start;
    if !(w.im >= z.im) {
        w.im = z.im;
    }
    let mut e = evaluate(mu, nu, z, w);
    let mut iterations = 1;
    let mut damping = 1.0;
    loop {
        let res = residual_of(&e);
        if res <= tol {
            return Ok(PointSolution { eval: e, iterations, residual: res });
        }
        if iterations >= budget {
            return Err(Error::NonConvergence { iterations, residual: res });
        }
        let candidate = w - e.step / e.slope;
        if candidate.re.is_finite() && candidate.im.is_finite() && candidate.im > 0.5 * z.im {
            let ec = evaluate(mu, nu, z, candidate);
            iterations += 1;
            if residual_of(&ec) < res {
                w = candidate;
                e = ec;
                damping = 1.0;
                continue;
            }
            if iterations >= budget {
                return Err(Error::NonConvergence { iterations, residual: res });
            }
        }
        let next = w + e.step * damping;
        let en = evaluate(mu, nu, z, next);
        iterations += 1;
        if residual_of(&en) >= res {
            damping = 0.5;
        }
        w = next;
        e = en;
    }
}

fn width<M: CauchyTransform + ?Sized>(m: &M) -> f64 {
    let (lo, hi) = m.support_bounds();
    hi - lo
}

/// Solves at `z` by walking the imaginary part down geometrically from a
/// height where the iteration contracts quickly.
fn solve_with_continuation<M, N>(mu: &M, nu: &N, z: Complex64, tol: f64, budget: usize) -> Result<PointSolution>
where
    M: CauchyTransform + ?Sized,
    N: CauchyTransform + ?Sized,
{
    let top = (width(mu) + width(nu)).max(1.0);
    let shift = Complex64::new(-nu.first_moment(), 0.0);
    if z.im >= top {
        return solve_point(mu, nu, z, z + shift, tol, budget);
    }
    let stages = ((top / z.im).log10() * 3.0).ceil().max(1.0) as usize;
    let ratio = (z.im / top).powf(1.0 / stages as f64);
    let mut height = top;
    let mut guess = Complex64::new(z.re, top) + shift;
    let mut used = 0;
    for k in 0..=stages {
        let y = if k == stages { z.im } else { height };
        let zk = Complex64::new(z.re, y);
        let sol = solve_point(mu, nu, zk, guess, tol, budget.saturating_sub(used).max(1)).map_err(|e| match e {
            Error::NonConvergence { residual, .. } => Error::NonConvergence { iterations: budget, residual },
            other => other,
        })?;
        used += sol.iterations;
        if k == stages {
            return Ok(PointSolution { iterations: used, ..sol });
        }
        let next_height = height * ratio;
        let drop = if k + 1 == stages { y - z.im } else { y - next_height };
        guess = sol.eval.omega1 - Complex64::new(0.0, drop);
        height = next_height;
    }
    unreachable!()
}

/// Cauchy transform of `μ ⊞ ν`, evaluated by solving for the subordination
/// function at each requested point.
pub struct FreeSum<'a, M: ?Sized, N: ?Sized> {
    pub mu: &'a M,
    pub nu: &'a N,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl<'a, M, N> FreeSum<'a, M, N>
where
    M: CauchyTransform + ?Sized,
    N: CauchyTransform + ?Sized,
{
    pub fn new(mu: &'a M, nu: &'a N) -> Self {
        let d = SubordinationOptions::default();
        Self { mu, nu, tolerance: d.tolerance, max_iterations: d.max_iterations }
    }

    /// `(G, G', ω₁, ω₂)` at `z`.
    pub fn solve(&self, z: Complex64) -> Result<(Complex64, Complex64, Complex64, Complex64)> {
        if !(z.im > 0.0) {
            return Err(Error::RealEvaluationPoint(z));
        }
        let sol = solve_with_continuation(self.mu, self.nu, z, self.tolerance, self.max_iterations)?;
        let e = sol.eval;
        // ω₁' = (1 + h_ν'(ω₂)) / (1 - h_ν'(ω₂) h_μ'(ω₁))
        let domega = (1.0 + e.dh2) / (1.0 - e.dh2 * e.dh1);
        Ok((e.g1, e.dg1 * domega, e.omega1, e.omega2))
    }
}

impl<M, N> CauchyTransform for FreeSum<'_, M, N>
where
    M: CauchyTransform + ?Sized,
    N: CauchyTransform + ?Sized,
{
    /// Lower half-plane arguments use `G(z̄) = conj G(z)`; failures yield NaN.
    fn cauchy_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let nan = Complex64::new(f64::NAN, f64::NAN);
        if z.im < 0.0 {
            let (g, dg) = self.cauchy_with_derivative(z.conj());
            return (g.conj(), dg.conj());
        }
        match self.solve(z) {
            Ok((g, dg, _, _)) => (g, dg),
            Err(_) => (nan, nan),
        }
    }

    fn first_moment(&self) -> f64 {
        self.mu.first_moment() + self.nu.first_moment()
    }

    fn support_bounds(&self) -> (f64, f64) {
        let (a0, a1) = self.mu.support_bounds();
        let (b0, b1) = self.nu.support_bounds();
        (a0 + b0, a1 + b1)
    }
}

struct GridPoint {
    g: Complex64,
    iterations: usize,
    residual: f64,
}

fn solve_chunk<M, N>(mu: &M, nu: &N, xs: &[f64], opts: &SubordinationOptions) -> Result<Vec<GridPoint>>
where
    M: CauchyTransform + ?Sized + Sync,
    N: CauchyTransform + ?Sized + Sync,
{
    let mut out = Vec::with_capacity(xs.len());
    let mut previous: Option<(f64, Complex64)> = None;
    for &x in xs {
        let z = Complex64::new(x, opts.eta);
        let warm = previous.and_then(|(px, w)| {
            let budget = WARM_BUDGET.min(opts.max_iterations);
            solve_point(mu, nu, z, w + (x - px), opts.tolerance, budget).ok()
        });
        let sol = match warm {
            Some(sol) => sol,
            None => solve_with_continuation(mu, nu, z, opts.tolerance, opts.max_iterations)?,
        };
        previous = Some((x, sol.eval.omega1));
        out.push(GridPoint { g: sol.eval.g1, iterations: sol.iterations, residual: sol.residual });
    }
    Ok(out)
}

/// Gridded density of `μ ⊞ ν` on the sum of the support bounds padded by `4η`.
pub fn free_add_convolve<M, N>(mu: &M, nu: &N, opts: &SubordinationOptions) -> Result<ConvolutionResult>
where
    M: CauchyTransform + ?Sized + Sync,
    N: CauchyTransform + ?Sized + Sync,
{
    opts.validate()?;
    let (a0, a1) = mu.support_bounds();
    let (b0, b1) = nu.support_bounds();
    let lo = a0 + b0 - 4.0 * opts.eta;
    let hi = a1 + b1 + 4.0 * opts.eta;
    let n = opts.grid_points;
    let step = (hi - lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    let chunks: Vec<Result<Vec<GridPoint>>> =
        xs.par_chunks(CHUNK).map(|chunk| solve_chunk(mu, nu, chunk, opts)).collect();
    let mut points = Vec::with_capacity(n);
    for c in chunks {
        points.extend(c?);
    }

    let raw: Vec<f64> = points.iter().map(|p| -p.g.im / std::f64::consts::PI).collect();
    let negative: f64 = raw.iter().filter(|&&d| d < 0.0).map(|d| -d).sum::<f64>() * step;
    let positive: f64 = raw.iter().filter(|&&d| d > 0.0).sum::<f64>() * step;
    let density: Vec<f64> = raw.iter().map(|&d| d.max(0.0)).collect();
    let measure = GriddedMeasure::normalized(lo, step, density)?;
    Ok(ConvolutionResult {
        measure: SpectralMeasure::Gridded(measure),
        method: ConvolutionMethod::Subordination,
        iterations: points.iter().map(|p| p.iterations).max().unwrap_or(0),
        residual: points.iter().map(|p| p.residual).fold(0.0, f64::max),
        clipped_mass: if positive > 0.0 { negative / positive } else { 0.0 },
    })
}

/// Left fold `((μ₀ ⊞ μ₁) ⊞ μ₂) ⊞ ⋯`.
///
/// A single gridded measure is returned as is; a single atomic measure is
/// smoothed onto a grid (convolution with `δ₀`).
pub fn iterated_convolve(measures: &[SpectralMeasure], opts: &SubordinationOptions) -> Result<ConvolutionResult> {
    let (first, rest) = measures.split_first().ok_or(Error::Empty { what: "measure list" })?;
    if rest.is_empty() && matches!(first, SpectralMeasure::Atomic(_)) {
        return free_add_convolve(first, &SpectralMeasure::point_mass(0.0), opts).map_err(|e| e.at_fold(0));
    }
    let mut acc = ConvolutionResult {
        measure: first.clone(),
        method: ConvolutionMethod::Subordination,
        iterations: 0,
        residual: 0.0,
        clipped_mass: 0.0,
    };
    for (i, next) in rest.iter().enumerate() {
        let step = free_add_convolve(&acc.measure, next, opts).map_err(|e| e.at_fold(i + 1))?;
        acc = ConvolutionResult {
            iterations: acc.iterations.max(step.iterations),
            residual: acc.residual.max(step.residual),
            clipped_mass: acc.clipped_mass.max(step.clipped_mass),
            ..step
        };
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{ks_against_cdf, measure_distance};

    fn semicircle_cdf(variance: f64) -> impl Fn(f64) -> f64 {
        let r = 2.0 * variance.sqrt();
        move |x: f64| {
            let t = (x / r).clamp(-1.0, 1.0);
            0.5 + (t * (1.0 - t * t).sqrt() + t.asin()) / std::f64::consts::PI
        }
    }

    #[test]
    fn translation_by_point_mass() {
        let mu = SpectralMeasure::semicircle(1.0, 1024).unwrap();
        let opts = SubordinationOptions::default();
        let r = free_add_convolve(&SpectralMeasure::point_mass(0.75), &mu, &opts).unwrap();
        let shifted = mu.affine_pushforward(1.0, 0.75).unwrap();
        let d = measure_distance(&r.measure, &shifted);
        assert!(d.wasserstein1 < 2.0 * opts.eta, "{d:?}");
        assert!(r.residual <= opts.tolerance);
    }

    #[test]
    fn semicircle_stability() {
        let mu = SpectralMeasure::semicircle(1.0, 2048).unwrap();
        let r = free_add_convolve(&mu, &mu, &SubordinationOptions::default()).unwrap();
        assert!(ks_against_cdf(&r.measure, semicircle_cdf(2.0)) < 0.02);
        assert!((r.measure.mean()).abs() < 1e-3);
        assert!((r.measure.variance() - 2.0).abs() < 1e-2);
        assert!(r.clipped_mass < 1e-4);
    }

    #[test]
    fn forced_failure_reports_residual() {
        let mu = SpectralMeasure::atomic([(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let opts = SubordinationOptions { max_iterations: 1, ..Default::default() };
        let err = free_add_convolve(&mu, &mu, &opts).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
        assert!(err.residual().unwrap() > 0.0);
    }

    #[test]
    fn free_sum_derivative_matches_finite_difference() {
        let mu = SpectralMeasure::atomic([(-1.0, 0.3), (0.5, 0.7)]).unwrap();
        let nu = SpectralMeasure::atomic([(0.0, 0.5), (2.0, 0.5)]).unwrap();
        let s = FreeSum::new(&mu, &nu);
        let z = Complex64::new(0.4, 0.5);
        let e = 1e-5;
        let fd = (s.cauchy(z + e) - s.cauchy(z - e)) / (2.0 * e);
        let (_, dg) = s.cauchy_with_derivative(z);
        assert!((fd - dg).norm() < 1e-6, "{fd} vs {dg}");
    }

    #[test]
    fn iterated_single_and_errors() {
        let opts = SubordinationOptions::default();
        assert!(matches!(iterated_convolve(&[], &opts), Err(Error::Empty { .. })));
        let g = SpectralMeasure::semicircle(1.0, 256).unwrap();
        assert_eq!(iterated_convolve(std::slice::from_ref(&g), &opts).unwrap().measure, g);
        let a = SpectralMeasure::atomic([(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let bad = SubordinationOptions { max_iterations: 1, ..opts };
        let err = iterated_convolve(&[a.clone(), a.clone(), a], &bad).unwrap_err();
        assert!(matches!(err, Error::AtFold { index: 1, .. }));
    }
}
