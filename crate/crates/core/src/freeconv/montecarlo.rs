//! Random-matrix oracles: spectra of `A + U B U*` and moments of `Q U K U*`
//! with `U` Haar distributed.

use faer::{c64, Mat, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{haar_unitary, OperatorView, SelfAdjointOperator};
use crate::rng;
use crate::spectra::{AtomicMeasure, SpectralMeasure};
use crate::{Error, Result};

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    Ok(())
}

/// Eigenvalues of `diag(a) + U diag(b) U*`.
///
/// Conjugating both summands by the eigenbasis of `A` leaves the spectrum
/// unchanged and `U` stays Haar, so only the two spectra matter.
pub fn haar_sum_eigenvalues(a: &[f64], b: &[f64], u: &Mat<c64>) -> Result<Vec<f64>> {
    let n = a.len();
    let ub = Mat::from_fn(n, n, |i, j| u[(i, j)] * b[j]);
    let mut m = &ub * u.adjoint();
    for i in 0..n {
        m[(i, i)] += a[i];
    }
    let mut eigs: Vec<f64> = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    eigs.sort_by(f64::total_cmp);
    Ok(eigs)
}

/// Pooled eigenvalues of `A + U_t B U_t*` over independent Haar `U_t`.
///
/// Trial `t` draws from stream `[t]` of `seed`; pooling is in trial order so
/// the result does not depend on the thread count. When `B = 0` the result is
/// exactly the spectral measure of `A`.
pub fn monte_carlo_free_sum(
    a: &SelfAdjointOperator,
    b: &SelfAdjointOperator,
    trials: usize,
    seed: u64,
) -> Result<SpectralMeasure> {
    crate::algebra::check_same_dim(a.dim(), b.dim())?;
    check_trials(trials)?;
    let ea = a.eigenvalues()?;
    let eb = b.eigenvalues()?;
    monte_carlo_from_spectra(&ea, &eb, trials, seed)
}

/// [`monte_carlo_free_sum`] from the two spectra directly.
pub fn monte_carlo_from_spectra(a: &[f64], b: &[f64], trials: usize, seed: u64) -> Result<SpectralMeasure> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    if a.is_empty() {
        return Err(Error::Empty { what: "spectrum" });
    }
    check_trials(trials)?;
    if b.iter().all(|&x| x == 0.0) {
        return Ok(SpectralMeasure::Atomic(AtomicMeasure::from_samples(a)?));
    }
    let n = a.len();
    let runs: Vec<Result<Vec<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, &[t as u64]);
            let u = haar_unitary(n, &mut r);
            haar_sum_eigenvalues(a, b, &u).map_err(|e| e.at_index(t))
        })
        .collect();
    let mut pooled = Vec::with_capacity(n * trials);
    for r in runs {
        pooled.extend(r?);
    }
    Ok(SpectralMeasure::Atomic(AtomicMeasure::from_samples(&pooled)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductSpectrumReport {
    /// Empirical mean over trials of `φ(Q U K U*)`.
    pub product_moment: f64,
    /// Mean of `μ_Q ⊞ μ_K`, i.e. `φ(Q) + φ(K)`.
    pub sum_prediction_mean: f64,
    /// `sum_prediction_mean - product_moment`.
    pub gap: f64,
    pub trials: usize,
}

/// Compares the first moment of the free product `Q U K U*` with the mean the
/// additive prediction would give.
///
/// For freely independent `Q, K` one has `φ(QK) = φ(Q) φ(K)`, which differs
/// from `φ(Q) + φ(K)` whenever the means are not both zero.
pub fn product_spectrum_report(
    q: &SelfAdjointOperator,
    k: &SelfAdjointOperator,
    trials: usize,
    seed: u64,
) -> Result<ProductSpectrumReport> {
    crate::algebra::check_same_dim(q.dim(), k.dim())?;
    check_trials(trials)?;
    let eq = q.eigenvalues()?;
    let ek = k.eigenvalues()?;
    let n = eq.len();
    let moments: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, &[t as u64]);
            let w = haar_unitary(n, &mut r);
            // φ(D_q W D_k W*) = (1/N) Σ_ij q_i |W_ij|² k_j
            let mut s = 0.0;
            for j in 0..n {
                let col: f64 = (0..n).map(|i| eq[i] * w[(i, j)].norm_sqr()).sum();
                s += col * ek[j];
            }
            s / n as f64
        })
        .collect();
    let product_moment = moments.iter().sum::<f64>() / trials as f64;
    let sum_prediction_mean = (eq.iter().sum::<f64>() + ek.iter().sum::<f64>()) / n as f64;
    Ok(ProductSpectrumReport {
        product_moment,
        sum_prediction_mean,
        gap: sum_prediction_mean - product_moment,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::measure_distance;

    #[test]
    fn zero_summand_returns_first_spectrum() {
        let a = SelfAdjointOperator::diagonal(&[1.0, 2.0, 2.0, 5.0]);
        let z = SelfAdjointOperator::zeros(4);
        let mc = monte_carlo_free_sum(&a, &z, 3, 7).unwrap();
        let want = SpectralMeasure::atomic([(1.0, 0.25), (2.0, 0.5), (5.0, 0.25)]).unwrap();
        assert_eq!(measure_distance(&mc, &want).wasserstein1, 0.0);
    }

    #[test]
    fn trace_is_preserved() {
        let a = SelfAdjointOperator::diagonal(&[1.0, -1.0, 0.5, 0.0, 2.0]);
        let b = SelfAdjointOperator::diagonal(&[0.3, 0.3, -0.2, 1.0, 0.0]);
        let mc = monte_carlo_free_sum(&a, &b, 4, 1).unwrap();
        assert!((mc.mean() - (2.5 + 1.4) / 5.0).abs() < 1e-12);
    }

    #[test]
    fn seeded_runs_repeat() {
        let a = SelfAdjointOperator::diagonal(&[1.0, -1.0, 0.0]);
        let b = SelfAdjointOperator::diagonal(&[0.0, 1.0, 2.0]);
        let x = monte_carlo_free_sum(&a, &b, 5, 11).unwrap();
        let y = monte_carlo_free_sum(&a, &b, 5, 11).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn identity_factor_gives_trace() {
        let q = SelfAdjointOperator::diagonal(&[0.5, 1.5, -1.0, 3.0]);
        let k = SelfAdjointOperator::identity(4);
        let r = product_spectrum_report(&q, &k, 3, 0).unwrap();
        assert!((r.product_moment - 1.0).abs() < 1e-12);
        assert!((r.gap - 1.0).abs() < 1e-12);
    }
}
