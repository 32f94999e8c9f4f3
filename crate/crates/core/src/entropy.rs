//! Logit operators, free entropy and the entropy-based generalization bound.

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{check_same_dim, haar_conjugate_with, trace_of_product, OperatorView, SelfAdjointOperator};
use crate::attention::attention_weights;
use crate::spectra::{
    silverman_bandwidth, spectral_entropy_with, spectral_measure, GriddedMeasure, KdeOptions, SpectralMeasure,
};
use crate::{rng, Error, Result};

/// `L = Σ_i X_i H X_i`.
pub fn logit_operator(tokens: &[SelfAdjointOperator], ht: &SelfAdjointOperator) -> Result<SelfAdjointOperator> {
    if tokens.is_empty() {
        return Err(Error::Empty { what: "token list" });
    }
    let n = ht.dim();
    let mut acc = Mat::<Complex64>::zeros(n, n);
    for (i, x) in tokens.iter().enumerate() {
        check_same_dim(n, x.dim()).map_err(|e| e.at_index(i))?;
        let xh = x.matrix() * ht.matrix();
        acc += &xh * x.matrix();
    }
    Ok(SelfAdjointOperator::from_hermitian_part(acc.as_ref()))
}

/// `softmax(φ(X_i L))` over the vocabulary.
pub fn token_readout(lt: &SelfAdjointOperator, tokens: &[SelfAdjointOperator]) -> Result<Vec<f64>> {
    if tokens.is_empty() {
        return Err(Error::Empty { what: "vocabulary" });
    }
    let logits = tokens
        .iter()
        .enumerate()
        .map(|(i, x)| Ok(trace_of_product(x, lt).map_err(|e| e.at_index(i))?.re))
        .collect::<Result<Vec<f64>>>()?;
    attention_weights(&logits)
}

/// `R_train + (C / √n)(χ + 1)`.
pub fn generalization_bound(r_train: f64, n: usize, chi: f64, c: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count n must be positive".into()));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("constant C must be positive, got {c}")));
    }
    Ok(r_train + c / (n as f64).sqrt() * (chi + 1.0))
}

const FREE_ENTROPY_CONSTANT: f64 = 0.75;

fn entropy_constant() -> f64 {
    FREE_ENTROPY_CONSTANT + 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// `∫₀¹∫₀¹ log|k + u - v| du dv`.
fn cell_kernel(k: usize) -> f64 {
    if k == 0 {
        return -1.5;
    }
    let kf = k as f64;
    if k < 8 {
        let g = |x: f64| if x == 0.0 { 0.0 } else { 0.5 * x * x * x.abs().ln() - 0.75 * x * x };
        return g(kf + 1.0) - 2.0 * g(kf) + g(kf - 1.0);
    }
    let inv2 = 1.0 / (kf * kf);
    let mut p = 1.0;
    let mut s = kf.ln();
    for m in 1..=8 {
        p *= inv2;
        let mf = m as f64;
        s -= p / (mf * (2.0 * mf + 1.0) * (2.0 * mf + 2.0));
    }
    s
}

fn gridded_log_energy(g: &GriddedMeasure) -> f64 {
    let h = g.step();
    let d = g.density();
    let cells: Vec<f64> = d.windows(2).map(|w| 0.5 * (w[0] + w[1]) * h).collect();
    let total: f64 = cells.iter().sum();
    let m = cells.len();
    let kernel: Vec<f64> = (0..m).map(cell_kernel).collect();
    let rows: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|a| {
            if cells[a] == 0.0 {
                return 0.0;
            }
            let inner: f64 = (0..m).filter(|&b| cells[b] != 0.0).map(|b| cells[b] * kernel[a.abs_diff(b)]).sum();
            cells[a] * inner
        })
        .collect();
    rows.iter().sum::<f64>() / (total * total) + h.ln()
}

fn atomic_log_energy(locs: &[f64], weights: &[f64]) -> f64 {
    let rows: Vec<f64> = (0..locs.len())
        .into_par_iter()
        .map(|i| {
            let inner: f64 = (0..locs.len())
                .filter(|&j| j != i)
                .map(|j| weights[j] * (locs[i] - locs[j]).abs().ln())
                .sum();
            weights[i] * inner
        })
        .collect();
    rows.iter().sum()
}

/// `χ(μ) = ∬ log|s - t| dμ(s) dμ(t) + 3/4 + ½ log 2π`.
///
/// Atomic measures drop the diagonal `s = t` terms. Gridded measures use the
/// exact log-kernel average between grid cells, with each cell carrying its
/// trapezoid mass uniformly.
pub fn free_entropy_single(mu: &SpectralMeasure) -> Result<f64> {
    let energy = match mu {
        SpectralMeasure::Atomic(a) => {
            if a.len() < 2 {
                return Err(Error::Divergent);
            }
            atomic_log_energy(a.locations(), a.weights())
        }
        SpectralMeasure::Gridded(g) => gridded_log_energy(g),
    };
    Ok(energy + entropy_constant())
}

/// `Σ_i χ(μ_i)`: free entropy of freely independent variables adds.
pub fn joint_free_entropy_free(measures: &[SpectralMeasure]) -> Result<f64> {
    if measures.is_empty() {
        return Err(Error::Empty { what: "measure list" });
    }
    measures.iter().enumerate().try_fold(0.0, |acc, (i, mu)| Ok(acc + free_entropy_single(mu).map_err(|e| e.at_index(i))?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub r_train: f64,
    pub n: usize,
    pub c: f64,
}

impl Default for BoundInputs {
    fn default() -> Self {
        Self { r_train: 0.0, n: 1000, c: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    #[serde(flatten)]
    pub inputs: BoundInputs,
    pub value: f64,
}

/// Mean spectral entropy recomputed at scaled KDE bandwidths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSensitivity {
    pub half_bandwidth_mean: Option<f64>,
    pub double_bandwidth_mean: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub timesteps: usize,
    /// `H(μ_{L_t})` per time step; `None` where the entropy is undefined.
    pub entropies: Vec<Option<f64>>,
    pub skipped: usize,
    pub mean_entropy: Option<f64>,
    /// Joint free entropy of the tokens, assuming freeness.
    pub chi: Option<f64>,
    /// `mean_entropy - chi`, signed.
    pub gap: Option<f64>,
    /// Time steps with `H(μ_{L_t}) > χ`.
    pub violations: usize,
    pub bandwidth_sensitivity: BandwidthSensitivity,
    pub bound: Option<BoundReport>,
    pub warnings: Vec<String>,
}

/// Report plus the logit spectra it was computed from.
#[derive(Clone, Debug)]
pub struct EntropyRun {
    pub report: EntropyReport,
    pub logit_spectra: Vec<SpectralMeasure>,
}

fn mean_of(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, count) = xs.flatten().fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn entropy_at_scale(mu: &SpectralMeasure, factor: f64, points: usize) -> Option<f64> {
    let a = mu.as_atomic()?;
    if a.len() < 2 {
        return None;
    }
    let h = silverman_bandwidth(a) * factor;
    spectral_entropy_with(mu, KdeOptions { bandwidth: Some(h), points }).ok()
}

/// Compares the mean spectral entropy of `L_t = Σ X_i H_t X_i` with the free
/// entropy of the tokens.
///
/// `H_t` is `ht` conjugated by a Haar unitary drawn from stream `[t]` of
/// `seed`. Time steps whose logit spectrum is a point mass are skipped; a
/// divergent `χ` leaves the gap and bound undefined. Neither case is an error.
pub fn entropy_gap_experiment(
    tokens: &[SelfAdjointOperator],
    ht: &SelfAdjointOperator,
    timesteps: usize,
    seed: u64,
    kde: KdeOptions,
    bound: BoundInputs,
) -> Result<EntropyRun> {
    if tokens.is_empty() {
        return Err(Error::Empty { what: "token list" });
    }
    for (i, x) in tokens.iter().enumerate() {
        check_same_dim(ht.dim(), x.dim()).map_err(|e| e.at_index(i))?;
    }
    let mut warnings = Vec::new();
    let token_measures = tokens.iter().map(spectral_measure).collect::<Result<Vec<_>>>()?;
    let chi = match joint_free_entropy_free(&token_measures) {
        Ok(c) => Some(c),
        Err(e) if matches!(e.root(), Error::Divergent) => {
            warnings.push(format!("free entropy diverges: {e}"));
            None
        }
        Err(e) => return Err(e),
    };

    let spectra = (0..timesteps)
        .into_par_iter()
        .map(|t| {
            let h = haar_conjugate_with(ht, &mut rng::stream(seed, &[t as u64]));
            let lt = logit_operator(tokens, &h)?;
            spectral_measure(&lt).map_err(|e| e.at_index(t))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut entropies = Vec::with_capacity(timesteps);
    let mut skipped = 0;
    for (t, mu) in spectra.iter().enumerate() {
        match spectral_entropy_with(mu, kde) {
            Ok(h) => entropies.push(Some(h)),
            Err(Error::SingularMeasure) => {
                skipped += 1;
                warnings.push(format!("time step {t}: logit spectrum is a point mass, entropy skipped"));
                entropies.push(None);
            }
            Err(e) => return Err(e.at_index(t)),
        }
    }
    let mean_entropy = mean_of(entropies.iter().copied());
    let gap = mean_entropy.zip(chi).map(|(m, c)| m - c);
    let violations = chi.map_or(0, |c| entropies.iter().flatten().filter(|&&h| h > c).count());
    let bandwidth_sensitivity = BandwidthSensitivity {
        half_bandwidth_mean: mean_of(spectra.iter().map(|mu| entropy_at_scale(mu, 0.5, kde.points))),
        double_bandwidth_mean: mean_of(spectra.iter().map(|mu| entropy_at_scale(mu, 2.0, kde.points))),
    };
    let bound = match chi {
        Some(c) => Some(BoundReport { inputs: bound, value: generalization_bound(bound.r_train, bound.n, c, bound.c)? }),
        None => None,
    };
    Ok(EntropyRun {
        report: EntropyReport {
            timesteps,
            entropies,
            skipped,
            mean_entropy,
            chi,
            gap,
            violations,
            bandwidth_sensitivity,
            bound,
            warnings,
        },
        logit_spectra: spectra,
    })
}
