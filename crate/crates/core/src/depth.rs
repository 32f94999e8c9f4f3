//! Layer-by-layer free addition: `X^{(ℓ)} = X^{(ℓ-1)} + A^{(ℓ)}`.
//!
//! The empirical side rotates every increment by an independent Haar unitary
//! and pools eigenvalues over trials; the predicted side folds `⊞` over the
//! increment laws.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{check_same_dim, haar_unitary, OperatorSpec, OperatorView, SelfAdjointOperator};
use crate::freeconv::{free_add_convolve, haar_sum_eigenvalues, SubordinationOptions};
use crate::spectra::{measure_distance, spectral_entropy, spectral_measure, AtomicMeasure, SpectralMeasure};
use crate::{rng, Error, Result};

pub const DEFAULT_W1_TOLERANCE: f64 = 0.08;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StackConfig {
    pub dim: usize,
    pub initial: OperatorSpec,
    /// One spec per layer; an empty list is a depth-0 stack.
    pub increments: Vec<OperatorSpec>,
    pub trials: usize,
    pub seed: u64,
}

impl StackConfig {
    pub fn layers(&self) -> usize {
        self.increments.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidArgument(format!("dimension must be at least 2, got {}", self.dim)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("at least one trial is required".into()));
        }
        Ok(())
    }

    /// Builds the initial operator and the increments at `dim`. Randomized
    /// specs without a seed get one derived from the master seed and layer.
    pub fn build(&self) -> Result<(SelfAdjointOperator, Vec<SelfAdjointOperator>)> {
        self.validate()?;
        let resolve = |spec: &OperatorSpec, layer: usize| -> Result<SelfAdjointOperator> {
            let mut spec = spec.clone().with_dim(self.dim);
            if spec.seed.is_none() && spec.kind.is_randomized() {
                spec.seed = Some(rng::stream(self.seed, &[u64::MAX, layer as u64]).random());
            }
            spec.build_self_adjoint().map_err(|e| e.at_layer(layer))
        };
        let initial = resolve(&self.initial, 0)?;
        let increments = self.increments.iter().enumerate().map(|(i, s)| resolve(s, i + 1)).collect::<Result<_>>()?;
        Ok((initial, increments))
    }
}

/// Pooled empirical spectra for layers `0..=L`.
///
/// Trial `t`, layer `ℓ` draws its Haar unitary from stream `[t, ℓ]`. Only the
/// current spectrum is carried between layers: adding a Haar-rotated
/// increment to `V diag(λ) V*` has the same law as adding it to `diag(λ)`.
pub fn propagate_operators(
    initial: &SelfAdjointOperator,
    increments: &[SelfAdjointOperator],
    trials: usize,
    seed: u64,
) -> Result<Vec<SpectralMeasure>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    let n = initial.dim();
    let start = initial.eigenvalues()?;
    let inc_spectra = increments
        .iter()
        .enumerate()
        .map(|(i, a)| {
            check_same_dim(n, a.dim())
                .and_then(|_| a.eigenvalues())
                .map_err(|e| e.at_layer(i + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    let runs: Vec<Result<Vec<Vec<f64>>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut layers = vec![start.clone()];
            for (l, b) in inc_spectra.iter().enumerate() {
                let prev = layers.last().expect("layer 0 present");
                let next = if b.iter().all(|&x| x == 0.0) {
                    prev.clone()
                } else {
                    let u = haar_unitary(n, &mut rng::stream(seed, &[t as u64, (l + 1) as u64]));
                    haar_sum_eigenvalues(prev, b, &u).map_err(|e| e.at_layer(l + 1))?
                };
                layers.push(next);
            }
            Ok(layers)
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    (0..=increments.len())
        .map(|l| {
            let pooled: Vec<f64> = runs.iter().flat_map(|r| r[l].iter().copied()).collect();
            Ok(SpectralMeasure::Atomic(AtomicMeasure::from_samples(&pooled)?))
        })
        .collect()
}

pub fn propagate(config: &StackConfig) -> Result<Vec<SpectralMeasure>> {
    let (initial, increments) = config.build()?;
    propagate_operators(&initial, &increments, config.trials, config.seed)
}

/// Predicted laws `μ_ℓ = μ_0 ⊞ μ_{A_1} ⊞ ⋯ ⊞ μ_{A_ℓ}` with solver diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub measures: Vec<SpectralMeasure>,
    pub iterations: usize,
    pub residual: f64,
}

/// Folds `⊞` over increment laws. A point-mass increment is an exact shift.
pub fn predict_measures(
    initial: &SpectralMeasure,
    increments: &[SpectralMeasure],
    opts: &SubordinationOptions,
) -> Result<Prediction> {
    let mut measures = vec![initial.clone()];
    let (mut iterations, mut residual) = (0, 0.0f64);
    for (i, inc) in increments.iter().enumerate() {
        let prev = measures.last().expect("layer 0 present");
        let next = match inc.as_atomic() {
            Some(a) if a.len() == 1 => prev.affine_pushforward(1.0, a.locations()[0])?,
            _ => {
                let r = free_add_convolve(prev, inc, opts).map_err(|e| e.at_layer(i + 1))?;
                iterations = iterations.max(r.iterations);
                residual = residual.max(r.residual);
                r.measure
            }
        };
        measures.push(next);
    }
    Ok(Prediction { measures, iterations, residual })
}

pub fn predict(config: &StackConfig, opts: &SubordinationOptions) -> Result<Prediction> {
    let (initial, increments) = config.build()?;
    let mu0 = spectral_measure(&initial)?;
    let laws = increments
        .iter()
        .enumerate()
        .map(|(i, a)| spectral_measure(a).map_err(|e| e.at_layer(i + 1)))
        .collect::<Result<Vec<_>>>()?;
    predict_measures(&mu0, &laws, opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerRow {
    pub layer: usize,
    pub mean: f64,
    pub variance: f64,
    /// Spectral entropy of the empirical law; `None` for a point mass.
    pub entropy: Option<f64>,
    pub predicted_mean: f64,
    pub predicted_variance: f64,
    pub w1: f64,
    pub ks: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthSummary {
    pub max_w1: f64,
    pub tolerance: f64,
    /// Layers whose W1 exceeds the tolerance.
    pub flagged_layers: Vec<usize>,
    /// Whether the defined entropies never decrease with depth.
    pub entropy_nondecreasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthReport {
    pub rows: Vec<LayerRow>,
    pub summary: DepthSummary,
}

pub fn depth_report(empirical: &[SpectralMeasure], predicted: &[SpectralMeasure], tolerance: f64) -> Result<DepthReport> {
    if empirical.len() != predicted.len() {
        return Err(Error::DimensionMismatch { expected: empirical.len(), found: predicted.len() });
    }
    if empirical.is_empty() {
        return Err(Error::Empty { what: "trajectory" });
    }
    let rows = empirical
        .par_iter()
        .zip(predicted.par_iter())
        .enumerate()
        .map(|(layer, (e, p))| {
            let d = measure_distance(e, p);
            let entropy = match spectral_entropy(e) {
                Ok(h) => Some(h),
                Err(Error::SingularMeasure) => None,
                Err(err) => return Err(err.at_layer(layer)),
            };
            Ok(LayerRow {
                layer,
                mean: e.mean(),
                variance: e.variance(),
                entropy,
                predicted_mean: p.mean(),
                predicted_variance: p.variance(),
                w1: d.wasserstein1,
                ks: d.kolmogorov_smirnov,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_w1 = rows.iter().map(|r| r.w1).fold(0.0, f64::max);
    let flagged_layers = rows.iter().filter(|r| r.w1 > tolerance).map(|r| r.layer).collect();
    let defined: Vec<f64> = rows.iter().filter_map(|r| r.entropy).collect();
    let entropy_nondecreasing = defined.windows(2).all(|w| w[1] >= w[0]);
    Ok(DepthReport { rows, summary: DepthSummary { max_w1, tolerance, flagged_layers, entropy_nondecreasing } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::OperatorKind;

    fn config(dim: usize, increments: Vec<OperatorSpec>, trials: usize) -> StackConfig {
        StackConfig { dim, initial: OperatorSpec::diag(&[-1.0, 1.0]), increments, trials, seed: 4 }
    }

    #[test]
    fn zero_increment_keeps_spectrum() {
        let c = config(20, vec![OperatorSpec::diag(&[0.0])], 3);
        let e = propagate(&c).unwrap();
        assert_eq!(e[0], e[1]);
        let p = predict(&c, &SubordinationOptions::default()).unwrap();
        assert_eq!(p.measures[0], p.measures[1]);
    }

    #[test]
    fn traces_add_exactly() {
        let incs = vec![OperatorSpec::diag(&[0.0, 2.0]), OperatorSpec::diag(&[-0.5, 0.1, 0.3, 1.0])];
        let c = config(40, incs, 4);
        let e = propagate(&c).unwrap();
        assert!((e[1].mean() - 1.0).abs() < 1e-10);
        assert!((e[2].mean() - 1.225).abs() < 1e-10);
    }

    #[test]
    fn predicted_variance_adds() {
        let incs = vec![OperatorSpec::diag(&[0.0, 2.0]), OperatorSpec::diag(&[-1.0, 0.0, 0.5, 1.5])];
        let p = predict(&config(4, incs, 1), &SubordinationOptions::default()).unwrap();
        let want = [1.0, 2.0, 2.0 + 0.8125];
        for (l, m) in p.measures.iter().enumerate() {
            assert!((m.variance() - want[l]).abs() < (l as f64) * 1e-2 + 1e-12, "{l}: {}", m.variance());
        }
    }

    #[test]
    fn report_against_itself_is_zero() {
        let incs = vec![OperatorSpec::diag(&[0.0, 1.0])];
        let p = predict(&config(2, incs, 1), &SubordinationOptions::default()).unwrap();
        let r = depth_report(&p.measures, &p.measures, DEFAULT_W1_TOLERANCE).unwrap();
        assert!(r.rows.iter().all(|row| row.w1 == 0.0 && row.ks == 0.0));
        assert!(r.summary.flagged_layers.is_empty());
        assert!(depth_report(&p.measures, &p.measures[..1], 0.1).is_err());
    }

    #[test]
    fn randomized_increments_get_derived_seeds() {
        let inc = OperatorSpec::new(10, OperatorKind::SemicircleSample, vec![]);
        let c = config(10, vec![inc], 2);
        let (_, a) = c.build().unwrap();
        let (_, b) = c.build().unwrap();
        assert_eq!(a[0].diagonal_entries(), b[0].diagonal_entries());
    }

    #[test]
    fn bad_spec_names_layer() {
        let c = config(10, vec![OperatorSpec::diag(&[1.0, 2.0, 3.0])], 1);
        assert!(matches!(propagate(&c), Err(Error::AtLayer { layer: 1, .. })));
    }
}
