use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{check_same_dim, trace_inner, GeneralOperator, OperatorView, SelfAdjointOperator};
use crate::{Error, Result};

/// `Re φ(Q K_j^H)` for each key, optionally divided by `√dim`.
///
/// For self-adjoint inputs the trace inner product is real; for general ones
/// the real part is the score.
pub fn similarity_scores<Q, K>(query: &Q, keys: &[K], scale_by_sqrt_dim: bool) -> Result<Vec<f64>>
where
    Q: OperatorView + ?Sized,
    K: OperatorView,
{
    if keys.is_empty() {
        return Err(Error::Empty { what: "key list" });
    }
    let scale = if scale_by_sqrt_dim { 1.0 / (query.dim() as f64).sqrt() } else { 1.0 };
    keys.iter()
        .enumerate()
        .map(|(j, k)| Ok(trace_inner(&query, k).map_err(|e| e.at_index(j))?.re * scale))
        .collect()
}

/// Softmax with the maximum subtracted first.
pub fn attention_weights(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::Empty { what: "score list" });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("score {i} is not finite: {}", scores[i])));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// `Σ_j α_j V_j` for any operators.
pub fn weighted_sum<V: OperatorView>(weights: &[f64], values: &[V]) -> Result<GeneralOperator> {
    let first = values.first().ok_or(Error::Empty { what: "value list" })?;
    if weights.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: values.len(), found: weights.len() });
    }
    let n = first.dim();
    let mut acc = Mat::<Complex64>::zeros(n, n);
    for (j, (v, &a)) in values.iter().zip(weights).enumerate() {
        check_same_dim(n, v.dim()).map_err(|e| e.at_index(j))?;
        let m = v.matrix();
        for c in 0..n {
            for r in 0..n {
                acc[(r, c)] += m[(r, c)] * a;
            }
        }
    }
    GeneralOperator::new(acc)
}

/// One query attending over a sequence of keys and values.
#[derive(Clone, Debug)]
pub struct AttentionContext {
    query: SelfAdjointOperator,
    keys: Vec<SelfAdjointOperator>,
    values: Vec<SelfAdjointOperator>,
    scores: Vec<f64>,
    weights: Vec<f64>,
}

impl AttentionContext {
    pub fn new(
        query: SelfAdjointOperator,
        keys: Vec<SelfAdjointOperator>,
        values: Vec<SelfAdjointOperator>,
    ) -> Result<Self> {
        Self::with_scaling(query, keys, values, false)
    }

    pub fn with_scaling(
        query: SelfAdjointOperator,
        keys: Vec<SelfAdjointOperator>,
        values: Vec<SelfAdjointOperator>,
        scale_by_sqrt_dim: bool,
    ) -> Result<Self> {
        if keys.is_empty() {
            return Err(Error::Empty { what: "key list" });
        }
        if keys.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: keys.len(), found: values.len() });
        }
        for (j, v) in values.iter().enumerate() {
            check_same_dim(query.dim(), v.dim()).map_err(|e| e.at_index(j))?;
        }
        let scores = similarity_scores(&query, &keys, scale_by_sqrt_dim)?;
        let weights = attention_weights(&scores)?;
        Ok(Self { query, keys, values, scores, weights })
    }

    pub fn query(&self) -> &SelfAdjointOperator {
        &self.query
    }

    pub fn keys(&self) -> &[SelfAdjointOperator] {
        &self.keys
    }

    pub fn values(&self) -> &[SelfAdjointOperator] {
        &self.values
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// `A = Σ_j α_j V_j`, self-adjoint since the weights are real.
pub fn attention_output(ctx: &AttentionContext) -> Result<SelfAdjointOperator> {
    if ctx.values.len() == 1 {
        return Ok(ctx.values[0].clone());
    }
    let sum = weighted_sum(&ctx.weights, &ctx.values)?;
    Ok(SelfAdjointOperator::from_hermitian_part(sum.matrix()))
}

/// The four trace terms of `φ((X_q + P_q)(X_k + P_k)^H)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionalTerms {
    /// `φ(X_q X_k^H)`
    pub semantic: f64,
    /// `φ(X_q P_k^H)`
    pub semantic_positional: f64,
    /// `φ(P_q X_k^H)`
    pub positional_semantic: f64,
    /// `φ(P_q P_k^H)`
    pub positional: f64,
}

impl PositionalTerms {
    pub fn total(&self) -> f64 {
        self.semantic + self.semantic_positional + self.positional_semantic + self.positional
    }
}

/// Real parts of the four cross terms.
pub fn positional_decomposition(
    xq: &impl OperatorView,
    pq: &impl OperatorView,
    xk: &impl OperatorView,
    pk: &impl OperatorView,
) -> Result<PositionalTerms> {
    let n = xq.dim();
    for d in [pq.dim(), xk.dim(), pk.dim()] {
        check_same_dim(n, d)?;
    }
    Ok(PositionalTerms {
        semantic: trace_inner(xq, xk)?.re,
        semantic_positional: trace_inner(xq, pk)?.re,
        positional_semantic: trace_inner(pq, xk)?.re,
        positional: trace_inner(pq, pk)?.re,
    })
}

/// `(P + P^H) / 2`.
pub fn symmetrize(p: &impl OperatorView) -> SelfAdjointOperator {
    SelfAdjointOperator::from_hermitian_part(p.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_operator, demo_shift, demo_vocabulary, random_hermitian, OperatorSpec};
    use crate::rng;

    fn token(label: &str) -> SelfAdjointOperator {
        let spec = demo_vocabulary().into_iter().find(|s| s.label.as_deref() == Some(label)).unwrap();
        spec.build_self_adjoint().unwrap()
    }

    #[test]
    fn identity_key_gives_trace() {
        let q = token("cat");
        let s = similarity_scores(&q, &[SelfAdjointOperator::identity(5)], false).unwrap();
        assert!((s[0] - 0.28).abs() < 1e-15);
    }

    #[test]
    fn cat_dog_score() {
        let s = similarity_scores(&token("cat"), &[token("dog")], false).unwrap();
        assert!((s[0] - 0.206).abs() < 1e-15);
        let scaled = similarity_scores(&token("cat"), &[token("dog")], true).unwrap();
        assert!((scaled[0] - 0.206 / 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn softmax_closed_forms() {
        assert_eq!(attention_weights(&[0.3; 4]).unwrap(), vec![0.25; 4]);
        let w = attention_weights(&[0.0, 3f64.ln()]).unwrap();
        assert!((w[0] - 0.25).abs() < 1e-15 && (w[1] - 0.75).abs() < 1e-15);
        let scores = [0.1, -2.0, 0.7];
        let a = attention_weights(&scores).unwrap();
        let b = attention_weights(&scores.map(|s| s + 100.0)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(attention_weights(&[1.0, f64::NAN]).is_err());
        assert!(attention_weights(&[1e308, -1e308]).unwrap()[0] == 1.0);
    }

    #[test]
    fn single_value_passes_through() {
        let v = token("ball");
        let ctx = AttentionContext::new(token("cat"), vec![token("dog")], vec![v.clone()]).unwrap();
        assert_eq!(attention_output(&ctx).unwrap().diagonal_entries(), v.diagonal_entries());
    }

    #[test]
    fn output_is_weighted_token_average() {
        let seq = ["the", "cat", "chases", "the", "ball"];
        let toks: Vec<_> = seq.iter().map(|s| token(s)).collect();
        let q = SelfAdjointOperator::identity(5).scale(0.2);
        let ctx = AttentionContext::new(q, toks.clone(), toks.clone()).unwrap();
        let out = attention_output(&ctx).unwrap().diagonal_entries();
        for (i, got) in out.iter().enumerate() {
            let want: f64 = ctx.weights().iter().zip(&toks).map(|(a, t)| a * t.diagonal_entries()[i]).sum();
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let t = token("cat");
        assert!(AttentionContext::new(t.clone(), vec![t.clone()], vec![]).is_err());
        assert!(AttentionContext::new(t.clone(), vec![], vec![]).is_err());
        let big = SelfAdjointOperator::identity(6);
        assert!(AttentionContext::new(t.clone(), vec![t], vec![big]).is_err());
    }

    #[test]
    fn decomposition_without_positions_is_semantic() {
        let z = GeneralOperator::zeros(5);
        let d = positional_decomposition(&token("cat"), &z, &token("dog"), &z).unwrap();
        assert_eq!((d.semantic_positional, d.positional_semantic, d.positional), (0.0, 0.0, 0.0));
        assert!((d.semantic - 0.206).abs() < 1e-15);
    }

    #[test]
    fn decomposition_sums_to_direct_score() {
        let mut r = rng::stream(3, &[]);
        for _ in 0..20 {
            let ops: Vec<_> = (0..4).map(|_| random_hermitian(7, &mut r)).collect();
            let d = positional_decomposition(&ops[0], &ops[1], &ops[2], &ops[3]).unwrap();
            let q = ops[0].add(&ops[1]).unwrap();
            let k = ops[2].add(&ops[3]).unwrap();
            let direct = similarity_scores(&q, &[k], false).unwrap()[0];
            assert!((d.total() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn positions_separate_identical_tokens() {
        let cat = token("cat");
        let p1 = symmetrize(&build_operator(&demo_shift()).unwrap());
        let p2 = symmetrize(&build_operator(&OperatorSpec::new(5, crate::algebra::OperatorKind::Shift, vec![2.0])).unwrap());
        let q = cat.add(&p1).unwrap();
        let s = similarity_scores(&q, &[cat.add(&p1).unwrap(), cat.add(&p2).unwrap()], false).unwrap();
        assert!((s[0] - s[1]).abs() > 1e-3);
    }
}
