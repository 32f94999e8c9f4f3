use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::haar::{conjugate_diagonal, gue, haar_unitary};
use super::operator::{GeneralOperator, Operator, SelfAdjointOperator};
use crate::{rng, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// Real diagonal. `values` has length `dim` or a divisor `k` of `dim`, in
    /// which case each value fills a block of `dim / k` consecutive entries.
    Diag,
    /// Row-major `dim * dim` entries, real numbers or `[re, im]` pairs.
    Dense,
    /// Ones on the `k`-th superdiagonal; `values` is empty (`k = 1`) or `[k]`.
    Shift,
    /// `U diag(values) U^H` with `U` Haar; `values` as for `Diag`.
    HaarConjugatedDiag,
    /// GUE sample; `values` is empty (variance 1) or `[variance]`.
    SemicircleSample,
    /// Diagonal of independent signs, `+1` with probability `p`; `values` is
    /// empty (`p = 1/2`) or `[p]`.
    BernoulliSample,
}

impl OperatorKind {
    pub fn is_randomized(self) -> bool {
        matches!(self, Self::HaarConjugatedDiag | Self::SemicircleSample | Self::BernoulliSample)
    }

    fn name(self) -> &'static str {
        match self {
            Self::Diag => "diag",
            Self::Dense => "dense",
            Self::Shift => "shift",
            Self::HaarConjugatedDiag => "haar_conjugated_diag",
            Self::SemicircleSample => "semicircle_sample",
            Self::BernoulliSample => "bernoulli_sample",
        }
    }
}

/// A spec value: a real number or a complex `[re, im]` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecValue {
    Real(f64),
    Complex([f64; 2]),
}

impl SpecValue {
    pub fn to_complex(self) -> Complex64 {
        match self {
            SpecValue::Real(x) => Complex64::new(x, 0.0),
            SpecValue::Complex([re, im]) => Complex64::new(re, im),
        }
    }

    fn to_real(self) -> Result<f64> {
        match self {
            SpecValue::Real(x) => Ok(x),
            SpecValue::Complex([re, 0.0]) => Ok(re),
            SpecValue::Complex(_) => Err(Error::InvalidSpec("expected a real value".into())),
        }
    }
}

impl From<f64> for SpecValue {
    fn from(x: f64) -> Self {
        SpecValue::Real(x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub dim: usize,
    pub kind: OperatorKind,
    #[serde(default)]
    pub values: Vec<SpecValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl OperatorSpec {
    pub fn new(dim: usize, kind: OperatorKind, values: Vec<f64>) -> Self {
        Self { label: None, dim, kind, values: values.into_iter().map(SpecValue::Real).collect(), seed: None }
    }

    pub fn diag(values: &[f64]) -> Self {
        Self::new(values.len(), OperatorKind::Diag, values.to_vec())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    /// Builds and requires a self-adjoint result.
    pub fn build_self_adjoint(&self) -> Result<SelfAdjointOperator> {
        build_operator(self)?.into_self_adjoint()
    }

    fn reals(&self) -> Result<Vec<f64>> {
        self.values.iter().map(|v| v.to_real()).collect()
    }

    fn optional_parameter(&self, default: f64) -> Result<f64> {
        match self.values.as_slice() {
            [] => Ok(default),
            [v] => v.to_real(),
            _ => Err(self.invalid(format!("expects at most one value, got {}", self.values.len()))),
        }
    }

    fn tiled_diagonal(&self) -> Result<Vec<f64>> {
        let values = self.reals()?;
        let k = values.len();
        if k == 0 || !self.dim.is_multiple_of(k) {
            return Err(self.invalid(format!("{k} diagonal values do not tile dimension {}", self.dim)));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(self.invalid("non-finite diagonal value".into()));
        }
        let block = self.dim / k;
        Ok(values.iter().flat_map(|&v| std::iter::repeat_n(v, block)).collect())
    }

    fn invalid(&self, msg: String) -> Error {
        let label = self.label.as_deref().unwrap_or("<unlabeled>");
        Error::InvalidSpec(format!("{label} ({}): {msg}", self.kind.name()))
    }
}

/// Builds the operator described by `spec`. Randomized kinds draw from
/// stream 0 of their seed, so equal specs give bit-identical operators.
pub fn build_operator(spec: &OperatorSpec) -> Result<Operator> {
    if spec.dim == 0 {
        return Err(spec.invalid("dimension must be at least 1".into()));
    }
    let seed = if spec.kind.is_randomized() {
        Some(spec.seed.ok_or(Error::MissingSeed { kind: spec.kind.name() })?)
    } else {
        None
    };
    let n = spec.dim;
    let op = match spec.kind {
        OperatorKind::Diag => Operator::SelfAdjoint(SelfAdjointOperator::diagonal(&spec.tiled_diagonal()?)),
        OperatorKind::Dense => {
            if spec.values.len() != n * n {
                return Err(spec.invalid(format!("expects {} entries, got {}", n * n, spec.values.len())));
            }
            let g = GeneralOperator::from_fn(n, |i, j| spec.values[i * n + j].to_complex());
            if g.is_self_adjoint() {
                Operator::SelfAdjoint(g.hermitian_part())
            } else {
                Operator::General(g)
            }
        }
        OperatorKind::Shift => {
            let k = spec.optional_parameter(1.0)?;
            if k.fract() != 0.0 || k < 0.0 || k as usize >= n {
                return Err(spec.invalid(format!("shift offset {k} out of range")));
            }
            let k = k as usize;
            let one = Complex64::new(1.0, 0.0);
            let zero = Complex64::new(0.0, 0.0);
            let g = GeneralOperator::from_fn(n, |i, j| if j == i + k { one } else { zero });
            if k == 0 {
                Operator::SelfAdjoint(g.hermitian_part())
            } else {
                Operator::General(g)
            }
        }
        OperatorKind::HaarConjugatedDiag => {
            let d = spec.tiled_diagonal()?;
            let u = haar_unitary(n, &mut rng::stream(seed.unwrap(), &[]));
            let m = conjugate_diagonal(&u, &d);
            Operator::SelfAdjoint(SelfAdjointOperator::from_hermitian_part(m.as_ref()))
        }
        OperatorKind::SemicircleSample => {
            let variance = spec.optional_parameter(1.0)?;
            if !(variance > 0.0 && variance.is_finite()) {
                return Err(spec.invalid(format!("variance must be positive, got {variance}")));
            }
            Operator::SelfAdjoint(gue(n, variance, &mut rng::stream(seed.unwrap(), &[])))
        }
        OperatorKind::BernoulliSample => {
            use rand::Rng;
            let p = spec.optional_parameter(0.5)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(spec.invalid(format!("probability {p} outside [0, 1]")));
            }
            let mut r = rng::stream(seed.unwrap(), &[]);
            let d: Vec<f64> = (0..n).map(|_| if r.random::<f64>() < p { 1.0 } else { -1.0 }).collect();
            Operator::SelfAdjoint(SelfAdjointOperator::diagonal(&d))
        }
    };
    Ok(match (op, &spec.label) {
        (Operator::SelfAdjoint(a), Some(l)) => Operator::SelfAdjoint(a.with_label(l.clone())),
        (op, _) => op,
    })
}

/// The five-token toy vocabulary (cat, dog, chases, the, ball) as 5x5 diagonals.
pub fn demo_vocabulary() -> Vec<OperatorSpec> {
    [
        ("cat", [1.0, 0.3, 0.1, 0.0, 0.0]),
        ("dog", [0.9, 0.4, 0.1, 0.0, 0.0]),
        ("chases", [0.0, 0.0, 0.0, 1.0, 0.0]),
        ("the", [0.0, 0.0, 0.0, 0.0, 1.0]),
        ("ball", [0.2, 0.1, 0.7, 0.0, 0.0]),
    ]
    .into_iter()
    .map(|(label, d)| OperatorSpec::diag(&d).with_label(label))
    .collect()
}

/// The 5x5 nilpotent shift used as the first positional operator.
pub fn demo_shift() -> OperatorSpec {
    OperatorSpec::new(5, OperatorKind::Shift, vec![]).with_label("P1")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{frobenius_norm, OperatorView};

    #[test]
    fn shift_spec_reproduces_positional_matrix() {
        let p = build_operator(&demo_shift()).unwrap();
        assert!(matches!(p, Operator::General(_)));
        let m = p.matrix();
        for i in 0..5 {
            for j in 0..5 {
                let want = if j == i + 1 { 1.0 } else { 0.0 };
                assert_eq!(m[(i, j)], Complex64::new(want, 0.0));
            }
        }
    }

    #[test]
    fn diag_spec_reproduces_token() {
        let ball = OperatorSpec::diag(&[0.2, 0.1, 0.7, 0.0, 0.0]).build_self_adjoint().unwrap();
        assert_eq!(ball.diagonal_entries(), vec![0.2, 0.1, 0.7, 0.0, 0.0]);
        assert!((frobenius_norm(ball.matrix()) - (0.04f64 + 0.01 + 0.49).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn diag_values_tile_larger_dims() {
        let a = OperatorSpec::new(6, OperatorKind::Diag, vec![1.0, 2.0]).build_self_adjoint().unwrap();
        assert_eq!(a.diagonal_entries(), vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
        let bad = OperatorSpec::new(5, OperatorKind::Diag, vec![1.0, 2.0]);
        assert!(matches!(build_operator(&bad), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn randomized_kinds_need_seed_and_are_deterministic() {
        let spec = OperatorSpec::new(60, OperatorKind::SemicircleSample, vec![]);
        assert!(matches!(build_operator(&spec), Err(Error::MissingSeed { .. })));
        let spec = spec.with_seed(7);
        let (a, b) = (spec.build_self_adjoint().unwrap(), spec.build_self_adjoint().unwrap());
        assert_eq!(frobenius_norm((a.matrix() - b.matrix()).as_ref()), 0.0);
    }

    #[test]
    fn dense_spec_parses_complex_entries() {
        let json = r#"{"dim": 2, "kind": "dense", "values": [1.0, [0.0, 1.0], [0.0, -1.0], 2.0]}"#;
        let spec: OperatorSpec = serde_json::from_str(json).unwrap();
        assert!(matches!(build_operator(&spec).unwrap(), Operator::SelfAdjoint(_)));
        let short = OperatorSpec::new(2, OperatorKind::Dense, vec![1.0]);
        assert!(build_operator(&short).is_err());
    }

    #[test]
    fn bernoulli_sample_is_signs() {
        let a = OperatorSpec::new(50, OperatorKind::BernoulliSample, vec![]).with_seed(3);
        let d = a.build_self_adjoint().unwrap().diagonal_entries();
        assert!(d.iter().all(|&x| x == 1.0 || x == -1.0));
        assert!(d.contains(&1.0) && d.contains(&-1.0));
    }
}
