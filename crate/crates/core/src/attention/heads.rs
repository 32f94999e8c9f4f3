use std::fmt::Display;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    check_same_dim, haar_conjugate_with, trace_of_product, trace_state, GeneralOperator, OperatorView,
    SelfAdjointOperator,
};
use crate::{rng, Error, Result};

/// The subalgebra `B` that a conditional expectation projects onto.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subalgebra {
    /// Scalar multiples of the identity; `E = φ(·) 1`.
    Scalar,
    /// Block-diagonal matrices with the given block sizes; `E` keeps the blocks.
    BlockDiagonal(Vec<usize>),
}

impl Subalgebra {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Subalgebra::Scalar => Ok(()),
            Subalgebra::BlockDiagonal(sizes) => {
                if sizes.is_empty() || sizes.contains(&0) || sizes.iter().sum::<usize>() != dim {
                    return Err(Error::InvalidPartition { sizes: sizes.clone(), dim });
                }
                Ok(())
            }
        }
    }

    /// Half-open index ranges of the blocks.
    fn blocks(&self, dim: usize) -> Vec<(usize, usize)> {
        match self {
            Subalgebra::Scalar => vec![(0, dim)],
            Subalgebra::BlockDiagonal(sizes) => {
                let mut start = 0;
                sizes
                    .iter()
                    .map(|&s| {
                        let b = (start, start + s);
                        start += s;
                        b
                    })
                    .collect()
            }
        }
    }
}

/// Per-head attention outputs at one position, sharing a subalgebra.
#[derive(Clone, Debug)]
pub struct HeadFamily {
    heads: Vec<SelfAdjointOperator>,
    subalgebra: Subalgebra,
}

impl HeadFamily {
    pub fn new(heads: Vec<SelfAdjointOperator>, subalgebra: Subalgebra) -> Result<Self> {
        let first = heads.first().ok_or(Error::Empty { what: "head family" })?;
        let n = first.dim();
        for (h, a) in heads.iter().enumerate() {
            check_same_dim(n, a.dim()).map_err(|e| e.at_index(h))?;
        }
        subalgebra.validate(n)?;
        Ok(Self { heads, subalgebra })
    }

    pub fn heads(&self) -> &[SelfAdjointOperator] {
        &self.heads
    }

    pub fn subalgebra(&self) -> &Subalgebra {
        &self.subalgebra
    }

    pub fn dim(&self) -> usize {
        self.heads[0].dim()
    }
}

/// `(1/H) Σ_h A^{(h)}`.
pub fn multi_head_aggregate(family: &HeadFamily) -> Result<SelfAdjointOperator> {
    let h = family.heads.len();
    if h == 1 {
        return Ok(family.heads[0].clone());
    }
    let weights = vec![1.0 / h as f64; h];
    let sum = super::ops::weighted_sum(&weights, &family.heads)?;
    Ok(SelfAdjointOperator::from_hermitian_part(sum.matrix()))
}

/// `E(a)`: `φ(a) 1` for the scalar subalgebra, the block pinching otherwise.
pub fn conditional_expectation(a: &impl OperatorView, sub: &Subalgebra) -> Result<GeneralOperator> {
    let n = a.dim();
    sub.validate(n)?;
    let m = a.matrix();
    let zero = Complex64::new(0.0, 0.0);
    let out = match sub {
        Subalgebra::Scalar => {
            let t = trace_state(&a);
            Mat::from_fn(n, n, |i, j| if i == j { t } else { zero })
        }
        Subalgebra::BlockDiagonal(_) => {
            let mut block_of = vec![0; n];
            for (b, (s, e)) in sub.blocks(n).into_iter().enumerate() {
                block_of[s..e].iter_mut().for_each(|x| *x = b);
            }
            Mat::from_fn(n, n, |i, j| if block_of[i] == block_of[j] { m[(i, j)] } else { zero })
        }
    };
    GeneralOperator::new(out)
}

fn operator_norm_of_block_diagonal(m: &GeneralOperator, sub: &Subalgebra) -> Result<f64> {
    let n = m.dim();
    let mm = m.matrix();
    if let Subalgebra::Scalar = sub {
        return Ok(mm[(0, 0)].norm());
    }
    let mut norm: f64 = 0.0;
    for (s, e) in sub.blocks(n) {
        let block = mm.submatrix(s, s, e - s, e - s).to_owned();
        let sv = block.singular_values().map_err(|e| Error::Eigen(format!("{e:?}")))?;
        norm = norm.max(sv.into_iter().fold(0.0, f64::max));
    }
    Ok(norm)
}

/// `‖E(ã_1 ã_2 ⋯ ã_n)‖` with `ã = a - E(a)`.
///
/// Adjacent elements must carry different labels. Zero for elements that are
/// free with amalgamation over the subalgebra.
pub fn amalgamated_freeness_deficit<L, A>(elements: &[(L, A)], sub: &Subalgebra) -> Result<f64>
where
    L: PartialEq + Display,
    A: OperatorView,
{
    let (_, first) = elements.first().ok_or(Error::Empty { what: "element list" })?;
    let n = first.dim();
    sub.validate(n)?;
    for (i, w) in elements.windows(2).enumerate() {
        if w[0].0 == w[1].0 {
            return Err(Error::NonAlternating { index: i, label: w[0].0.to_string() });
        }
    }
    let mut centered = Vec::with_capacity(elements.len());
    for (i, (_, a)) in elements.iter().enumerate() {
        check_same_dim(n, a.dim()).map_err(|e| e.at_index(i))?;
        let e = conditional_expectation(a, sub)?;
        centered.push(GeneralOperator::new(a.matrix() - e.matrix())?);
    }
    if centered.len() == 1 {
        // E(a - E(a)) = 0 exactly
        return Ok(0.0);
    }
    if let Subalgebra::Scalar = sub {
        // only the trace of the product is needed; skip the last multiplication
        let k = centered.len();
        let mut left = centered[0].matrix().to_owned();
        for c in &centered[1..k - 1] {
            left = &left * c.matrix();
        }
        let left = GeneralOperator::new(left)?;
        return Ok(trace_of_product(&left, &centered[k - 1])?.norm());
    }
    let mut prod = centered[0].matrix().to_owned();
    for c in &centered[1..] {
        prod = &prod * c.matrix();
    }
    let e = conditional_expectation(&GeneralOperator::new(prod)?, sub)?;
    operator_norm_of_block_diagonal(&e, sub)
}

/// Deficits for alternating products of independently Haar-rotated heads.
///
/// For each seed index `s`, head `h` is rotated with stream `[dim, s, h]` of
/// `seed`; the product cycles through the heads for `length` factors.
pub fn haar_head_deficits(
    heads: &[SelfAdjointOperator],
    sub: &Subalgebra,
    length: usize,
    seeds: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    if heads.len() < 2 {
        return Err(Error::InvalidArgument("alternating products need at least two heads".into()));
    }
    if length == 0 {
        return Err(Error::InvalidArgument("product length must be at least 1".into()));
    }
    let n = heads[0].dim();
    for (h, a) in heads.iter().enumerate() {
        check_same_dim(n, a.dim()).map_err(|e| e.at_index(h))?;
    }
    sub.validate(n)?;
    (0..seeds)
        .into_par_iter()
        .map(|s| {
            let rotated: Vec<SelfAdjointOperator> = heads
                .iter()
                .enumerate()
                .map(|(h, a)| haar_conjugate_with(a, &mut rng::stream(seed, &[n as u64, s as u64, h as u64])))
                .collect();
            let elements: Vec<(usize, &SelfAdjointOperator)> =
                (0..length).map(|i| (i % heads.len(), &rotated[i % heads.len()])).collect();
            amalgamated_freeness_deficit(&elements, sub).map_err(|e| e.at_index(s))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{random_hermitian, OperatorSpec};

    fn x_cat() -> SelfAdjointOperator {
        OperatorSpec::diag(&[1.0, 0.3, 0.1, 0.0, 0.0]).build_self_adjoint().unwrap()
    }

    #[test]
    fn scalar_expectation_of_cat() {
        let e = conditional_expectation(&x_cat(), &Subalgebra::Scalar).unwrap();
        for i in 0..5 {
            assert!((e.matrix()[(i, i)].re - 0.28).abs() < 1e-15);
        }
        assert_eq!(e.matrix()[(0, 1)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn expectation_fixes_subalgebra_and_is_idempotent() {
        let mut r = rng::stream(5, &[]);
        let a = random_hermitian(6, &mut r);
        for sub in [Subalgebra::Scalar, Subalgebra::BlockDiagonal(vec![2, 3, 1])] {
            let e = conditional_expectation(&a, &sub).unwrap();
            let ee = conditional_expectation(&e, &sub).unwrap();
            assert!((e.matrix() - ee.matrix()).norm_max() < 1e-12);
            let id = conditional_expectation(&SelfAdjointOperator::identity(6), &sub).unwrap();
            assert!((id.matrix() - SelfAdjointOperator::identity(6).matrix()).norm_max() < 1e-15);
        }
        assert!(matches!(
            conditional_expectation(&a, &Subalgebra::BlockDiagonal(vec![2, 2])),
            Err(Error::InvalidPartition { .. })
        ));
    }

    #[test]
    fn aggregate_of_single_and_identical_heads() {
        let a = x_cat();
        let one = HeadFamily::new(vec![a.clone()], Subalgebra::Scalar).unwrap();
        assert_eq!(multi_head_aggregate(&one).unwrap().diagonal_entries(), a.diagonal_entries());
        let three = HeadFamily::new(vec![a.clone(); 3], Subalgebra::Scalar).unwrap();
        let agg = multi_head_aggregate(&three).unwrap().diagonal_entries();
        for (x, y) in agg.iter().zip(a.diagonal_entries()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(HeadFamily::new(vec![], Subalgebra::Scalar).is_err());
    }

    #[test]
    fn deficit_edge_cases() {
        let a = x_cat();
        assert_eq!(amalgamated_freeness_deficit(&[("h1", &a)], &Subalgebra::Scalar).unwrap(), 0.0);
        let d = amalgamated_freeness_deficit(&[("h1", &a), ("h2", &a)], &Subalgebra::Scalar).unwrap();
        let var = a.diagonal_entries().iter().map(|x| (x - 0.28) * (x - 0.28)).sum::<f64>() / 5.0;
        assert!((d - var).abs() < 1e-15);
        let err = amalgamated_freeness_deficit(&[("h1", &a), ("h1", &a)], &Subalgebra::Scalar).unwrap_err();
        assert!(matches!(err, Error::NonAlternating { index: 0, .. }));
    }

    #[test]
    fn block_deficit_of_block_diagonal_elements() {
        // block-diagonal elements are fixed by E, so their centered versions vanish
        let a = x_cat();
        let sub = Subalgebra::BlockDiagonal(vec![2, 3]);
        let d = amalgamated_freeness_deficit(&[(0, &a), (1, &a), (0, &a)], &sub).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn rotated_heads_are_nearly_free() {
        let heads = vec![
            OperatorSpec::diag(&[1.0, -1.0]).with_dim(200).build_self_adjoint().unwrap(),
            OperatorSpec::diag(&[0.0, 1.0, 2.0, 3.0]).with_dim(200).build_self_adjoint().unwrap(),
        ];
        let d = haar_head_deficits(&heads, &Subalgebra::Scalar, 4, 4, 1).unwrap();
        assert!(d.iter().sum::<f64>() / 4.0 < 0.05, "{d:?}");
        assert_eq!(d, haar_head_deficits(&heads, &Subalgebra::Scalar, 4, 4, 1).unwrap());
    }
}
