use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;

/// Read access to the dense matrix behind an operator.
pub trait OperatorView {
    fn matrix(&self) -> MatRef<'_, Complex64>;

    fn dim(&self) -> usize {
        self.matrix().nrows()
    }
}

/// A dense operator with no symmetry constraint.
#[derive(Clone, Debug)]
pub struct GeneralOperator {
    entries: Mat<Complex64>,
}

/// A dense Hermitian operator with an optional label.
#[derive(Clone, Debug)]
pub struct SelfAdjointOperator {
    entries: Mat<Complex64>,
    label: Option<String>,
}

/// Either kind of operator, as produced by spec builders.
#[derive(Clone, Debug)]
pub enum Operator {
    SelfAdjoint(SelfAdjointOperator),
    General(GeneralOperator),
}

impl OperatorView for GeneralOperator {
    fn matrix(&self) -> MatRef<'_, Complex64> {
        self.entries.as_ref()
    }
}

impl OperatorView for SelfAdjointOperator {
    fn matrix(&self) -> MatRef<'_, Complex64> {
        self.entries.as_ref()
    }
}

impl OperatorView for Operator {
    fn matrix(&self) -> MatRef<'_, Complex64> {
        match self {
            Operator::SelfAdjoint(a) => a.matrix(),
            Operator::General(a) => a.matrix(),
        }
    }
}

impl<T: OperatorView + ?Sized> OperatorView for &T {
    fn matrix(&self) -> MatRef<'_, Complex64> {
        (**self).matrix()
    }
}

fn check_square(m: MatRef<'_, Complex64>) -> Result<()> {
    if m.nrows() == 0 {
        return Err(Error::InvalidArgument("operator dimension must be at least 1".into()));
    }
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    Ok(())
}

pub(crate) fn check_same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, found: b });
    }
    Ok(())
}

/// Frobenius norm of `m - m^H`.
pub fn hermitian_deviation(m: MatRef<'_, Complex64>) -> f64 {
    let n = m.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            acc += (m[(i, j)] - m[(j, i)].conj()).norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn frobenius_norm(m: MatRef<'_, Complex64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc += m[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

fn hermitian_part(m: MatRef<'_, Complex64>) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

impl GeneralOperator {
    pub fn new(entries: Mat<Complex64>) -> Result<Self> {
        check_square(entries.as_ref())?;
        Ok(Self { entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { entries: Mat::zeros(dim, dim) }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self { entries: Mat::from_fn(dim, dim, f) }
    }

    pub fn into_matrix(self) -> Mat<Complex64> {
        self.entries
    }

    pub fn adjoint(&self) -> GeneralOperator {
        Self { entries: self.entries.adjoint().to_owned() }
    }

    pub fn is_self_adjoint(&self) -> bool {
        hermitian_deviation(self.matrix()) <= HERMITIAN_TOL * frobenius_norm(self.matrix()).max(1.0)
    }

    /// `(a + a^H) / 2`.
    pub fn hermitian_part(&self) -> SelfAdjointOperator {
        SelfAdjointOperator { entries: hermitian_part(self.matrix()), label: None }
    }

    pub fn into_self_adjoint(self) -> Result<SelfAdjointOperator> {
        SelfAdjointOperator::new(self.entries)
    }
}

impl SelfAdjointOperator {
    /// Validates the Hermitian invariant and stores the exact Hermitian part.
    pub fn new(entries: Mat<Complex64>) -> Result<Self> {
        check_square(entries.as_ref())?;
        let deviation = hermitian_deviation(entries.as_ref());
        if deviation > HERMITIAN_TOL * frobenius_norm(entries.as_ref()).max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::from_hermitian_part(entries.as_ref()))
    }

    /// Symmetrizes `m` unconditionally. Used for matrices that are Hermitian
    /// up to floating-point rounding, such as `U D U^H` products.
    pub fn from_hermitian_part(m: MatRef<'_, Complex64>) -> Self {
        Self { entries: hermitian_part(m), label: None }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        Self { entries: Mat::zeros(dim, dim), label: None }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let entries = Mat::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self { entries, label: None }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn as_general(&self) -> GeneralOperator {
        GeneralOperator { entries: self.entries.clone() }
    }

    pub fn into_general(self) -> GeneralOperator {
        GeneralOperator { entries: self.entries }
    }

    pub fn add(&self, other: &SelfAdjointOperator) -> Result<SelfAdjointOperator> {
        check_same_dim(self.dim(), other.dim())?;
        Ok(Self { entries: &self.entries + &other.entries, label: None })
    }

    pub fn sub(&self, other: &SelfAdjointOperator) -> Result<SelfAdjointOperator> {
        check_same_dim(self.dim(), other.dim())?;
        Ok(Self { entries: &self.entries - &other.entries, label: None })
    }

    pub fn scale(&self, c: f64) -> SelfAdjointOperator {
        let n = self.dim();
        let entries = Mat::from_fn(n, n, |i, j| self.entries[(i, j)] * c);
        Self { entries, label: None }
    }

    /// Real diagonal entries.
    pub fn diagonal_entries(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut values = self
            .entries
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        values.sort_by(f64::total_cmp);
        Ok(values)
    }
}

/// Normalized trace `φ(a) = Tr(a) / dim`.
pub fn trace_state(a: &impl OperatorView) -> Complex64 {
    let m = a.matrix();
    let n = m.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        acc += m[(i, i)];
    }
    acc / n as f64
}

/// `φ(a b)` without forming the product.
pub fn trace_of_product(a: &impl OperatorView, b: &impl OperatorView) -> Result<Complex64> {
    let (a, b) = (a.matrix(), b.matrix());
    check_same_dim(a.nrows(), b.nrows())?;
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    Ok(acc / n as f64)
}

/// `φ(a b^H)`, the trace inner product.
pub fn trace_inner(a: &impl OperatorView, b: &impl OperatorView) -> Result<Complex64> {
    let (a, b) = (a.matrix(), b.matrix());
    check_same_dim(a.nrows(), b.nrows())?;
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            acc += a[(i, j)] * b[(i, j)].conj();
        }
    }
    Ok(acc / n as f64)
}

pub fn multiply(a: &impl OperatorView, b: &impl OperatorView) -> Result<GeneralOperator> {
    check_same_dim(a.dim(), b.dim())?;
    Ok(GeneralOperator { entries: a.matrix() * b.matrix() })
}

pub fn add(a: &impl OperatorView, b: &impl OperatorView) -> Result<GeneralOperator> {
    check_same_dim(a.dim(), b.dim())?;
    Ok(GeneralOperator { entries: a.matrix() + b.matrix() })
}

/// `[a, b] = a b - b a`.
pub fn commutator(a: &impl OperatorView, b: &impl OperatorView) -> Result<GeneralOperator> {
    check_same_dim(a.dim(), b.dim())?;
    let ab = a.matrix() * b.matrix();
    let ba = b.matrix() * a.matrix();
    Ok(GeneralOperator { entries: ab - ba })
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors (columns).
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Mat<Complex64>,
}

impl EigenDecomposition {
    /// `V Λ V^H`.
    pub fn reconstruct(&self) -> Mat<Complex64> {
        let v = &self.eigenvectors;
        let n = v.nrows();
        let scaled = Mat::from_fn(n, n, |i, j| v[(i, j)] * self.eigenvalues[j]);
        scaled * v.adjoint()
    }
}

pub fn eigen_decompose(a: &SelfAdjointOperator) -> Result<EigenDecomposition> {
    let evd = a
        .entries
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let n = a.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].re.total_cmp(&s[j].re));
    let eigenvalues = order.iter().map(|&i| s[i].re).collect();
    let eigenvectors = Mat::from_fn(n, n, |i, j| u[(i, order[j])]);
    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

/// Checks the Hermitian invariant of a general operator and returns its
/// eigendecomposition; non-Hermitian input is rejected.
pub fn eigen_decompose_checked(a: &impl OperatorView) -> Result<EigenDecomposition> {
    let sa = SelfAdjointOperator::new(a.matrix().to_owned())?;
    eigen_decompose(&sa)
}

/// `x + p`, or `x + (p + p^H)/2` when `symmetrize` is set.
pub fn contextual_representation(
    x: &SelfAdjointOperator,
    p: &impl OperatorView,
    symmetrize: bool,
) -> Result<Operator> {
    check_same_dim(x.dim(), p.dim())?;
    let (xm, pm) = (x.matrix(), p.matrix());
    let n = x.dim();
    if symmetrize {
        let sum = Mat::from_fn(n, n, |i, j| xm[(i, j)] + (pm[(i, j)] + pm[(j, i)].conj()) * 0.5);
        return Ok(Operator::SelfAdjoint(SelfAdjointOperator::from_hermitian_part(sum.as_ref())));
    }
    let sum = GeneralOperator { entries: xm + pm };
    Ok(if sum.is_self_adjoint() {
        Operator::SelfAdjoint(SelfAdjointOperator::from_hermitian_part(sum.matrix()))
    } else {
        Operator::General(sum)
    })
}

impl Operator {
    pub fn as_self_adjoint(&self) -> Option<&SelfAdjointOperator> {
        match self {
            Operator::SelfAdjoint(a) => Some(a),
            Operator::General(_) => None,
        }
    }

    pub fn into_self_adjoint(self) -> Result<SelfAdjointOperator> {
        match self {
            Operator::SelfAdjoint(a) => Ok(a),
            Operator::General(g) => g.into_self_adjoint(),
        }
    }

    pub fn to_general(&self) -> GeneralOperator {
        GeneralOperator { entries: self.matrix().to_owned() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::random_hermitian;
    use crate::rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn x_cat() -> SelfAdjointOperator {
        SelfAdjointOperator::diagonal(&[1.0, 0.3, 0.1, 0.0, 0.0])
    }

    fn shift5() -> GeneralOperator {
        GeneralOperator::from_fn(5, |i, j| if j == i + 1 { c(1.0) } else { c(0.0) })
    }

    #[test]
    fn trace_state_of_identity_and_token() {
        assert_eq!(trace_state(&SelfAdjointOperator::identity(5)), c(1.0));
        assert!((trace_state(&x_cat()).re - 0.28).abs() < 1e-15);
    }

    #[test]
    fn commutator_of_token_and_shift() {
        let k = commutator(&x_cat(), &shift5()).unwrap();
        let m = k.matrix();
        let expected_super = [0.7, 0.2, 0.1, 0.0];
        for i in 0..5 {
            for j in 0..5 {
                let want = if j == i + 1 { expected_super[i] } else { 0.0 };
                assert!((m[(i, j)] - c(want)).norm() < 1e-15, "({i},{j})");
            }
        }
        assert!((frobenius_norm(m) - 0.54f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn commutator_vanishes_for_self_and_diagonals() {
        let a = random_hermitian(6, &mut rng::stream(1, &[]));
        assert!(frobenius_norm(commutator(&a, &a).unwrap().matrix()) < 1e-12);
        let d2 = SelfAdjointOperator::diagonal(&[2.0, -1.0, 0.5, 0.0, 3.0]);
        assert_eq!(frobenius_norm(commutator(&x_cat(), &d2).unwrap().matrix()), 0.0);
    }

    #[test]
    fn commutator_of_hermitians_is_anti_hermitian() {
        let mut r = rng::stream(2, &[]);
        let a = random_hermitian(5, &mut r);
        let b = random_hermitian(5, &mut r);
        let k = commutator(&a, &b).unwrap();
        let m = k.matrix();
        for i in 0..5 {
            for j in 0..5 {
                assert!((m[(i, j)] + m[(j, i)].conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = SelfAdjointOperator::identity(3);
        let b = SelfAdjointOperator::identity(4);
        assert!(matches!(commutator(&a, &b), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(trace_of_product(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn eigen_decompose_token() {
        let e = eigen_decompose(&x_cat()).unwrap();
        let want = [0.0, 0.0, 0.1, 0.3, 1.0];
        for (got, want) in e.eigenvalues.iter().zip(want) {
            assert!((got - want).abs() < 1e-14);
        }
        let id = eigen_decompose(&SelfAdjointOperator::identity(7)).unwrap();
        assert!(id.eigenvalues.iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn eigen_decompose_reconstructs_dim_200() {
        let a = random_hermitian(200, &mut rng::stream(3, &[]));
        let e = eigen_decompose(&a).unwrap();
        assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let err = frobenius_norm((a.matrix() - e.reconstruct()).as_ref());
        assert!(err < 1e-10 * frobenius_norm(a.matrix()), "{err}");
    }

    #[test]
    fn non_hermitian_input_rejected() {
        assert!(matches!(shift5().into_self_adjoint(), Err(Error::NotHermitian { .. })));
        assert!(eigen_decompose_checked(&shift5()).is_err());
    }

    #[test]
    fn contextual_representation_variants() {
        let z = contextual_representation(&x_cat(), &shift5(), false).unwrap();
        let m = z.matrix();
        let diag = [1.0, 0.3, 0.1, 0.0, 0.0];
        for i in 0..5 {
            assert_eq!(m[(i, i)], c(diag[i]));
            if i + 1 < 5 {
                assert_eq!(m[(i, i + 1)], c(1.0));
                assert_eq!(m[(i + 1, i)], c(0.0));
            }
        }
        assert!(matches!(z, Operator::General(_)));

        let zs = contextual_representation(&x_cat(), &shift5(), true).unwrap();
        let zs = zs.as_self_adjoint().expect("symmetrized output is self-adjoint");
        for i in 0..4 {
            assert_eq!(zs.matrix()[(i, i + 1)], c(0.5));
            assert_eq!(zs.matrix()[(i + 1, i)], c(0.5));
        }

        let unchanged = contextual_representation(&x_cat(), &GeneralOperator::zeros(5), false).unwrap();
        assert_eq!(frobenius_norm((unchanged.matrix() - x_cat().matrix()).as_ref()), 0.0);
    }
}
