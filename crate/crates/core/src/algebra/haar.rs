use faer::Mat;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::operator::{OperatorView, SelfAdjointOperator};
use crate::rng;

/// Complex Ginibre matrix with `E|g_ij|^2 = 1`.
pub fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Mat<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Mat::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` pushed back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Mat<Complex64> {
    let g = ginibre(dim, rng);
    let qr = g.qr();
    let r = qr.R();
    let mut q = qr.compute_Q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `U diag(values) U^H`, Hermitian by construction.
pub fn conjugate_diagonal(u: &Mat<Complex64>, values: &[f64]) -> Mat<Complex64> {
    let n = u.nrows();
    let scaled = Mat::from_fn(n, n, |i, j| u[(i, j)] * values[j]);
    scaled * u.adjoint()
}

/// `U a U^H` for a Haar unitary `U` drawn from `seed`.
pub fn haar_conjugate(a: &SelfAdjointOperator, seed: u64) -> SelfAdjointOperator {
    let mut rng = rng::stream(seed, &[]);
    haar_conjugate_with(a, &mut rng)
}

pub fn haar_conjugate_with<R: Rng + ?Sized>(a: &SelfAdjointOperator, rng: &mut R) -> SelfAdjointOperator {
    let u = haar_unitary(a.dim(), rng);
    let rotated = &u * a.matrix() * u.adjoint();
    SelfAdjointOperator::from_hermitian_part(rotated.as_ref())
}

/// GUE sample scaled so that its spectrum approaches the semicircle law of
/// the given variance: `E|h_ij|^2 = variance / dim`.
pub fn gue<R: Rng + ?Sized>(dim: usize, variance: f64, rng: &mut R) -> SelfAdjointOperator {
    let mut m = Mat::<Complex64>::zeros(dim, dim);
    let diag_sd = (variance / dim as f64).sqrt();
    let off_sd = (variance / (2.0 * dim as f64)).sqrt();
    for j in 0..dim {
        let d: f64 = rng.sample(StandardNormal);
        m[(j, j)] = Complex64::new(d * diag_sd, 0.0);
        for i in (j + 1)..dim {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = Complex64::new(re * off_sd, im * off_sd);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    SelfAdjointOperator::from_hermitian_part(m.as_ref())
}

/// Dense Hermitian test matrix with standard normal entries.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> SelfAdjointOperator {
    let g = ginibre(dim, rng);
    SelfAdjointOperator::from_hermitian_part(g.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{frobenius_norm, trace_state};

    #[test]
    fn haar_unitary_is_unitary() {
        let u = haar_unitary(30, &mut rng::stream(1, &[]));
        let id = u.adjoint() * &u;
        for i in 0..30 {
            for j in 0..30 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn conjugation_preserves_spectrum_and_trace() {
        let a = random_hermitian(40, &mut rng::stream(2, &[]));
        let b = haar_conjugate(&a, 11);
        let (ea, eb) = (a.eigenvalues().unwrap(), b.eigenvalues().unwrap());
        for (x, y) in ea.iter().zip(&eb) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!((trace_state(&a) - trace_state(&b)).norm() < 1e-12);
        assert!(frobenius_norm((a.matrix() - b.matrix()).as_ref()) > 1e-3);
    }

    #[test]
    fn haar_conjugate_is_seeded() {
        let a = SelfAdjointOperator::diagonal(&[1.0, -1.0, 0.5, 2.0]);
        let (b, c) = (haar_conjugate(&a, 5), haar_conjugate(&a, 5));
        assert_eq!(frobenius_norm((b.matrix() - c.matrix()).as_ref()), 0.0);
    }
}
