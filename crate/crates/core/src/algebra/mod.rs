//! Dense operators over a finite-dimensional tracial probability space.

mod haar;
mod operator;
mod spec;

pub use haar::{conjugate_diagonal, ginibre, gue, haar_conjugate, haar_conjugate_with, haar_unitary, random_hermitian};
pub use operator::{
    add, commutator, contextual_representation, eigen_decompose, eigen_decompose_checked, frobenius_norm,
    hermitian_deviation, multiply, trace_inner, trace_of_product, trace_state, EigenDecomposition,
    GeneralOperator, Operator, OperatorView, SelfAdjointOperator,
};
pub(crate) use operator::check_same_dim;
pub use spec::{build_operator, demo_shift, demo_vocabulary, OperatorKind, OperatorSpec, SpecValue};
