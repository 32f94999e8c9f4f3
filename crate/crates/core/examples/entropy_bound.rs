//! Spectral entropy of logit operators against the free entropy of the
//! vocabulary, and the resulting generalization bound.

use freeformer::algebra::{build_operator, demo_vocabulary, OperatorKind, OperatorSpec};
use freeformer::entropy::{entropy_gap_experiment, free_entropy_single, BoundInputs};
use freeformer::spectra::{KdeOptions, SpectralMeasure};

fn main() -> freeformer::Result<()> {
    for v in [0.5, 1.0, 2.0] {
        println!("χ(semicircle({v})) = {:.4}", free_entropy_single(&SpectralMeasure::semicircle(v, 2048)?)?);
    }

    let dim = 100;
    let tokens: Vec<_> = demo_vocabulary()
        .iter()
        .map(|s| build_operator(&s.clone().with_dim(dim))?.into_self_adjoint())
        .collect::<freeformer::Result<_>>()?;
    let ht = OperatorSpec::new(dim, OperatorKind::SemicircleSample, vec![1.0]).with_seed(3).build_self_adjoint()?;
    let bound = BoundInputs { r_train: 0.1, n: 10_000, c: 1.0 };
    let run = entropy_gap_experiment(&tokens, &ht, 20, 5, KdeOptions::default(), bound)?;
    let r = &run.report;
    println!("mean H(μ_L) {:?}", r.mean_entropy);
    println!("χ(X_1..X_V) {:?}", r.chi);
    println!("gap {:?}, violations {}", r.gap, r.violations);
    println!("bound {:?}", r.bound.map(|b| b.value));
    for w in &r.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
