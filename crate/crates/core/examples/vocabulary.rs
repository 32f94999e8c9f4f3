//! The five-token toy vocabulary, the shift positional operator, and the
//! commutator that measures how far a token fails to commute with position.

use freeformer::algebra::{
    build_operator, commutator, demo_shift, demo_vocabulary, frobenius_norm, trace_inner, OperatorView,
};

fn main() -> freeformer::Result<()> {
    let vocab: Vec<_> = demo_vocabulary()
        .iter()
        .map(|s| build_operator(s)?.into_self_adjoint())
        .collect::<freeformer::Result<_>>()?;
    let shift = build_operator(&demo_shift())?.to_general();

    for x in &vocab {
        let d: Vec<String> = x.diagonal_entries().iter().map(|v| format!("{v:.1}")).collect();
        println!("{:<7} diag [{}]", x.label().unwrap_or("?"), d.join(", "));
    }

    let c = commutator(&vocab[0], &shift)?;
    let sup: Vec<f64> = (0..4).map(|i| c.matrix()[(i, i + 1)].re).collect();
    println!("[X_cat, P1] superdiagonal {sup:?}, Frobenius norm {:.6}", frobenius_norm(c.matrix()));

    println!("\nsimilarity φ(X_i X_j):");
    for a in &vocab {
        let row: Vec<String> = vocab.iter().map(|b| format!("{:6.3}", trace_inner(a, b).unwrap().re)).collect();
        println!("{:<7}{}", a.label().unwrap_or("?"), row.join(""));
    }
    Ok(())
}
