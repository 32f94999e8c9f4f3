//! Trace-kernel attention over "the cat chases the ball" with a sinusoidal
//! diagonal position encoding.

use freeformer::algebra::{build_operator, demo_vocabulary, SelfAdjointOperator};
use freeformer::attention::{attention_output, positional_decomposition, AttentionContext};

fn main() -> freeformer::Result<()> {
    let vocab: Vec<SelfAdjointOperator> = demo_vocabulary()
        .iter()
        .map(|s| build_operator(s)?.into_self_adjoint())
        .collect::<freeformer::Result<_>>()?;
    let lookup = |label: &str| vocab.iter().find(|x| x.label() == Some(label)).unwrap().clone();
    let sentence = ["the", "cat", "chases", "the", "ball"];
    let tokens: Vec<_> = sentence.iter().map(|w| lookup(w)).collect();
    let positions: Vec<_> = (0..sentence.len())
        .map(|t| {
            let d: Vec<f64> = (0..5).map(|i| 0.3 * ((t + 1) as f64 * (i + 1) as f64 * 0.7).cos()).collect();
            SelfAdjointOperator::diagonal(&d)
        })
        .collect();
    let z: Vec<_> = tokens.iter().zip(&positions).map(|(x, p)| x.add(p)).collect::<freeformer::Result<_>>()?;

    for (t, word) in sentence.iter().enumerate() {
        let ctx = AttentionContext::new(z[t].clone(), z.clone(), tokens.clone())?;
        let w: Vec<String> = ctx.weights().iter().map(|a| format!("{a:.3}")).collect();
        let out = attention_output(&ctx)?;
        let d: Vec<String> = out.diagonal_entries().iter().map(|v| format!("{v:.3}")).collect();
        println!("{t} {word:<7} α = [{}]  diag A = [{}]", w.join(" "), d.join(" "));
    }

    // both occurrences of "the" have the same token but different positions
    println!();
    for t in [0, 3] {
        let s = positional_decomposition(&tokens[t], &positions[t], &tokens[1], &positions[1])?;
        println!(
            "score(the@{t} → cat@1) = {:+.4} = {:+.4} {:+.4} {:+.4} {:+.4}",
            s.total(),
            s.semantic,
            s.semantic_positional,
            s.positional_semantic,
            s.positional
        );
    }
    Ok(())
}
