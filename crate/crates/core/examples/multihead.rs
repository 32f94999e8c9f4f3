//! Freeness deficit of alternating products of independently rotated heads,
//! shrinking as the dimension grows.

use freeformer::algebra::SelfAdjointOperator;
use freeformer::attention::{haar_head_deficits, Subalgebra};

fn tiled(values: &[f64], dim: usize) -> SelfAdjointOperator {
    let d: Vec<f64> = (0..dim).map(|i| values[i * values.len() / dim]).collect();
    SelfAdjointOperator::diagonal(&d)
}

fn main() -> freeformer::Result<()> {
    for dim in [20, 80, 320] {
        let heads = [tiled(&[-1.0, 1.0], dim), tiled(&[0.0, 0.5, 1.0, 2.5], dim)];
        let d = haar_head_deficits(&heads, &Subalgebra::Scalar, 4, 10, 42)?;
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        println!("dim {dim:4}: mean deficit {mean:.5} over {} seeds", d.len());
    }
    let heads = [tiled(&[-1.0, 1.0], 40), tiled(&[0.0, 1.0], 40)];
    let blocks = Subalgebra::BlockDiagonal(vec![20, 20]);
    let d = haar_head_deficits(&heads, &blocks, 4, 10, 42)?;
    println!("block-diagonal (20, 20), dim 40: mean deficit {:.5}", d.iter().sum::<f64>() / d.len() as f64);
    Ok(())
}
