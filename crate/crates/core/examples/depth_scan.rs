//! Residual-stream spectra across a small stack against the free-convolution
//! prediction.

use freeformer::algebra::{OperatorKind, OperatorSpec};
use freeformer::depth::{depth_report, predict, propagate, StackConfig};
use freeformer::freeconv::SubordinationOptions;

fn main() -> freeformer::Result<()> {
    let config = StackConfig {
        dim: 300,
        initial: OperatorSpec::diag(&[-1.0, 1.0]),
        increments: vec![
            OperatorSpec::diag(&[0.0, 1.0]),
            OperatorSpec::new(2, OperatorKind::SemicircleSample, vec![0.5]),
            OperatorSpec::diag(&[-0.5, 0.25, 0.25, 1.0]),
        ],
        trials: 4,
        seed: 1,
    };
    let empirical = propagate(&config)?;
    let predicted = predict(&config, &SubordinationOptions { grid_points: 1024, ..Default::default() })?;
    let report = depth_report(&empirical, &predicted.measures, 0.08)?;
    println!("layer    mean  variance  predicted    W1       KS");
    for r in &report.rows {
        println!(
            "{:5} {:+.4}  {:8.4}  {:9.4}  {:.4}  {:.4}",
            r.layer, r.mean, r.variance, r.predicted_variance, r.w1, r.ks
        );
    }
    println!("max W1 {:.4}, flagged {:?}", report.summary.max_w1, report.summary.flagged_layers);
    Ok(())
}
