//! Spectra of sampled operators compared against their limiting laws.

use freeformer::algebra::{OperatorKind, OperatorSpec};
use freeformer::spectra::{measure_distance, spectral_entropy, spectral_measure, SpectralMeasure};

fn main() -> freeformer::Result<()> {
    let limit = SpectralMeasure::semicircle(1.0, 2048)?;
    println!("semicircle(1): entropy {:.4}", spectral_entropy(&limit)?);
    for dim in [50, 200, 800] {
        let op = OperatorSpec::new(dim, OperatorKind::SemicircleSample, vec![1.0]).with_seed(7).build_self_adjoint()?;
        let mu = spectral_measure(&op)?;
        let d = measure_distance(&mu, &limit);
        println!(
            "GUE dim {dim:4}: mean {:+.4} variance {:.4} KDE entropy {:.4} KS {:.4} W1 {:.4}",
            mu.mean(),
            mu.variance(),
            spectral_entropy(&mu)?,
            d.kolmogorov_smirnov,
            d.wasserstein1
        );
    }
    Ok(())
}
