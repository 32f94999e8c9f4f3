use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::table::{Cell, Format, Table};
use crate::algebra::{
    build_operator, contextual_representation, trace_state, Operator, OperatorSpec, OperatorView,
    SelfAdjointOperator,
};
use crate::attention::{
    attention_weights, haar_head_deficits, multi_head_aggregate, positional_decomposition, similarity_scores,
    symmetrize, weighted_sum, HeadFamily, Subalgebra,
};
use crate::depth::{depth_report, predict, propagate, StackConfig, DEFAULT_W1_TOLERANCE};
use crate::entropy::{entropy_gap_experiment, BoundInputs};
use crate::freeconv::{free_add_convolve, monte_carlo_from_spectra, ConvolutionMethod, SubordinationOptions};
use crate::io::{line_chart_svg, measure_svg, SequenceFile};
use crate::spectra::{spectral_measure, AtomicMeasure, GriddedMeasure, KdeOptions, SpectralMeasure, DEFAULT_GRID_POINTS};
use crate::{rng, Error, Result};

/// A measure given inline, so that a manifest alone reproduces a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSource {
    Semicircle { variance: f64 },
    Spec { spec: OperatorSpec },
    Atomic { x: Vec<f64>, weight: Vec<f64> },
    Gridded { start: f64, step: f64, density: Vec<f64> },
}

impl MeasureSource {
    /// `semicircle:VAR`, a measure CSV, or a JSON file with one operator spec.
    pub fn parse(arg: &str) -> Result<Self> {
        if let Some(v) = arg.strip_prefix("semicircle:") {
            let variance: f64 =
                v.parse().map_err(|_| Error::InvalidArgument(format!("bad semicircle variance `{v}`")))?;
            return Ok(MeasureSource::Semicircle { variance });
        }
        let path = Path::new(arg);
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(match crate::io::read_measure_csv(path)? {
                SpectralMeasure::Atomic(a) => {
                    MeasureSource::Atomic { x: a.locations().to_vec(), weight: a.weights().to_vec() }
                }
                SpectralMeasure::Gridded(g) => {
                    MeasureSource::Gridded { start: g.start(), step: g.step(), density: g.density().to_vec() }
                }
            }),
            Some("json") => {
                let value: serde_json::Value = crate::io::read_json(path)?;
                let spec: OperatorSpec = match value {
                    serde_json::Value::Array(mut items) if items.len() == 1 => serde_json::from_value(items.remove(0))?,
                    serde_json::Value::Array(items) => {
                        return Err(Error::InvalidSpec(format!("expected one spec in {arg}, found {}", items.len())))
                    }
                    other => serde_json::from_value(other)?,
                };
                Ok(MeasureSource::Spec { spec })
            }
            _ => Err(Error::InvalidArgument(format!("`{arg}` is not semicircle:VAR, a .csv or a .json file"))),
        }
    }

    fn measure(&self, grid: usize) -> Result<SpectralMeasure> {
        match self {
            MeasureSource::Semicircle { variance } => SpectralMeasure::semicircle(*variance, grid),
            MeasureSource::Spec { spec } => spectral_measure(&spec.build_self_adjoint()?),
            MeasureSource::Atomic { x, weight } => {
                Ok(SpectralMeasure::Atomic(AtomicMeasure::new(x.iter().copied().zip(weight.iter().copied()))?))
            }
            MeasureSource::Gridded { start, step, density } => {
                Ok(SpectralMeasure::Gridded(GriddedMeasure::normalized(*start, *step, density.clone())?))
            }
        }
    }

    /// Eigenvalues of a `dim`-dimensional operator with this law: the spec's
    /// own spectrum, otherwise the `dim` midpoint quantiles.
    fn spectrum(&self, dim: usize, grid: usize) -> Result<Vec<f64>> {
        match self {
            MeasureSource::Spec { spec } => spec.build_self_adjoint()?.eigenvalues(),
            _ => Ok(self.measure(grid)?.quantile_points(dim)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthScanConfig {
    pub dim: usize,
    pub initial: OperatorSpec,
    #[serde(default)]
    pub increments: Vec<OperatorSpec>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub subordination: SubordinationOptions,
}

fn default_trials() -> usize {
    20
}

fn default_tolerance() -> f64 {
    DEFAULT_W1_TOLERANCE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyConfig {
    pub tokens: Vec<OperatorSpec>,
    pub ht: OperatorSpec,
    /// Overrides the dimension of every spec when set.
    #[serde(default)]
    pub dim: Option<usize>,
    pub timesteps: usize,
    #[serde(default)]
    pub bound: BoundInputs,
    #[serde(default)]
    pub bandwidth: Option<f64>,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
}

fn default_grid() -> usize {
    DEFAULT_GRID_POINTS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiheadConfig {
    /// Base head operators; each is built at every dimension in `dims`.
    pub heads: Vec<OperatorSpec>,
    #[serde(default = "default_subalgebra")]
    pub subalgebra: Subalgebra,
    pub dims: Vec<usize>,
    pub seeds: usize,
    #[serde(default = "default_length")]
    pub length: usize,
}

fn default_subalgebra() -> Subalgebra {
    Subalgebra::Scalar
}

fn default_length() -> usize {
    4
}

/// A fully resolved command: everything a run depends on except the seed,
/// thread count and output format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Invocation {
    Spectrum {
        specs: Vec<OperatorSpec>,
        svg: bool,
    },
    Convolve {
        a: MeasureSource,
        b: MeasureSource,
        method: ConvolutionMethod,
        options: SubordinationOptions,
        dim: usize,
        trials: usize,
        svg: bool,
    },
    AttentionDemo {
        sequence: SequenceFile,
        scale_by_sqrt_dim: bool,
    },
    DepthScan {
        config: DepthScanConfig,
        svg: bool,
    },
    Entropy {
        config: EntropyConfig,
    },
    Multihead {
        config: MultiheadConfig,
    },
}

impl Invocation {
    pub fn name(&self) -> &'static str {
        match self {
            Invocation::Spectrum { .. } => "spectrum",
            Invocation::Convolve { .. } => "convolve",
            Invocation::AttentionDemo { .. } => "attention-demo",
            Invocation::DepthScan { .. } => "depth-scan",
            Invocation::Entropy { .. } => "entropy",
            Invocation::Multihead { .. } => "multihead",
        }
    }
}

/// What a successful run produced.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub outputs: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub iterations: Option<usize>,
    pub residual: Option<f64>,
    pub summary: String,
}

#[derive(Clone, Copy, Debug)]
pub struct Settings {
    pub seed: u64,
    pub format: Format,
}

pub fn execute(inv: &Invocation, settings: Settings, out: &Path) -> Result<RunOutput> {
    std::fs::create_dir_all(out)?;
    match inv {
        Invocation::Spectrum { specs, svg } => run_spectrum(specs, *svg, settings, out),
        Invocation::Convolve { a, b, method, options, dim, trials, svg } => {
            run_convolve(a, b, *method, options, *dim, *trials, *svg, settings, out)
        }
        Invocation::AttentionDemo { sequence, scale_by_sqrt_dim } => {
            run_attention_demo(sequence, *scale_by_sqrt_dim, settings, out)
        }
        Invocation::DepthScan { config, svg } => run_depth_scan(config, *svg, settings, out),
        Invocation::Entropy { config } => run_entropy(config, settings, out),
        Invocation::Multihead { config } => run_multihead(config, settings, out),
    }
}

fn file_stem(label: Option<&str>, index: usize) -> String {
    match label {
        Some(l) if !l.is_empty() => {
            let clean: String = l.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
            format!("{index:02}-{clean}")
        }
        _ => format!("{index:02}"),
    }
}

fn write_svg(path: PathBuf, body: String) -> Result<PathBuf> {
    std::fs::write(&path, body)?;
    Ok(path)
}

/// Seeds randomized specs that lack one from the master seed and a path.
fn seeded(spec: &OperatorSpec, seed: u64, path: &[u64]) -> OperatorSpec {
    let mut spec = spec.clone();
    if spec.seed.is_none() && spec.kind.is_randomized() {
        spec.seed = Some(rng::stream(seed, path).random());
    }
    spec
}

fn run_spectrum(specs: &[OperatorSpec], svg: bool, s: Settings, out: &Path) -> Result<RunOutput> {
    if specs.is_empty() {
        return Err(Error::InvalidSpec("spec array is empty".into()));
    }
    let mut res = RunOutput::default();
    for (i, spec) in specs.iter().enumerate() {
        let op = seeded(spec, s.seed, &[i as u64]).build_self_adjoint().map_err(|e| e.at_index(i))?;
        let mu = spectral_measure(&op)?;
        let stem = format!("spectrum-{}", file_stem(spec.label.as_deref(), i));
        res.outputs.push(Table::from_measure(&mu).write(out, &stem, s.format)?);
        if svg {
            let title = spec.label.clone().unwrap_or_else(|| format!("spec {i}"));
            res.outputs.push(write_svg(out.join(format!("{stem}.svg")), measure_svg(&mu, &title))?);
        }
    }
    res.summary = format!("{} spectra", specs.len());
    Ok(res)
}

#[allow(clippy::too_many_arguments)]
fn run_convolve(
    a: &MeasureSource,
    b: &MeasureSource,
    method: ConvolutionMethod,
    options: &SubordinationOptions,
    dim: usize,
    trials: usize,
    svg: bool,
    s: Settings,
    out: &Path,
) -> Result<RunOutput> {
    let mut res = RunOutput::default();
    let measure = match method {
        ConvolutionMethod::Subordination => {
            let mu = a.measure(options.grid_points)?;
            let nu = b.measure(options.grid_points)?;
            let r = free_add_convolve(&mu, &nu, options)?;
            res.iterations = Some(r.iterations);
            res.residual = Some(r.residual);
            if r.clipped_mass > 1e-3 {
                res.warnings.push(format!("clipped {:.3e} of negative density mass", r.clipped_mass));
            }
            r.measure
        }
        ConvolutionMethod::Montecarlo => {
            let ea = a.spectrum(dim, options.grid_points)?;
            let eb = b.spectrum(dim, options.grid_points)?;
            monte_carlo_from_spectra(&ea, &eb, trials, s.seed)?
        }
    };
    res.outputs.push(Table::from_measure(&measure).write(out, "convolution", s.format)?);
    if svg {
        res.outputs.push(write_svg(out.join("convolution.svg"), measure_svg(&measure, "free additive convolution"))?);
    }
    res.summary = format!("mean {:.6}, variance {:.6}", measure.mean(), measure.variance());
    Ok(res)
}

fn run_attention_demo(seq: &SequenceFile, scale: bool, s: Settings, out: &Path) -> Result<RunOutput> {
    if seq.sequence.is_empty() {
        return Err(Error::Empty { what: "sequence" });
    }
    if seq.positions.len() < seq.sequence.len() {
        return Err(Error::InvalidSpec(format!(
            "{} positions for a sequence of length {}",
            seq.positions.len(),
            seq.sequence.len()
        )));
    }
    let mut vocab: HashMap<&str, SelfAdjointOperator> = HashMap::new();
    for (i, spec) in seq.vocab.iter().enumerate() {
        let label = spec.label.as_deref().ok_or_else(|| Error::InvalidSpec(format!("vocabulary entry {i} has no label")))?;
        vocab.insert(label, seeded(spec, s.seed, &[0, i as u64]).build_self_adjoint().map_err(|e| e.at_index(i))?);
    }
    let tokens = seq
        .sequence
        .iter()
        .map(|w| vocab.get(w.as_str()).ok_or_else(|| Error::UnknownToken(w.clone())))
        .collect::<Result<Vec<_>>>()?;
    let t_len = tokens.len();
    let positions: Vec<Operator> = seq.positions[..t_len]
        .iter()
        .enumerate()
        .map(|(i, p)| build_operator(&seeded(p, s.seed, &[1, i as u64])).map_err(|e| e.at_index(i)))
        .collect::<Result<_>>()?;
    let positions: Vec<Operator> = if seq.symmetrize_positions {
        positions.iter().map(|p| Operator::SelfAdjoint(symmetrize(p))).collect()
    } else {
        positions
    };
    let reps: Vec<Operator> = tokens
        .iter()
        .zip(&positions)
        .map(|(x, p)| contextual_representation(x, p, false))
        .collect::<Result<_>>()?;

    let mut weights_t = Table::new(
        ["position", "token"].into_iter().map(String::from).chain((0..t_len).map(|j| format!("w{j}"))),
    );
    let mut decomp = Table::new([
        "query", "key", "semantic", "semantic_positional", "positional_semantic", "positional", "score",
    ]);
    let n = reps[0].dim();
    let mut outputs =
        Table::new(["position", "token", "trace"].into_iter().map(String::from).chain((0..n).map(|i| format!("d{i}"))));
    for (t, q) in reps.iter().enumerate() {
        let scores = similarity_scores(q, &reps, scale)?;
        let w = attention_weights(&scores)?;
        let mut row = vec![Cell::Int(t), Cell::Text(seq.sequence[t].clone())];
        row.extend(w.iter().map(|&x| Cell::Num(x)));
        weights_t.push(row);
        for j in 0..t_len {
            let d = positional_decomposition(tokens[t], &positions[t], tokens[j], &positions[j])?;
            let (sem, sp, ps, pos) = (d.semantic, d.semantic_positional, d.positional_semantic, d.positional);
            let f = if scale { 1.0 / (n as f64).sqrt() } else { 1.0 };
            decomp.push(vec![
                Cell::Int(t),
                Cell::Int(j),
                Cell::Num(sem * f),
                Cell::Num(sp * f),
                Cell::Num(ps * f),
                Cell::Num(pos * f),
                Cell::Num(scores[j]),
            ]);
        }
        let a = weighted_sum(&w, &reps)?;
        let m = a.matrix();
        let mut row = vec![Cell::Int(t), Cell::Text(seq.sequence[t].clone()), Cell::Num(trace_state(&a).re)];
        row.extend((0..n).map(|i| Cell::Num(m[(i, i)].re)));
        outputs.push(row);
    }
    let res = RunOutput {
        outputs: vec![
            weights_t.write(out, "weights", s.format)?,
            decomp.write(out, "decomposition", s.format)?,
            outputs.write(out, "outputs", s.format)?,
        ],
        summary: format!("{t_len} positions"),
        ..Default::default()
    };
    Ok(res)
}

fn run_depth_scan(cfg: &DepthScanConfig, svg: bool, s: Settings, out: &Path) -> Result<RunOutput> {
    let stack = StackConfig {
        dim: cfg.dim,
        initial: cfg.initial.clone(),
        increments: cfg.increments.clone(),
        trials: cfg.trials,
        seed: s.seed,
    };
    let empirical = propagate(&stack)?;
    let predicted = predict(&stack, &cfg.subordination)?;
    let report = depth_report(&empirical, &predicted.measures, cfg.tolerance)?;
    let mut res = RunOutput::default();
    let mut t = Table::new(["layer", "mean", "variance", "entropy", "w1", "ks"]);
    for r in &report.rows {
        t.push(vec![Cell::Int(r.layer), Cell::Num(r.mean), Cell::Num(r.variance), Cell::Opt(r.entropy), Cell::Num(r.w1), Cell::Num(r.ks)]);
    }
    res.outputs.push(t.write(out, "trajectory", s.format)?);
    let report_path = out.join("depth_report.json");
    crate::io::write_json(&report_path, &report)?;
    res.outputs.push(report_path);
    let mdir = out.join("measures");
    std::fs::create_dir_all(&mdir)?;
    for (l, (e, p)) in empirical.iter().zip(&predicted.measures).enumerate() {
        res.outputs.push(Table::from_measure(e).write(&mdir, &format!("empirical-layer-{l}"), s.format)?);
        res.outputs.push(Table::from_measure(p).write(&mdir, &format!("predicted-layer-{l}"), s.format)?);
    }
    if svg {
        let xs: Vec<f64> = report.rows.iter().map(|r| r.layer as f64).collect();
        let series = [
            ("w1", report.rows.iter().map(|r| r.w1).collect()),
            ("ks", report.rows.iter().map(|r| r.ks).collect()),
        ];
        res.outputs.push(write_svg(out.join("trajectory.svg"), line_chart_svg(&xs, &series, "empirical vs predicted"))?);
    }
    if !report.summary.flagged_layers.is_empty() {
        res.warnings.push(format!(
            "layers {:?} exceed W1 tolerance {}",
            report.summary.flagged_layers, report.summary.tolerance
        ));
    }
    if cfg.increments.is_empty() {
        res.iterations = Some(0);
        res.residual = Some(0.0);
    } else {
        res.iterations = Some(predicted.iterations);
        res.residual = Some(predicted.residual);
    }
    res.summary = format!("{} layers, max W1 {:.4e}", cfg.increments.len(), report.summary.max_w1);
    Ok(res)
}

fn run_entropy(cfg: &EntropyConfig, s: Settings, out: &Path) -> Result<RunOutput> {
    let with_dim = |spec: &OperatorSpec| match cfg.dim {
        Some(d) => spec.clone().with_dim(d),
        None => spec.clone(),
    };
    let tokens = cfg
        .tokens
        .iter()
        .enumerate()
        .map(|(i, t)| seeded(&with_dim(t), s.seed, &[0, i as u64]).build_self_adjoint().map_err(|e| e.at_index(i)))
        .collect::<Result<Vec<_>>>()?;
    let ht = seeded(&with_dim(&cfg.ht), s.seed, &[1]).build_self_adjoint()?;
    let kde = KdeOptions { bandwidth: cfg.bandwidth, points: cfg.grid_points };
    let run = entropy_gap_experiment(&tokens, &ht, cfg.timesteps, s.seed, kde, cfg.bound)?;
    let mut res = RunOutput::default();
    let report_path = out.join("entropy_report.json");
    crate::io::write_json(&report_path, &run.report)?;
    res.outputs.push(report_path);
    let mut t = Table::new(["timestep", "entropy"]);
    for (i, h) in run.report.entropies.iter().enumerate() {
        t.push(vec![Cell::Int(i), Cell::Opt(*h)]);
    }
    res.outputs.push(t.write(out, "entropies", s.format)?);
    let mdir = out.join("measures");
    std::fs::create_dir_all(&mdir)?;
    for (i, mu) in run.logit_spectra.iter().enumerate() {
        res.outputs.push(Table::from_measure(mu).write(&mdir, &format!("logit-t{i:03}"), s.format)?);
    }
    res.warnings = run.report.warnings.clone();
    res.summary = match run.report.gap {
        Some(g) => format!("gap {g:+.6}"),
        None => "gap undefined".into(),
    };
    Ok(res)
}

fn run_multihead(cfg: &MultiheadConfig, s: Settings, out: &Path) -> Result<RunOutput> {
    if cfg.dims.is_empty() || cfg.seeds == 0 {
        return Err(Error::InvalidArgument("multihead needs at least one dimension and one seed".into()));
    }
    let mut deficits = Table::new(["dim", "seed", "deficit"]);
    let mut summary = Vec::new();
    for &dim in &cfg.dims {
        let heads = cfg
            .heads
            .iter()
            .enumerate()
            .map(|(h, spec)| {
                seeded(&spec.clone().with_dim(dim), s.seed, &[dim as u64, h as u64])
                    .build_self_adjoint()
                    .map_err(|e| e.at_index(h))
            })
            .collect::<Result<Vec<_>>>()?;
        let d = haar_head_deficits(&heads, &cfg.subalgebra, cfg.length, cfg.seeds, s.seed)?;
        for (k, &x) in d.iter().enumerate() {
            deficits.push(vec![Cell::Int(dim), Cell::Int(k), Cell::Num(x)]);
        }
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let sd = (d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / d.len() as f64).sqrt();
        let family = HeadFamily::new(heads.clone(), cfg.subalgebra.clone())?;
        let aggregate = trace_state(&multi_head_aggregate(&family)?).re;
        let head_mean = heads.iter().map(|h| trace_state(h).re).sum::<f64>() / heads.len() as f64;
        summary.push(json!({
            "dim": dim,
            "seeds": cfg.seeds,
            "mean_deficit": mean,
            "sd_deficit": sd,
            "aggregate_trace": aggregate,
            "mean_head_trace": head_mean,
        }));
    }
    let means: Vec<f64> = summary.iter().map(|v| v["mean_deficit"].as_f64().unwrap_or(f64::NAN)).collect();
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    let mut res = RunOutput::default();
    res.outputs.push(deficits.write(out, "deficits", s.format)?);
    let path = out.join("multihead_summary.json");
    crate::io::write_json(&path, &json!({ "by_dim": summary, "decreasing_with_dim": decreasing }))?;
    res.outputs.push(path);
    res.summary = format!("mean deficits {means:?}");
    Ok(res)
}
