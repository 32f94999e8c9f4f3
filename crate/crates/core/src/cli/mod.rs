//! Command-line driver: argument parsing, run manifests and exit codes.
//!
//! Exit codes: 0 success, 2 input error, 3 I/O error, 4 numerical
//! non-convergence.

mod commands;
mod table;

use std::ffi::OsString;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

pub use commands::{
    execute, DepthScanConfig, EntropyConfig, Invocation, MeasureSource, MultiheadConfig, RunOutput, Settings,
};
pub use table::{Cell, Format, Table};

use crate::freeconv::{ConvolutionMethod, SubordinationOptions};
use crate::io::read_json;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "freeformer", version, about = "Free-probability experiments on operator models of attention")]
pub struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for all outputs, including manifest.json.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Format for tables and measures.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Spectral measures of the operators in a JSON spec array.
    Spectrum {
        specs: PathBuf,
        /// Also write one SVG histogram per operator.
        #[arg(long)]
        svg: bool,
    },
    /// Free additive convolution of two measures.
    ///
    /// Each measure is `semicircle:VAR`, a measure CSV (`x,weight` or
    /// `x,density`), or a JSON file holding one operator spec.
    Convolve {
        /// First measure.
        a: String,
        /// Second measure.
        b: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Subordination)]
        method: MethodArg,
        /// Distance above the real axis for Stieltjes inversion.
        #[arg(long, default_value_t = 1e-3)]
        eta: f64,
        /// Output grid points (subordination) and semicircle grid points.
        #[arg(long, default_value_t = 2048)]
        grid: usize,
        /// Matrix dimension for the Monte Carlo method.
        #[arg(long, default_value_t = 1000)]
        dim: usize,
        /// Monte Carlo trials, pooled.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Iteration cap per grid point.
        #[arg(long, default_value_t = 5000)]
        max_iter: usize,
        /// Residual tolerance per grid point.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Also write an SVG plot of the density.
        #[arg(long)]
        svg: bool,
    },
    /// Attention over a token sequence with positional operators.
    AttentionDemo {
        sequence: PathBuf,
        /// Divide scores by the square root of the dimension.
        #[arg(long)]
        scale: bool,
    },
    /// Layer-by-layer spectra against the iterated convolution prediction.
    DepthScan {
        config: PathBuf,
        /// Also write an SVG line chart of W1 and KS by layer.
        #[arg(long)]
        svg: bool,
    },
    /// Spectral entropy of logit operators against free entropy.
    Entropy { config: PathBuf },
    /// Amalgamated-freeness deficits of Haar-rotated heads.
    Multihead { config: PathBuf },
    /// Re-run the invocation recorded in a manifest with its seed and format.
    Replay { manifest: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    Subordination,
    Montecarlo,
}

/// Record of one run, written to `manifest.json` whether or not it succeeded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// The resolved invocation; absent when the inputs could not be read.
    pub config: Option<Invocation>,
    pub seed: u64,
    pub format: Format,
    pub threads: Option<usize>,
    pub version: String,
    pub duration_seconds: f64,
    pub outputs: Vec<String>,
    pub exit_code: i32,
    pub error: Option<String>,
    pub iterations: Option<usize>,
    pub residual: Option<f64>,
    pub warnings: Vec<String>,
}

pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Io(_) => EXIT_IO,
        Error::Csv(e) if e.is_io_error() => EXIT_IO,
        Error::Json(e) if e.is_io() => EXIT_IO,
        Error::NonConvergence { .. } | Error::Eigen(_) => EXIT_NUMERIC,
        _ => EXIT_INPUT,
    }
}

fn resolve(command: &CliCommand) -> Result<Invocation> {
    Ok(match command {
        CliCommand::Spectrum { specs, svg } => Invocation::Spectrum { specs: crate::io::read_specs(specs)?, svg: *svg },
        CliCommand::Convolve { a, b, method, eta, grid, dim, trials, max_iter, tol, svg } => Invocation::Convolve {
            a: MeasureSource::parse(a)?,
            b: MeasureSource::parse(b)?,
            method: match method {
                MethodArg::Subordination => ConvolutionMethod::Subordination,
                MethodArg::Montecarlo => ConvolutionMethod::Montecarlo,
            },
            options: SubordinationOptions { eta: *eta, grid_points: *grid, tolerance: *tol, max_iterations: *max_iter },
            dim: *dim,
            trials: *trials,
            svg: *svg,
        },
        CliCommand::AttentionDemo { sequence, scale } => {
            Invocation::AttentionDemo { sequence: read_json(sequence)?, scale_by_sqrt_dim: *scale }
        }
        CliCommand::DepthScan { config, svg } => Invocation::DepthScan { config: read_json(config)?, svg: *svg },
        CliCommand::Entropy { config } => Invocation::Entropy { config: read_json(config)? },
        CliCommand::Multihead { config } => Invocation::Multihead { config: read_json(config)? },
        CliCommand::Replay { .. } => unreachable!("replay is resolved from its manifest"),
    })
}

fn command_name(command: &CliCommand) -> &'static str {
    match command {
        CliCommand::Spectrum { .. } => "spectrum",
        CliCommand::Convolve { .. } => "convolve",
        CliCommand::AttentionDemo { .. } => "attention-demo",
        CliCommand::DepthScan { .. } => "depth-scan",
        CliCommand::Entropy { .. } => "entropy",
        CliCommand::Multihead { .. } => "multihead",
        CliCommand::Replay { .. } => "replay",
    }
}

fn relative(out: &Path, p: &Path) -> String {
    p.strip_prefix(out).unwrap_or(p).display().to_string()
}

fn diagnostic(msg: &str) {
    let color = std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stderr().is_terminal();
    if color {
        eprintln!("\x1b[31merror:\x1b[0m {msg}");
    } else {
        eprintln!("error: {msg}");
    }
}

/// Runs one parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let start = Instant::now();
    let (mut seed, mut format) = (cli.seed, cli.format);
    let resolved = match &cli.command {
        CliCommand::Replay { manifest } => read_json::<RunManifest>(manifest).and_then(|m| {
            seed = m.seed;
            format = m.format;
            m.config.ok_or_else(|| Error::InvalidArgument("manifest has no resolved configuration".into()))
        }),
        other => resolve(other),
    };
    let name = resolved.as_ref().map(|i| i.name()).unwrap_or(command_name(&cli.command));
    let settings = Settings { seed, format };
    let config = resolved.as_ref().ok().cloned();
    let result = resolved.and_then(|inv| {
        let job = || execute(&inv, settings, &cli.out_dir);
        match cli.threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
                .install(job),
            None => job(),
        }
    });
    let (code, output, error) = match result {
        Ok(o) => (EXIT_OK, o, None),
        Err(e) => {
            let code = exit_code(&e);
            let out = RunOutput { residual: e.residual(), ..Default::default() };
            (code, out, Some(e))
        }
    };
    let manifest = RunManifest {
        command: name.to_string(),
        config,
        seed,
        format,
        threads: cli.threads,
        version: env!("CARGO_PKG_VERSION").to_string(),
        duration_seconds: start.elapsed().as_secs_f64(),
        outputs: output.outputs.iter().map(|p| relative(&cli.out_dir, p)).collect(),
        exit_code: code,
        error: error.as_ref().map(|e| e.to_string()),
        iterations: output.iterations,
        residual: output.residual,
        warnings: output.warnings.clone(),
    };
    let manifest_written = std::fs::create_dir_all(&cli.out_dir)
        .map_err(Error::from)
        .and_then(|_| crate::io::write_json(&cli.out_dir.join("manifest.json"), &manifest));
    if let Some(e) = &error {
        diagnostic(&e.to_string());
    }
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    if let Err(e) = manifest_written {
        diagnostic(&format!("could not write manifest: {e}"));
        if code == EXIT_OK {
            return EXIT_IO;
        }
    }
    if code == EXIT_OK {
        println!(
            "{name}: {} ({} files in {}, {} warnings)",
            output.summary,
            output.outputs.len(),
            cli.out_dir.display(),
            output.warnings.len()
        );
    }
    code
}

/// Parses `args` (including the program name) and runs.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn main_entry() -> i32 {
    run_from(std::env::args_os())
}
