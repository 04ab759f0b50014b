//! `pamm` batch front end: matte, composite, eval, sweep, synth.
//!
//! Exit codes: 0 success, 1 internal failure, 2 bad input or arguments.
//! Diagnostics go to stderr; data goes to files (or stdout for CSVs
//! without `--out`).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pamm::{
    composite, extract_foreground, load_alpha, load_image, load_inputs, run_benchmark, run_matting,
    run_sweep, save_alpha, save_rgb, save_rgba, write_synthetic_dataset, Error, RunConfiguration,
    SweepAxis, SweepSpec,
};

#[derive(Parser)]
#[command(name = "pamm", version, about = "Patch alignment manifold matting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate an alpha matte from an image and a trimap.
    Matte {
        image: PathBuf,
        trimap: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Solver trace CSV (default: next to the matte, `.trace.csv`).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Also write the alignment matrix in Matrix Market format.
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
    },
    /// Cut the foreground with a matte and place it over a new background.
    Composite {
        image: PathBuf,
        matte: PathBuf,
        background: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the RGBA foreground layer.
        #[arg(long)]
        foreground: Option<PathBuf>,
    },
    /// Matte and score every image of a dataset (`input/ trimap/ gt/`).
    Eval {
        dataset: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// One benchmark per value of a single parameter.
    Sweep {
        dataset: PathBuf,
        /// iterations | stride | patch-size | dims
        #[arg(long)]
        axis: String,
        /// Comma-separated values, e.g. `50,150,250` or `3-3-2,3-3-3`.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Write a synthetic dataset with exact ground truth.
    Synth {
        dir: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,
        /// Image size as HxW.
        #[arg(long, default_value = "64x64")]
        size: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// pca | lle | le | isomap | casiso
    #[arg(long)]
    method: Option<String>,
    /// Target dimension, or `3-d1-d2` for casiso.
    #[arg(long)]
    dims: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    stride: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    iters: Option<String>,
    /// Working resolution HxW, or `none`.
    #[arg(long)]
    resize: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other configuration key, as `key=value` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    extra: Vec<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfiguration, Failure> {
        let mut cfg = match &self.config {
            Some(p) if !p.exists() => return Err(Failure::input("config file not found")),
            Some(p) => RunConfiguration::load(p)?,
            None => RunConfiguration::default(),
        };
        let flags = [
            ("method", &self.method),
            ("dims", &self.dims),
            ("k", &self.k),
            ("window", &self.window),
            ("stride", &self.stride),
            ("lambda", &self.lambda),
            ("iters", &self.iters),
            ("resize", &self.resize),
            ("workers", &self.workers),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.extra {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Failure::input(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            cfg.set(k, v)?;
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Encode { .. } | Error::NonFiniteObjective { .. } | Error::IndexOutOfRange { .. } => 1,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

fn require(path: &Path, what: &str) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::input(format!("{what} not found")))
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::internal(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::internal(e.to_string())),
    }
}

fn trace_path(out: &Path) -> PathBuf {
    out.with_extension("trace.csv")
}

fn cmd_matte(
    image: &Path,
    trimap: &Path,
    run: &RunArgs,
    trace: Option<&Path>,
    dump_matrix: Option<&Path>,
) -> Result<(), Failure> {
    require(image, "image")?;
    require(trimap, "trimap")?;
    let cfg = run.resolve()?;
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| Failure::input("matte needs --out"))?;
    let (img, tri) = load_inputs::<f64>(image, trimap, cfg.resize)?;
    let outcome = run_matting(&img, &tri, &cfg)?;
    if outcome.unconstrained {
        eprintln!("warning: trimap has no labeled pixels; the matte is not anchored");
    }
    save_alpha(&outcome.alpha, &out)?;
    let trace_out = trace.map(Path::to_path_buf).unwrap_or_else(|| trace_path(&out));
    let mut csv = Vec::new();
    outcome
        .trace
        .write_csv(&mut csv)
        .map_err(|e| Failure::internal(e.to_string()))?;
    write_output(Some(&trace_out), &String::from_utf8_lossy(&csv))?;
    if let Some(p) = dump_matrix {
        let mut mm = Vec::new();
        outcome
            .matrix
            .write_matrix_market(&mut mm)
            .map_err(|e| Failure::internal(e.to_string()))?;
        write_output(Some(p), &String::from_utf8_lossy(&mm))?;
    }
    let (h, w) = img.dims();
    let d = &outcome.diagnostics;
    eprintln!(
        "matte {h}x{w} {}: {} patches ({} degenerate), {} iterations, objective {:.6e}{}",
        cfg.modeler.summary(),
        d.patches,
        d.degenerate_patches,
        outcome.trace.iterations_run,
        outcome.trace.objective.last().copied().unwrap_or(f64::NAN),
        if outcome.trace.converged { ", converged" } else { "" }
    );
    Ok(())
}

fn cmd_composite(
    image: &Path,
    matte: &Path,
    background: &Path,
    out: &Path,
    foreground: Option<&Path>,
) -> Result<(), Failure> {
    require(image, "image")?;
    require(matte, "matte")?;
    require(background, "background")?;
    let img = load_image::<f64>(image)?;
    let alpha = load_alpha::<f64>(matte)?;
    let bg = load_image::<f64>(background)?;
    let fg = extract_foreground(&img, &alpha)?;
    save_rgb(&composite(&fg, &bg)?, out)?;
    if let Some(p) = foreground {
        save_rgba(&fg, p)?;
    }
    Ok(())
}

fn cmd_eval(dataset: &Path, run: &RunArgs) -> Result<(), Failure> {
    if !dataset.is_dir() {
        return Err(Failure::input("dataset not found"));
    }
    let cfg = run.resolve()?;
    let report = run_benchmark(dataset, &cfg)?;
    write_output(cfg.out.as_deref(), &report.to_csv())?;
    eprintln!(
        "eval {}: {} images, average MSE {:.6}, SAD {:.3}",
        report.method,
        report.records.len(),
        report.average_mse(),
        report.average_sad()
    );
    match report.failures() {
        0 => Ok(()),
        n => Err(Failure::internal(format!("{n} image(s) failed"))),
    }
}

fn cmd_sweep(dataset: &Path, axis: &str, values: &[String], run: &RunArgs) -> Result<(), Failure> {
    if !dataset.is_dir() {
        return Err(Failure::input("dataset not found"));
    }
    let base = run.resolve()?;
    let spec = SweepSpec {
        axis: axis.parse::<SweepAxis>()?,
        values: values.to_vec(),
        base,
    };
    let report = run_sweep(&spec, dataset)?;
    write_output(spec.base.out.as_deref(), &report.to_csv())?;
    match report.failures {
        0 => Ok(()),
        n => Err(Failure::internal(format!("{n} image run(s) failed"))),
    }
}

fn cmd_synth(dir: &Path, seeds: &[u64], size: &str) -> Result<(), Failure> {
    let (h, w) = pamm::pipeline::parse_resize(size)?
        .ok_or_else(|| Failure::input("synth needs a size HxW"))?;
    let names = write_synthetic_dataset(dir, seeds, h, w)?;
    eprintln!("wrote {} synthetic cases to {}", names.len(), dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Matte { image, trimap, run, trace, dump_matrix } => {
            cmd_matte(image, trimap, run, trace.as_deref(), dump_matrix.as_deref())
        }
        Command::Composite { image, matte, background, out, foreground } => {
            cmd_composite(image, matte, background, out, foreground.as_deref())
        }
        Command::Eval { dataset, run } => cmd_eval(dataset, run),
        Command::Sweep { dataset, axis, values, run } => cmd_sweep(dataset, axis, values, run),
        Command::Synth { dir, seeds, size } => cmd_synth(dir, seeds, size),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
