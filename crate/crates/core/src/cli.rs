//! Command-line driver: train, evaluate, stream, drift and synth.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::controller::{
    generate_synthetic_drift, load_model, save_model, train_initial_with_checkpoint,
    write_metrics_csv, ControllerError, DriftKind, RelmConfig, RelmModel, SynthSpec,
};
use crate::evaluator::{DriftReport, Verdict};
use crate::ingest::{load_csv, write_atomic, IngestError, SchemaSource};
use crate::latent::LatentError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DATA: i32 = 4;
pub const EXIT_MODEL_FILE: i32 = 5;
pub const EXIT_CONFIG: i32 = 6;
pub const EXIT_TRAINING: i32 = 7;
pub const EXIT_SYNTH_SPEC: i32 = 8;
pub const EXIT_DRIFT_WARN: i32 = 10;
pub const EXIT_DRIFT_RECALIBRATE: i32 = 20;

const EXIT_CODES: &str = "\
Exit codes:
   0  success (drift: verdict none)
   2  invalid command line
   3  file could not be read or written
   4  data does not parse or does not match the model schema
   5  model file has bad magic, unsupported version, bad checksum or bad layout
   6  invalid configuration
   7  training or numerical failure
   8  invalid synthetic data spec
  10  drift: verdict warn
  20  drift: verdict recalibrate";

#[derive(Debug, Parser)]
#[command(name = "relm", version, about = "Self-recalibrating binary classifier trained by CMA-ES", after_help = EXIT_CODES)]
pub struct Cli {
    /// Print progress to stderr; repeat for more detail.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit encoders and train the policy on a labelled CSV.
    #[command(after_help = EXIT_CODES)]
    Train(TrainArgs),
    /// Score a saved model on a labelled CSV.
    #[command(after_help = EXIT_CODES)]
    Evaluate(EvaluateArgs),
    /// Feed a labelled CSV to a saved model step by step, recalibrating on drift.
    #[command(after_help = EXIT_CODES)]
    Stream(StreamArgs),
    /// Report drift of one batch against a saved model; the exit code carries the verdict.
    #[command(after_help = EXIT_CODES)]
    Drift(DriftArgs),
    /// Write a synthetic Gaussian-blob dataset with a drift at a known period.
    #[command(after_help = EXIT_CODES)]
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// Config file of `section.key = value` lines.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. `--set cmaes.sigma0=0.3`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Seed for every random stream (overrides cmaes.seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Maximum parallel fitness evaluators; 0 uses every core (overrides runtime.workers).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labelled training CSV.
    #[arg(long, value_name = "CSV")]
    pub data: PathBuf,
    /// Where to write the trained model.
    #[arg(long, value_name = "PATH")]
    pub model_out: PathBuf,
    /// Where to write the metrics CSV.
    #[arg(long, value_name = "PATH")]
    pub metrics_out: PathBuf,
    /// Also save the model here every time the deployed genome improves.
    #[arg(long, value_name = "PATH")]
    pub checkpoint: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Model written by `train` or `stream`.
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Labelled CSV with the model's columns.
    #[arg(long, value_name = "CSV")]
    pub data: PathBuf,
    /// Where to write the `metric,value` report; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub report_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    /// Model written by `train` or `stream`.
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Labelled stream CSV; one step per period tag, or per `stream.batch_rows` rows without a period column.
    #[arg(long, value_name = "CSV")]
    pub data: PathBuf,
    /// Where to write the updated model.
    #[arg(long, value_name = "PATH")]
    pub model_out: PathBuf,
    /// Where to write the full metrics history.
    #[arg(long, value_name = "PATH")]
    pub metrics_out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct DriftArgs {
    /// Model written by `train` or `stream`.
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Labelled batch CSV with the model's columns.
    #[arg(long, value_name = "CSV")]
    pub data: PathBuf,
    /// Where to write the `metric,value` report.
    #[arg(long, value_name = "PATH")]
    pub report_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output CSV.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Number of Gaussian blobs; blob k carries label k mod 2.
    #[arg(long, default_value_t = 2)]
    pub blobs: usize,
    /// Feature count; dimensions beyond the first two are pure noise.
    #[arg(long, default_value_t = 2)]
    pub dims: usize,
    #[arg(long, default_value_t = 1000)]
    pub rows_per_period: usize,
    #[arg(long, default_value_t = 4)]
    pub periods: u64,
    /// First drifted period.
    #[arg(long, default_value_t = 2)]
    pub drift_period: u64,
    /// rotation (degrees), mean-shift (added to x0) or label-flip (probability).
    #[arg(long, default_value = "rotation")]
    pub drift: String,
    #[arg(long, default_value_t = 0.0)]
    pub magnitude: f64,
    /// Distance of each blob center from the origin, in noise units.
    #[arg(long, default_value_t = 3.0)]
    pub separation: f64,
    /// Noise scale along each blob's tangent relative to the radial scale.
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// Maps an error onto the documented exit codes.
pub fn exit_code(e: &ControllerError) -> i32 {
    match e {
        ControllerError::Ingest(IngestError::Open { .. } | IngestError::Write { .. }) => EXIT_IO,
        ControllerError::Io { .. } => EXIT_IO,
        ControllerError::Ingest(_) | ControllerError::SchemaMismatch(_) | ControllerError::SingleLabel(_) => {
            EXIT_DATA
        }
        ControllerError::Latent(
            LatentError::UnseenCategory { .. } | LatentError::DimensionMismatch { .. } | LatentError::Ingest(_),
        ) => EXIT_DATA,
        ControllerError::BadMagic
        | ControllerError::UnsupportedVersion { .. }
        | ControllerError::Checksum { .. }
        | ControllerError::Persist(_) => EXIT_MODEL_FILE,
        ControllerError::Config(_) => EXIT_CONFIG,
        ControllerError::Synth(_) => EXIT_SYNTH_SPEC,
        ControllerError::Latent(_)
        | ControllerError::Policy(_)
        | ControllerError::Cmaes(_)
        | ControllerError::Environment(_)
        | ControllerError::Eval(_)
        | ControllerError::Workers(_) => EXIT_TRAINING,
    }
}

fn apply_overrides(cfg: &mut RelmConfig, o: &Overrides) -> Result<(), ControllerError> {
    if let Some(path) = &o.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ControllerError::Config(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    for kv in &o.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| ControllerError::Config(format!("--set '{kv}' is not KEY=VALUE")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(seed) = o.seed {
        cfg.cmaes.seed = seed;
    }
    if let Some(w) = o.workers {
        cfg.workers = w;
    }
    cfg.validate()
}

fn write_text(path: &Path, text: &str) -> Result<(), ControllerError> {
    write_atomic(path, |w| w.write_all(text.as_bytes()))?;
    Ok(())
}

fn write_metrics(path: &Path, model: &RelmModel) -> Result<(), ControllerError> {
    write_atomic(path, |w| write_metrics_csv(&model.metrics, w))?;
    Ok(())
}

fn report_text(r: &DriftReport, rows: usize) -> String {
    let mut lines = vec![
        "metric,value".to_string(),
        format!("rows,{rows}"),
        format!("accuracy,{}", r.accuracy),
        format!("f1,{}", r.f1),
        format!("log_loss,{}", r.log_loss),
        format!("baseline_accuracy,{}", r.baseline_accuracy),
        format!("baseline_f1,{}", r.baseline_f1),
        format!("max_psi,{}", r.max_psi),
    ];
    for (j, v) in r.per_feature_psi.iter().enumerate() {
        lines.push(format!("psi_s{j},{v}"));
    }
    lines.push(format!("verdict,{}", r.verdict));
    let reasons: Vec<&str> = r.reasons.iter().map(|x| x.as_str()).collect();
    lines.push(format!("reasons,{}", reasons.join(";")));
    lines.join("\n") + "\n"
}

pub fn cmd_train(a: &TrainArgs, verbose: u8) -> Result<i32, ControllerError> {
    let mut cfg = RelmConfig::default();
    apply_overrides(&mut cfg, &a.overrides)?;
    let data = load_csv(&a.data, SchemaSource::Auto)?;
    let model = train_initial_with_checkpoint(&cfg, &data, a.checkpoint.clone())?;
    if verbose > 0 {
        let last = model.metrics.last().expect("training logs at least one generation");
        eprintln!(
            "trained {} generations on {} rows: accuracy {:.4}, f1 {:.4}",
            model.metrics.len(),
            data.len(),
            last.accuracy,
            last.f1
        );
    }
    save_model(&model, &a.model_out)?;
    write_metrics(&a.metrics_out, &model)?;
    Ok(EXIT_OK)
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<i32, ControllerError> {
    let model = load_model(&a.model)?;
    let data = load_csv(&a.data, SchemaSource::Explicit(model.schema.clone()))?;
    let s = model.evaluate(&data)?;
    let text = format!(
        "metric,value\nrows,{}\naccuracy,{}\nf1,{}\nlog_loss,{}\n",
        data.len(),
        s.accuracy,
        s.f1,
        s.log_loss
    );
    match &a.report_out {
        Some(p) => write_text(p, &text)?,
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}

pub fn cmd_stream(a: &StreamArgs, verbose: u8) -> Result<i32, ControllerError> {
    let mut model = load_model(&a.model)?;
    let mut cfg = model.config.clone();
    apply_overrides(&mut cfg, &a.overrides)?;
    model.config = cfg;
    if let Some(seed) = a.overrides.seed {
        model.reseed(seed);
    }
    let data = load_csv(&a.data, SchemaSource::Explicit(model.schema.clone()))?;
    for (i, batch) in model.stream_batches(&data).iter().enumerate() {
        let out = model.stream_step(batch)?;
        if verbose > 0 {
            eprintln!(
                "step {}: {} rows, accuracy {:.4}, max psi {:.4}, verdict {}{}",
                i + 1,
                batch.len(),
                out.report.accuracy,
                out.report.max_psi,
                out.report.verdict,
                if out.recalibrated { " (recalibrated)" } else { "" }
            );
        }
    }
    save_model(&model, &a.model_out)?;
    write_metrics(&a.metrics_out, &model)?;
    Ok(EXIT_OK)
}

pub fn cmd_drift(a: &DriftArgs) -> Result<i32, ControllerError> {
    let model = load_model(&a.model)?;
    let data = load_csv(&a.data, SchemaSource::Explicit(model.schema.clone()))?;
    let report = model.drift_check(&data)?;
    write_text(&a.report_out, &report_text(&report, data.len()))?;
    Ok(match report.verdict {
        Verdict::None => EXIT_OK,
        Verdict::Warn => EXIT_DRIFT_WARN,
        Verdict::Recalibrate => EXIT_DRIFT_RECALIBRATE,
    })
}

pub fn cmd_synth(a: &SynthArgs) -> Result<i32, ControllerError> {
    let drift = DriftKind::parse(&a.drift).ok_or_else(|| {
        ControllerError::Synth(format!(
            "unknown drift kind '{}' (rotation, mean-shift, label-flip)",
            a.drift
        ))
    })?;
    let spec = SynthSpec {
        blobs: a.blobs,
        dims: a.dims,
        rows_per_period: a.rows_per_period,
        periods: a.periods,
        drift_period: a.drift_period,
        drift,
        magnitude: a.magnitude,
        separation: a.separation,
        spread: a.spread,
        seed: a.seed,
    };
    let data = generate_synthetic_drift(&spec)?;
    write_atomic(&a.out, |w| data.write_csv(w).map_err(std::io::Error::other))?;
    Ok(EXIT_OK)
}

/// Parses `args` (program name first) and runs the subcommand, returning the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Train(a) => cmd_train(a, cli.verbose),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Stream(a) => cmd_stream(a, cli.verbose),
        Command::Drift(a) => cmd_drift(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("relm: error: {e}");
            exit_code(&e)
        }
    }
}
