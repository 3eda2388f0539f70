//! Command-line front end.
//!
//! Every subcommand writes its data artifact to `--out`, a run manifest to
//! `<out>.manifest.json`, and a one-object JSON summary to stdout. Exit
//! status is 0 on success, 2 when the optimizer hits a non-finite value and
//! 1 for every other failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::affinity::joint_affinity;
use crate::confetti::{confetti_apply, slle_inverse_adjust, ConfettiParams, SlleParams};
use crate::datagen::{gen_main, gen_tuning, MAIN_DEFAULT_N, TUNING_DEFAULT_N};
use crate::divergence::{Evaluator, JediParams};
use crate::error::{Error, Result};
use crate::evaluation::{nos_distance, nos_label};
use crate::io;
use crate::matrix::{labels_to_distance, pairwise_euclidean, DistanceMatrix};
use crate::optimizer::{optimize, OptimizerConfig, RunTrace};

#[derive(Debug, Parser)]
#[command(
    name = "jedi-confetti",
    version,
    about = "Embeddings with prior knowledge factored out"
)]
pub struct Cli {
    /// Worker threads for pairwise computations. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: u16,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Plain t-SNE.
    Tsne(TsneArgs),
    /// t-SNE that moves away from the neighborhoods of a prior.
    Jedi(JediArgs),
    /// Subtract a prior from the input distances.
    Confetti(ConfettiArgs),
    /// Push same-label pairs apart.
    SlleAdjust(SlleArgs),
    /// Neighborhood overlap curve between two structures.
    Nos(NosArgs),
    /// Write a synthetic dataset and its two label vectors.
    Datagen(DatagenArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct InputArgs {
    /// Data matrix CSV, or a distance matrix with --precomputed.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub precomputed: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct PriorArgs {
    /// Prior as data matrix CSV, or a distance matrix with --prior-precomputed.
    #[arg(
        long,
        required_unless_present = "prior_labels",
        conflicts_with = "prior_labels"
    )]
    pub prior: Option<PathBuf>,
    #[arg(long, requires = "prior")]
    pub prior_precomputed: bool,
    /// Prior as one integer label per line.
    #[arg(long)]
    pub prior_labels: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RunArgs {
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200.0)]
    pub learning_rate: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct TsneArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Defaults to n/5.
    #[arg(long)]
    pub perplexity: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct JediArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub prior: PriorArgs,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.99)]
    pub beta: f64,
    /// Defaults to n/5.
    #[arg(long)]
    pub perplexity: Option<f64>,
    /// Defaults to n/10.
    #[arg(long)]
    pub prior_perplexity: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ConfettiArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub prior: PriorArgs,
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SlleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct NosArgs {
    /// Data matrix or embedding CSV, or a distance matrix with --a-precomputed.
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub a_precomputed: bool,
    #[arg(
        long,
        required_unless_present = "b_labels",
        conflicts_with = "b_labels"
    )]
    pub b: Option<PathBuf>,
    #[arg(long, requires = "b")]
    pub b_precomputed: bool,
    #[arg(long)]
    pub b_labels: Option<PathBuf>,
    /// Curve as `k,score` CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSet {
    Main,
    Tuning,
}

#[derive(Debug, Args, Serialize)]
pub struct DatagenArgs {
    #[arg(long, value_enum, default_value_t = DataSet::Main)]
    pub set: DataSet,
    /// Defaults to 2000 for main, 1000 for tuning.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to `<out>.labels_a.csv`.
    #[arg(long)]
    pub labels_a: Option<PathBuf>,
    /// Defaults to `<out>.labels_b.csv`.
    #[arg(long)]
    pub labels_b: Option<PathBuf>,
}

/// Everything needed to repeat a run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub argv: Vec<String>,
    pub params: Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub threads: u16,
    pub duration_secs: f64,
    pub version: &'static str,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Parses `argv` (program name first), runs the command and returns the exit status.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let argv: Vec<String> = argv
        .iter()
        .map(|s| s.to_string_lossy().into_owned())
        .collect();
    match run(&cli, argv) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NumericalAbort(_) => 2,
                _ => 1,
            }
        }
    }
}

/// Runs a parsed command inside a pool of `cli.threads` workers and returns the summary.
pub fn run(cli: &Cli, argv: Vec<String>) -> Result<Value> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(usize::from(cli.threads))
        .build()
        .map_err(|e| Error::Shape(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let out = pool.install(|| execute(&cli.command))?;
    let manifest = RunManifest {
        command: out.command,
        argv,
        params: serde_json::to_value(&cli.command)?,
        inputs: out.inputs,
        outputs: out.outputs.clone(),
        seed: out.seed,
        threads: cli.threads,
        duration_secs: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION"),
    };
    let path = manifest_path(&out.outputs[0]);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    let mut summary = out.summary;
    summary["command"] = json!(out.command);
    summary["outputs"] = json!(out.outputs);
    summary["manifest"] = json!(path);
    Ok(summary)
}

struct Outcome {
    command: &'static str,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    seed: Option<u64>,
    summary: Value,
}

fn load_distances(path: &Path, precomputed: bool) -> Result<DistanceMatrix> {
    if precomputed {
        io::read_distance_matrix(path)
    } else {
        pairwise_euclidean(&io::read_data_matrix(path)?)
    }
}

fn load_prior(prior: &PriorArgs, inputs: &mut Vec<PathBuf>) -> Result<DistanceMatrix> {
    match (&prior.prior, &prior.prior_labels) {
        (Some(path), _) => {
            inputs.push(path.clone());
            load_distances(path, prior.prior_precomputed)
        }
        (None, Some(path)) => {
            inputs.push(path.clone());
            Ok(labels_to_distance(&io::read_labels(path)?))
        }
        (None, None) => Err(Error::Shape("no prior given".into())),
    }
}

fn check_same_n(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

fn optimizer_config(run: &RunArgs) -> OptimizerConfig {
    OptimizerConfig {
        iterations: run.iters,
        learning_rate: run.learning_rate,
        seed: run.seed,
        ..Default::default()
    }
}

fn trace_summary(trace: &RunTrace, n: usize, unconverged: usize) -> Value {
    json!({
        "n": n,
        "iterations": trace.objectives.len(),
        "final_objective": trace.objectives.last(),
        "final_gradient_norm": trace.final_gradient_norm,
        "wall_clock_secs": trace.wall_clock.as_secs_f64(),
        "unconverged_rows": unconverged,
    })
}

fn execute(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Tsne(a) => {
            let d = load_distances(&a.input.input, a.input.precomputed)?;
            let n = d.n();
            let perplexity = a.perplexity.unwrap_or(n as f64 / 5.0);
            let cfg = optimizer_config(&a.run);
            cfg.validate()?;
            let (p, cond) = joint_affinity(&d, perplexity)?;
            let (y, trace) = optimize(&mut Evaluator::new(p, None)?, &cfg)?;
            io::write_embedding(&a.out, &y)?;
            let mut summary = trace_summary(&trace, n, cond.unconverged().len());
            summary["perplexity"] = json!(perplexity);
            Ok(Outcome {
                command: "tsne",
                inputs: vec![a.input.input.clone()],
                outputs: vec![a.out.clone()],
                seed: Some(a.run.seed),
                summary,
            })
        }
        Command::Jedi(a) => {
            let mut inputs = vec![a.input.input.clone()];
            let d_x = load_distances(&a.input.input, a.input.precomputed)?;
            let d_z = load_prior(&a.prior, &mut inputs)?;
            let n = d_x.n();
            check_same_n(n, d_z.n())?;
            let defaults = JediParams::defaults_for(n);
            let params = JediParams {
                alpha: a.alpha,
                beta: a.beta,
                perplexity: a.perplexity.unwrap_or(defaults.perplexity),
                prior_perplexity: a.prior_perplexity.unwrap_or(defaults.prior_perplexity),
            };
            params.validate()?;
            let cfg = optimizer_config(&a.run);
            cfg.validate()?;
            let (p, cond) = joint_affinity(&d_x, params.perplexity)?;
            let (p_prior, cond_prior) = joint_affinity(&d_z, params.prior_perplexity)?;
            let mut eval = Evaluator::new(p, Some((p_prior, params.alpha, params.beta)))?;
            let (y, trace) = optimize(&mut eval, &cfg)?;
            io::write_embedding(&a.out, &y)?;
            let mut summary = trace_summary(&trace, n, cond.unconverged().len());
            summary["unconverged_prior_rows"] = json!(cond_prior.unconverged().len());
            summary["params"] = json!(params);
            Ok(Outcome {
                command: "jedi",
                inputs,
                outputs: vec![a.out.clone()],
                seed: Some(a.run.seed),
                summary,
            })
        }
        Command::Confetti(a) => {
            let mut inputs = vec![a.input.input.clone()];
            let d_x = load_distances(&a.input.input, a.input.precomputed)?;
            let d_z = load_prior(&a.prior, &mut inputs)?;
            check_same_n(d_x.n(), d_z.n())?;
            let adjusted = confetti_apply(&d_x, &d_z, &ConfettiParams { lambda: a.lambda })?;
            io::write_distance_matrix(&a.out, &adjusted)?;
            Ok(Outcome {
                command: "confetti",
                inputs,
                outputs: vec![a.out.clone()],
                seed: None,
                summary: json!({ "n": adjusted.n(), "lambda": a.lambda, "max": adjusted.max() }),
            })
        }
        Command::SlleAdjust(a) => {
            let d = load_distances(&a.input.input, a.input.precomputed)?;
            let labels = io::read_labels(&a.labels)?;
            let params = SlleParams {
                alpha: a.alpha,
                ..SlleParams::defaults_for(d.n())
            };
            let adjusted = slle_inverse_adjust(&d, &labels, &params)?;
            io::write_distance_matrix(&a.out, &adjusted)?;
            Ok(Outcome {
                command: "slle-adjust",
                inputs: vec![a.input.input.clone(), a.labels.clone()],
                outputs: vec![a.out.clone()],
                seed: None,
                summary: json!({ "n": adjusted.n(), "alpha": a.alpha, "classes": labels.distinct() }),
            })
        }
        Command::Nos(a) => {
            let d_a = load_distances(&a.a, a.a_precomputed)?;
            let (curve, mode, b_path) = match (&a.b, &a.b_labels) {
                (Some(b), _) => (
                    nos_distance(&d_a, &load_distances(b, a.b_precomputed)?)?,
                    "distance",
                    b,
                ),
                (None, Some(l)) => (nos_label(&d_a, &io::read_labels(l)?)?, "labels", l),
                (None, None) => return Err(Error::Shape("no second structure given".into())),
            };
            io::write_curve(&a.out, &curve)?;
            Ok(Outcome {
                command: "nos",
                inputs: vec![a.a.clone(), b_path.clone()],
                outputs: vec![a.out.clone()],
                seed: None,
                summary: json!({ "n": curve.n, "mode": mode, "area": curve.area }),
            })
        }
        Command::Datagen(a) => {
            let ds = match a.set {
                DataSet::Main => gen_main(a.n.unwrap_or(MAIN_DEFAULT_N), a.seed)?,
                DataSet::Tuning => gen_tuning(a.n.unwrap_or(TUNING_DEFAULT_N), a.seed)?,
            };
            let la = a
                .labels_a
                .clone()
                .unwrap_or_else(|| sibling(&a.out, ".labels_a.csv"));
            let lb = a
                .labels_b
                .clone()
                .unwrap_or_else(|| sibling(&a.out, ".labels_b.csv"));
            io::write_data_matrix(&a.out, &ds.data)?;
            io::write_labels(&la, &ds.labels_a)?;
            io::write_labels(&lb, &ds.labels_b)?;
            Ok(Outcome {
                command: "datagen",
                inputs: Vec::new(),
                outputs: vec![a.out.clone(), la, lb],
                seed: Some(a.seed),
                summary: json!({
                    "n": ds.data.n(),
                    "dims": ds.data.dims(),
                    "prior_dims": [ds.prior_dims.start, ds.prior_dims.end],
                    "hidden_dims": [ds.hidden_dims.start, ds.hidden_dims.end],
                }),
            })
        }
    }
}
