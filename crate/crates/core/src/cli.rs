//! Command-line front end. Exit codes: 0 success, 2 bad input, 3 solver
//! failure, 4 size guard.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::value::RawValue;

use crate::diffusion::{DissimilarityPair, WaveletParams};
use crate::error::Error;
use crate::graph::{self, Graph};
use crate::matcher::{self, Extraction, InitStrategy, MatchConfig};
use crate::oracle;
use crate::report::{self, EvalReport, Format};
use crate::sweep::{self, SweepConfig};
use crate::transport::{MarginalMode, StepSchedule};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_GUARD: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "sigma",
    version,
    about = "Heat-wavelet Gromov-Wasserstein graph matching"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Match two edge-list graphs.
    Match(MatchArgs),
    /// Add noise edges to a graph and optionally relabel it.
    Perturb(PerturbArgs),
    /// Node correctness of a predicted correspondence.
    Eval(EvalArgs),
    /// Exact optimum over all permutations (at most 8 nodes).
    Oracle(OracleArgs),
    /// Noise sweep described by a config file, written as CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExtractArg {
    Argmax,
    Bijection,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MarginalArg {
    Ones,
    Weights,
}

#[derive(Debug, Args)]
pub struct WaveletArgs {
    /// Taylor order K of the heat wavelet.
    #[arg(long = "k", default_value_t = crate::diffusion::DEFAULT_ORDER)]
    pub k: usize,
    /// Diffusion time t.
    #[arg(long = "t", default_value_t = crate::diffusion::DEFAULT_TIME)]
    pub t: f64,
    /// Offset added to the largest wavelet entry.
    #[arg(long, default_value_t = crate::diffusion::DEFAULT_MARGIN)]
    pub margin: f64,
}

impl WaveletArgs {
    fn params(&self) -> Result<WaveletParams, Error> {
        WaveletParams::new(self.t, self.k, self.margin)
    }
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    /// Source edge list.
    #[arg(long)]
    pub source: PathBuf,
    /// Target edge list.
    #[arg(long)]
    pub target: PathBuf,
    #[command(flatten)]
    pub wavelet: WaveletArgs,
    /// Fixed step size; overrides the auto-scaled step.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Auto step: eta * max|gradient| at the first iteration.
    #[arg(long, default_value_t = crate::transport::DEFAULT_ETA_TARGET)]
    pub eta_auto_target: f64,
    /// Maximum mirror-descent iterations.
    #[arg(long, default_value_t = matcher::DEFAULT_ITERATIONS)]
    pub iters: usize,
    #[arg(long, default_value_t = crate::transport::DEFAULT_SINKHORN_TOL)]
    pub sinkhorn_tol: f64,
    #[arg(long, default_value_t = crate::transport::DEFAULT_SINKHORN_SWEEPS)]
    pub sinkhorn_sweeps: usize,
    /// Stop when the largest plan change falls below this.
    #[arg(long, default_value_t = matcher::DEFAULT_STOP_TOL)]
    pub stop_tol: f64,
    /// uniform | degree | degree:TEMP | file:PATH | truth:ALPHA (needs --truth).
    #[arg(long, default_value = "uniform")]
    pub init: String,
    #[arg(long, value_enum, default_value_t = ExtractArg::Argmax)]
    pub extract: ExtractArg,
    #[arg(long, value_enum, default_value_t = MarginalArg::Ones)]
    pub marginals: MarginalArg,
    /// Ground-truth correspondence (`u v` lines); enables NC.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// JSON report path (default: not written).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV correspondence path (default: not written).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    /// Input edge list.
    #[arg(long)]
    pub input: PathBuf,
    /// Noise level: add round(q * |E|) edges.
    #[arg(long, default_value_t = 0.0)]
    pub q: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relabel nodes by a random permutation drawn from the seed.
    #[arg(long)]
    pub permute: bool,
    /// Output edge list.
    #[arg(long)]
    pub out: PathBuf,
    /// Output ground-truth file (`source target` label lines).
    #[arg(long)]
    pub truth_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted correspondence: `u v` lines, CSV, or a JSON report.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground truth: `u v` lines or CSV.
    #[arg(long)]
    pub truth: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[command(flatten)]
    pub wavelet: WaveletArgs,
    /// JSON output path (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: PathBuf,
    /// CSV output path (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// An error with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: Error,
}

fn input(error: Error) -> Failure {
    let code = match error {
        Error::SizeGuard { .. } => EXIT_GUARD,
        _ => EXIT_INPUT,
    };
    Failure { code, error }
}

fn solver(error: Error) -> Failure {
    let code = match error {
        Error::SizeGuard { .. } => EXIT_GUARD,
        Error::InvalidParameter(_) | Error::IsolatedNode(_) | Error::Io { .. } => EXIT_INPUT,
        _ => EXIT_SOLVER,
    };
    Failure { code, error }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| input(Error::io(path.display().to_string(), e)))
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| input(Error::io(path.display().to_string(), e)))
}

fn read_graph(path: &Path) -> CliResult<Graph> {
    graph::parse_edge_list(&read(path)?).map_err(|e| {
        input(match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })
    })
}

fn read_pairs(path: &Path) -> CliResult<report::LabelPairs> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        return report::parse_report(text.as_bytes())
            .map(|r| r.correspondence)
            .map_err(input);
    }
    report::parse_correspondence(&text).map_err(input)
}

impl MatchArgs {
    fn config(
        &self,
        g_s: &Graph,
        g_t: &Graph,
        truth: Option<&[(String, String)]>,
    ) -> CliResult<MatchConfig> {
        let init = match self.init.split_once(':') {
            Some(("truth", alpha)) => {
                let truth = truth.ok_or_else(|| {
                    input(Error::InvalidParameter(
                        "init truth:ALPHA needs --truth".into(),
                    ))
                })?;
                let alpha: f64 = alpha.parse().map_err(|_| {
                    input(Error::InvalidParameter(format!(
                        "bad blend weight `{alpha}`"
                    )))
                })?;
                let perm = report::truth_permutation(g_s, g_t, truth).map_err(input)?;
                InitStrategy::Plan(matcher::blended_truth_plan(&perm, alpha).map_err(input)?)
            }
            _ => sweep::parse_init(&self.init).map_err(input)?,
        };
        let cfg = MatchConfig {
            wavelet: self.wavelet.params().map_err(input)?,
            iters: self.iters,
            step: match self.eta {
                Some(eta) => StepSchedule::Fixed(eta),
                None => StepSchedule::AutoScaled {
                    target: self.eta_auto_target,
                },
            },
            sinkhorn_tol: self.sinkhorn_tol,
            sinkhorn_sweeps: self.sinkhorn_sweeps,
            stop_tol: self.stop_tol,
            init,
            extraction: match self.extract {
                ExtractArg::Argmax => Extraction::RowArgmax,
                ExtractArg::Bijection => Extraction::GreedyBijection,
            },
            marginal_mode: match self.marginals {
                MarginalArg::Ones => MarginalMode::Ones,
                MarginalArg::Weights => MarginalMode::Weights,
            },
        };
        cfg.validate().map_err(input)?;
        Ok(cfg)
    }
}

fn cmd_match(args: &MatchArgs, out: &mut dyn Write) -> CliResult<()> {
    let g_s = read_graph(&args.source)?;
    let g_t = read_graph(&args.target)?;
    let truth = args.truth.as_deref().map(read_pairs).transpose()?;
    let cfg = args.config(&g_s, &g_t, truth.as_deref())?;
    let result = matcher::sigma_match(&cfg, &g_s, &g_t).map_err(solver)?;
    let report = EvalReport::new(&result, &g_s, &g_t, truth.as_deref()).map_err(input)?;
    if let Some(path) = &args.out {
        let bytes =
            report::serialize_report(&cfg, &result, &report, Format::Json).map_err(solver)?;
        write(path, &bytes)?;
    }
    if let Some(path) = &args.csv {
        let bytes =
            report::serialize_report(&cfg, &result, &report, Format::Csv).map_err(solver)?;
        write(path, &bytes)?;
    }
    let nc = report.nc.map_or("n/a".to_string(), |v| format!("{v:.6}"));
    let _ = writeln!(
        out,
        "nc={nc} objective={} iterations={} marginal_error={:.3e}",
        report::float_token(result.final_objective()),
        result.iterations_run,
        result.marginal_error
    );
    Ok(())
}

fn cmd_perturb(args: &PerturbArgs) -> CliResult<()> {
    let g = read_graph(&args.input)?;
    let (target, truth) =
        sweep::perturbed_copy(&g, args.q, args.seed, args.permute).map_err(input)?;
    let pairs: report::LabelPairs = (0..g.n())
        .map(|i| {
            (
                g.label(i).to_string(),
                target.label(truth.apply(i)).to_string(),
            )
        })
        .collect();
    write(&args.out, target.to_edge_list().as_bytes())?;
    write(
        &args.truth_out,
        report::format_correspondence(&pairs).as_bytes(),
    )
}

fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    let pred = read_pairs(&args.pred)?;
    let truth = read_pairs(&args.truth)?;
    let nc = report::node_correctness(&pred, &truth).map_err(input)?;
    let _ = writeln!(out, "{nc:.6}");
    Ok(())
}

#[derive(Serialize)]
struct OracleJson {
    best_perm: Vec<usize>,
    best_mapping: Vec<[String; 2]>,
    best_objective: Box<RawValue>,
    unique: bool,
    evaluated_count: usize,
}

fn cmd_oracle(args: &OracleArgs, out: &mut dyn Write) -> CliResult<()> {
    let g_s = read_graph(&args.source)?;
    let g_t = read_graph(&args.target)?;
    let n = g_s.n().max(g_t.n());
    if n > oracle::MAX_ENUMERATION_NODES {
        return Err(input(Error::SizeGuard {
            size: n,
            limit: oracle::MAX_ENUMERATION_NODES,
        }));
    }
    let (g_s, g_t) = matcher::equalize(&g_s, &g_t).map_err(input)?;
    let d = DissimilarityPair::from_graphs(&g_s, &g_t, &args.wavelet.params().map_err(input)?)
        .map_err(input)?;
    let r = oracle::brute_force_gw(&d).map_err(solver)?;
    let doc = OracleJson {
        best_perm: r.best_perm.as_slice().to_vec(),
        best_mapping: (0..n)
            .filter(|&i| !g_s.is_dummy(i))
            .map(|i| {
                [
                    g_s.label(i).to_string(),
                    g_t.label(r.best_perm.apply(i)).to_string(),
                ]
            })
            .collect(),
        best_objective: RawValue::from_string(report::float_token(r.best_objective))
            .expect("float token is valid JSON"),
        unique: r.unique,
        evaluated_count: r.evaluated_count,
    };
    let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| {
        solver(Error::InvalidParameter(format!(
            "serialization failed: {e}"
        )))
    })?;
    bytes.push(b'\n');
    match &args.out {
        Some(path) => write(path, &bytes),
        None => {
            let _ = out.write_all(&bytes);
            Ok(())
        }
    }
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> CliResult<()> {
    let cfg = SweepConfig::load(&args.config).map_err(input)?;
    let rows = sweep::run_sweep(&cfg).map_err(solver)?;
    let csv = sweep::rows_to_csv(&rows);
    match &args.out {
        Some(path) => write(path, csv.as_bytes()),
        None => {
            let _ = out.write_all(csv.as_bytes());
            Ok(())
        }
    }
}

/// Runs one parsed invocation.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    match &cli.command {
        Command::Match(a) => cmd_match(a, out),
        Command::Perturb(a) => cmd_perturb(a),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Oracle(a) => cmd_oracle(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
    }
}

/// Parses `args`, runs the command and returns the exit code. Diagnostics go
/// to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli, &mut stdout.lock()) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.error);
            f.code
        }
    }
}
