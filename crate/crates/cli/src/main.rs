use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use duelgrad::TransferFunction;
use duelgrad_cli::diagnose::DEFAULT_SAMPLES;
use duelgrad_cli::tune::{compute, render, TuneRequest};
use duelgrad_cli::{
    run_diagnostics, run_experiment, Algorithm, ExperimentConfig, HarnessError, HarnessResult, Suite, TuningKind,
};

#[derive(Parser)]
#[command(
    name = "duelgrad",
    version,
    about = "Convex optimization from noisy pairwise comparisons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trials and write trajectories plus a summary.
    Run(RunArgs),
    /// Run Monte Carlo diagnostic suites; exits 1 if any check fails.
    Diagnose(DiagnoseArgs),
    /// Print tuned step size, perturbation and budget (or an epoch table).
    Tune(TuneArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = "DUELGRAD_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Worker threads (default: number of cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record every n-th iterate (1 records all).
    #[arg(long)]
    stride: Option<u64>,
    /// Fill wall_time_ms (breaks byte-identical reruns).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    params: ParamArgs,
    /// Manual step size (with --tuning manual).
    #[arg(long)]
    eta: Option<f64>,
    /// Manual perturbation (with --tuning manual).
    #[arg(long)]
    gamma: Option<f64>,
    /// Manual query budget (with --tuning manual).
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmArg>,
    #[arg(long, value_enum)]
    tuning: Option<TuningArg>,
    #[arg(long, value_enum)]
    transfer: Option<TransferArg>,
    /// Slope of a linear transfer or scale of a polynomial one.
    #[arg(long)]
    c_rho: Option<f64>,
    /// Sigmoid sharpness.
    #[arg(long)]
    omega: Option<f64>,
    /// Degree of a polynomial transfer.
    #[arg(long)]
    p: Option<u32>,
    #[arg(long)]
    ctilde: Option<f64>,
    #[arg(long)]
    c_sign: Option<f64>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, env = "DUELGRAD_SEED", default_value_t = 0)]
    seed: u64,
    /// Monte Carlo samples per check.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: u64,
    #[arg(long)]
    jobs: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    /// Read constants from an experiment config; flags override them.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    /// Diameter bound D.
    #[arg(long)]
    diameter: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Rgd,
    Epoch,
}

#[derive(Clone, Copy, ValueEnum)]
enum TuningArg {
    Theorem,
    Linear,
    Sign,
    Manual,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransferArg {
    Sign,
    Linear,
    Sigmoid,
    Poly,
}

fn required<T>(value: Option<T>, flag: &str, kind: &str) -> HarnessResult<T> {
    value.ok_or_else(|| HarnessError::config(flag, format!("required by --transfer {kind}")))
}

impl ParamArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) -> HarnessResult<()> {
        if let Some(eps) = self.eps {
            cfg.eps = eps;
        }
        if let Some(a) = self.algorithm {
            cfg.algorithm = match a {
                AlgorithmArg::Rgd => Algorithm::Rgd,
                AlgorithmArg::Epoch => Algorithm::Epoch,
            };
        }
        if let Some(t) = self.tuning {
            cfg.tuning.kind = match t {
                TuningArg::Theorem => TuningKind::Theorem,
                TuningArg::Linear => TuningKind::Linear,
                TuningArg::Sign => TuningKind::Sign,
                TuningArg::Manual => TuningKind::Manual,
            };
        }
        if let Some(kind) = self.transfer {
            let built = match kind {
                TransferArg::Sign => Ok(TransferFunction::Sign),
                TransferArg::Linear => TransferFunction::linear(required(self.c_rho, "--c-rho", "linear")?),
                TransferArg::Sigmoid => TransferFunction::sigmoid(required(self.omega, "--omega", "sigmoid")?),
                TransferArg::Poly => TransferFunction::poly_proxy(
                    required(self.p, "--p", "poly")?,
                    required(self.c_rho, "--c-rho", "poly")?,
                ),
            };
            cfg.transfer = built.map_err(|e| HarnessError::config("--transfer", e.to_string()))?;
        }
        if let Some(c) = self.ctilde {
            cfg.ctilde = c;
        }
        if let Some(c) = self.c_sign {
            cfg.c_sign = c;
        }
        Ok(())
    }
}

fn load(path: Option<&PathBuf>) -> HarnessResult<ExperimentConfig> {
    path.map_or_else(|| Ok(ExperimentConfig::default()), |p| ExperimentConfig::load(p))
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> HarnessResult<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(HarnessError::config("--jobs", "must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::config("--jobs", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn run(args: RunArgs) -> HarnessResult<()> {
    let mut cfg = load(args.config.as_ref())?;
    args.params.apply(&mut cfg)?;
    if let Some(seed) = args.seed {
        cfg.base_seed = Some(seed);
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(out) = args.out {
        cfg.output = out;
    }
    if let Some(stride) = args.stride {
        cfg.record_stride = Some(stride);
    }
    if args.timing {
        cfg.timing = true;
    }
    cfg.tuning.eta = args.eta.or(cfg.tuning.eta);
    cfg.tuning.gamma = args.gamma.or(cfg.tuning.gamma);
    cfg.tuning.budget = args.budget.or(cfg.tuning.budget);
    let outcome = with_jobs(args.jobs, || run_experiment(&cfg))??;
    println!("{}", outcome.aggregate);
    println!("wrote {}", outcome.output.display());
    Ok(())
}

fn diagnose(args: DiagnoseArgs) -> HarnessResult<()> {
    let suite: Suite = args.suite.parse()?;
    let report = with_jobs(args.jobs, || run_diagnostics(suite, args.seed, args.samples))??;
    let json = serde_json::to_string_pretty(&report).expect("report is serializable") + "\n";
    match &args.out {
        Some(path) => {
            std::fs::write(path, &json).map_err(|e| HarnessError::io(path, e))?;
            println!(
                "{} passed, {} failed; report in {}",
                report.passed,
                report.failed,
                path.display()
            );
        }
        None => print!("{json}"),
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(HarnessError::DiagnosticsFailed {
            failed: report.failed,
            total: report.passed + report.failed,
        })
    }
}

fn tune(args: TuneArgs) -> HarnessResult<()> {
    let mut cfg = load(args.config.as_ref())?;
    args.params.apply(&mut cfg)?;
    let mut req = TuneRequest::from_config(&cfg)?;
    req.p = args.params.p.unwrap_or(req.p);
    req.c_rho = args.params.c_rho.unwrap_or(req.c_rho);
    req.alpha = args.alpha.unwrap_or(req.alpha);
    req.beta = args.beta.unwrap_or(req.beta);
    req.dim = args.dim.unwrap_or(req.dim);
    req.diameter = args.diameter.unwrap_or(req.diameter);
    print!("{}", render(&compute(&req)?));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Diagnose(args) => diagnose(args),
        Command::Tune(args) => tune(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
