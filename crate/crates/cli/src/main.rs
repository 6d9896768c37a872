//! Command-line interface: fit a penalized robust regression on a CSV
//! dataset, simulate synthetic datasets, and run experiment configs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array1;

use robustreg::datagen::{
    gen_dataset, load_dataset_csv, write_dataset_csv, CovariateLaw, DataSpec, ErrorLaw,
};
use robustreg::experiments::{emit_report, run_experiment_with_workers, ExperimentConfig};
use robustreg::losses::{LossKind, LossSpec};
use robustreg::objective::Problem;
use robustreg::optim::{composite_gd, two_step, SolverOptions, SolverTrace, StepRule};
use robustreg::regularizers::RegularizerSpec;
use robustreg::weights::WeightScheme;
use robustreg::{Error, Result};

#[derive(Parser)]
#[command(name = "robustreg", version, about = "Penalized robust M-estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a penalized robust regression to a CSV dataset (header row,
    /// response in the last column).
    Fit(FitArgs),
    /// Generate a synthetic dataset and write it as CSV plus a JSON
    /// sidecar describing the generating law.
    Simulate(SimulateArgs),
    /// Run experiment configs.
    Experiment {
        #[command(subcommand)]
        command: ExperimentCommand,
    },
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Run a JSON experiment config and write trials.csv,
    /// aggregates.csv, and manifest.json.
    Run {
        /// Path to the experiment config (JSON).
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for trial-level parallelism.
        #[arg(long, default_value_t = num_workers())]
        workers: usize,
    },
}

fn num_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Huber,
    Tukey,
    Cauchy,
    Squared,
    Absolute,
}

impl From<LossArg> for LossKind {
    fn from(value: LossArg) -> Self {
        match value {
            LossArg::Huber => LossKind::Huber,
            LossArg::Tukey => LossKind::Tukey,
            LossArg::Cauchy => LossKind::Cauchy,
            LossArg::Squared => LossKind::Squared,
            LossArg::Absolute => LossKind::Absolute,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PenaltyArg {
    L1,
    Scad,
    Mcp,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightsArg {
    Identity,
    Mallows,
    MallowsSquared,
    HillRyan,
    Schweppe,
}

#[derive(Args)]
struct FitArgs {
    /// Dataset CSV: header row, covariates then the response column.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "huber")]
    loss: LossArg,
    /// Loss tuning constant; family default when omitted.
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long, value_enum, default_value = "l1")]
    penalty: PenaltyArg,
    /// Absolute penalty level.
    #[arg(long, conflicts_with = "lambda_mult")]
    lambda: Option<f64>,
    /// Penalty level as c * sqrt(log(p) / n).
    #[arg(long)]
    lambda_mult: Option<f64>,
    /// SCAD a (> 2) or MCP b (> 0).
    #[arg(long)]
    shape: Option<f64>,
    /// l1 constraint radius.
    #[arg(long = "R")]
    radius: f64,
    #[arg(long, value_enum, default_value = "identity")]
    weights: WeightsArg,
    /// Leverage bound b for Mallows / Hill-Ryan weights.
    #[arg(long, default_value_t = 3.0)]
    weight_b: f64,
    /// Leverage matrix B as a CSV (defaults to the identity).
    #[arg(long)]
    weight_matrix: Option<PathBuf>,
    /// Initialization: "zero", "two-step", or "file:<path>" with one
    /// coefficient per line.
    #[arg(long, default_value = "zero")]
    init: String,
    /// Step size: "auto" (backtracking) or a fixed positive value.
    #[arg(long, default_value = "auto")]
    eta: String,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 50_000)]
    max_iters: usize,
    /// Write the iteration trace (iter, objective, step_size[,
    /// dist_to_ref]) as CSV.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Optional reference point (one value per line) for the trace's
    /// distance column.
    #[arg(long)]
    ref_point: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    /// Sparsity; round(sqrt(p)) when omitted.
    #[arg(long)]
    k: Option<usize>,
    /// Covariate law: "gaussian" or "chisq:<df>".
    #[arg(long, default_value = "gaussian")]
    covariates: String,
    /// Error law: "cauchy:<scale>", "stable:<alpha>,<gamma>",
    /// "mixture:<p_in>,<sd_in>,<sd_out>", "gaussian:<sd>", or "none".
    #[arg(long, default_value = "cauchy:0.1")]
    errors: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; a JSON sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
}

fn parse_covariates(text: &str) -> Result<CovariateLaw> {
    if text == "gaussian" {
        return Ok(CovariateLaw::GaussianIdentity);
    }
    if let Some(df) = text.strip_prefix("chisq:") {
        let df: f64 = df
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad degrees of freedom in '{text}'")))?;
        return Ok(CovariateLaw::ChiSquareCentered { df });
    }
    Err(Error::InvalidConfig(format!(
        "unknown covariate law '{text}' (expected 'gaussian' or 'chisq:<df>')"
    )))
}

fn parse_errors(text: &str) -> Result<ErrorLaw> {
    let bad = |what: &str| Error::InvalidConfig(format!("bad error law '{what}'"));
    if text == "none" {
        return Ok(ErrorLaw::None);
    }
    if let Some(rest) = text.strip_prefix("cauchy:") {
        return Ok(ErrorLaw::Cauchy { scale: rest.parse().map_err(|_| bad(text))? });
    }
    if let Some(rest) = text.strip_prefix("stable:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 2 {
            return Err(bad(text));
        }
        return Ok(ErrorLaw::AlphaStable {
            alpha: parts[0].parse().map_err(|_| bad(text))?,
            gamma: parts[1].parse().map_err(|_| bad(text))?,
        });
    }
    if let Some(rest) = text.strip_prefix("mixture:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 3 {
            return Err(bad(text));
        }
        return Ok(ErrorLaw::NormalMixture {
            p_in: parts[0].parse().map_err(|_| bad(text))?,
            sd_in: parts[1].parse().map_err(|_| bad(text))?,
            sd_out: parts[2].parse().map_err(|_| bad(text))?,
        });
    }
    if let Some(rest) = text.strip_prefix("gaussian:") {
        return Ok(ErrorLaw::Gaussian { sd: rest.parse().map_err(|_| bad(text))? });
    }
    Err(bad(text))
}

fn load_vector(path: &PathBuf) -> Result<Array1<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        values.push(line.parse::<f64>().map_err(|_| {
            Error::InvalidConfig(format!("{}:{}: not a number: '{line}'", path.display(), i + 1))
        })?);
    }
    Ok(Array1::from_vec(values))
}

fn load_matrix(path: &PathBuf) -> Result<ndarray::Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row: std::result::Result<Vec<f64>, _> =
            record.iter().map(|s| s.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| Error::InvalidConfig(format!("bad matrix entry: {e}")))?);
    }
    let nrows = rows.len();
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if nrows == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidConfig("matrix CSV must be rectangular and nonempty".into()));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    ndarray::Array2::from_shape_vec((nrows, ncols), flat)
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn write_trace(path: &PathBuf, trace: &SolverTrace) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let with_ref = trace.dist_to_ref.is_some();
    if with_ref {
        writer.write_record(["iter", "objective", "step_size", "dist_to_ref"])?;
    } else {
        writer.write_record(["iter", "objective", "step_size"])?;
    }
    for i in 0..trace.objectives.len() {
        let mut row = vec![
            (i + 1).to_string(),
            trace.objectives[i].to_string(),
            trace.step_sizes[i].to_string(),
        ];
        if let Some(d) = &trace.dist_to_ref {
            row.push(d[i].to_string());
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

fn run_fit(args: FitArgs) -> Result<()> {
    let (x, y) = load_dataset_csv(&args.data)?;
    let (n, p) = x.dim();
    let loss_kind: LossKind = args.loss.into();
    let loss = match loss_kind {
        LossKind::Squared => LossSpec::squared(),
        LossKind::Absolute => LossSpec::absolute(),
        kind => LossSpec::new(kind, args.xi.unwrap_or_else(|| kind.default_xi()))?,
    };
    let lambda = match (args.lambda, args.lambda_mult) {
        (Some(v), _) => v,
        (None, Some(c)) => c * ((p as f64).ln() / n as f64).sqrt(),
        (None, None) => {
            return Err(Error::InvalidConfig("one of --lambda / --lambda-mult is required".into()))
        }
    };
    let reg = match args.penalty {
        PenaltyArg::L1 => RegularizerSpec::l1(lambda)?,
        PenaltyArg::Scad => RegularizerSpec::scad(
            lambda,
            args.shape.ok_or_else(|| Error::InvalidConfig("SCAD needs --shape".into()))?,
        )?,
        PenaltyArg::Mcp => RegularizerSpec::mcp(
            lambda,
            args.shape.ok_or_else(|| Error::InvalidConfig("MCP needs --shape".into()))?,
        )?,
    };
    let mut weights = match args.weights {
        WeightsArg::Identity => WeightScheme::identity(),
        WeightsArg::Mallows => WeightScheme::mallows(args.weight_b)?,
        WeightsArg::MallowsSquared => WeightScheme::mallows_squared(args.weight_b)?,
        WeightsArg::HillRyan => WeightScheme::hill_ryan(args.weight_b)?,
        WeightsArg::Schweppe => WeightScheme::schweppe(),
    };
    if let Some(path) = &args.weight_matrix {
        weights = weights.with_matrix(load_matrix(path)?, None)?;
    }
    let step = if args.eta == "auto" {
        StepRule::Backtracking { eta0: 1.0 }
    } else {
        StepRule::Fixed(
            args.eta
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad --eta value '{}'", args.eta)))?,
        )
    };
    let opts = SolverOptions {
        step,
        max_iters: args.max_iters,
        tol: args.tol,
        record_trace: args.trace_out.is_some(),
        ref_point: args.ref_point.as_ref().map(load_vector).transpose()?,
    };

    let problem = Problem::new(x.clone(), y.clone(), loss, weights.clone(), reg, args.radius)?;
    let (beta, trace) = match args.init.as_str() {
        "zero" => composite_gd(&problem, &Array1::zeros(p), &opts)?,
        "two-step" => {
            let stage1 = Problem::new(
                x,
                y,
                LossSpec::huber(if loss.kind == LossKind::Huber {
                    loss.xi
                } else {
                    LossKind::Huber.default_xi()
                })?,
                weights,
                RegularizerSpec::l1(lambda)?,
                args.radius,
            )?;
            let (beta, _, trace2) = two_step(&stage1, &problem, &opts, &opts)?;
            (beta, trace2)
        }
        other => {
            let path = other.strip_prefix("file:").ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "--init must be 'zero', 'two-step', or 'file:<path>', got '{other}'"
                ))
            })?;
            let beta0 = load_vector(&PathBuf::from(path))?;
            composite_gd(&problem, &beta0, &opts)?
        }
    };

    if let Some(path) = &args.trace_out {
        write_trace(path, &trace)?;
    }
    let summary = serde_json::json!({
        "n": n,
        "p": p,
        "lambda": lambda,
        "objective": problem.objective_value(&beta)?,
        "loss_value": problem.loss_value(&beta)?,
        "iterations": trace.iterations,
        "stationarity_residual": trace.stationarity_residual,
        "nonzeros": beta.iter().filter(|v| v.abs() > 1e-6).count(),
        "beta": beta.to_vec(),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let k = args.k.unwrap_or_else(|| (args.p as f64).sqrt().round() as usize);
    let spec = DataSpec {
        n: args.n,
        p: args.p,
        k,
        covariates: parse_covariates(&args.covariates)?,
        errors: parse_errors(&args.errors)?,
        seed: args.seed,
    };
    let dataset = gen_dataset(&spec)?;
    write_dataset_csv(&args.out, &dataset, &spec)?;
    eprintln!(
        "wrote {} ({} x {}) and sidecar {}",
        args.out.display(),
        args.n,
        args.p,
        args.out.with_extension("json").display()
    );
    Ok(())
}

fn run_command(command: Command) -> Result<()> {
    match command {
        Command::Fit(args) => run_fit(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Experiment { command: ExperimentCommand::Run { config, out, workers } } => {
            let config = ExperimentConfig::load(&config)?;
            let results = run_experiment_with_workers(&config, workers)?;
            let paths = emit_report(&results, &out)?;
            eprintln!(
                "{} trials ({} failures) in {:.1}s -> {}",
                results.trials.len(),
                results.failures.len(),
                results.total_wall_time,
                paths.manifest.parent().unwrap_or(&out).display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
