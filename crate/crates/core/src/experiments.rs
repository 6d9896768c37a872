//! Declarative Monte-Carlo experiment runner.
//!
//! A JSON [`ExperimentConfig`] describes a grid of problem sizes, a data
//! law, a list of estimator arms, and a trial count. [`run_experiment`]
//! generates one dataset per (cell, trial), shared by every arm of that
//! trial, solves each arm, and collects per-trial diagnostics plus
//! per-cell aggregates. [`emit_report`] writes `trials.csv`,
//! `aggregates.csv`, and `manifest.json`.
//!
//! Reproducibility: trial datasets are seeded by
//! `derive_seed(derive_seed(master, CELL_LANE, cell), TRIAL_LANE, trial)`,
//! and arm-specific randomness (random initialization) by a further
//! derivation, so results are independent of worker scheduling and
//! bit-identical across reruns with the same master seed. Per-trial wall
//! times are measured but written to `trials.csv` as `0` unless
//! `record_timing` is set, keeping the default output byte-reproducible.

use std::io::Write as IoWrite;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array1;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datagen::{derive_seed, gen_dataset, CovariateLaw, DataSpec, Dataset, ErrorLaw};
use crate::error::{Error, Result};
use crate::losses::{LossKind, LossSpec};
use crate::objective::Problem;
use crate::optim::{composite_gd, two_step, SolverOptions, StepRule};
use crate::oracle::{solve_oracle, support_recovered, SUPPORT_ZERO_TOL};
use crate::regularizers::{prox_l1_constrained, RegKind, RegularizerSpec};
use crate::weights::{MallowsPower, WeightKind, WeightScheme};

const CELL_LANE: u64 = 1;
const TRIAL_LANE: u64 = 2;
const INIT_LANE: u64 = 3;

/// Sample-size grid: rescaled ratios `n / (k log p)` or explicit sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleGrid {
    Ratios(Vec<f64>),
    Sizes(Vec<usize>),
}

/// Sparsity rule: `k = round(sqrt(p))` unless fixed explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KRule {
    #[default]
    RoundSqrtP,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    Absolute(f64),
    /// `lambda = c * sqrt(log(p) / n)`.
    Multiplier(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RRule {
    /// `R = c * ||beta_star||_1`.
    TrueL1Multiple(f64),
    Absolute(f64),
}

impl Default for RRule {
    fn default() -> Self {
        RRule::TrueL1Multiple(1.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    #[default]
    Zero,
    /// Solve an l1-penalized Huber stage first and start there.
    TwoStep,
    /// Start from `sd * N(0, I)` projected onto the l1 ball.
    Random { sd: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub kind: LossKind,
    /// Tuning constant; the family default when omitted.
    #[serde(default)]
    pub xi: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub kind: WeightKind,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub mallows_power: MallowsPower,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig { kind: WeightKind::Identity, b: None, mallows_power: MallowsPower::Linear }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegConfig {
    pub kind: RegKind,
    pub lambda: LambdaRule,
    /// SCAD `a` or MCP `b`; unused for l1.
    #[serde(default)]
    pub shape: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmConfig {
    pub name: String,
    pub loss: LossConfig,
    #[serde(default)]
    pub weights: WeightConfig,
    pub reg: RegConfig,
    #[serde(default)]
    pub r_rule: RRule,
    #[serde(default)]
    pub init: InitStrategy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaRule {
    /// Backtracking from 1.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub eta: EtaRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-8, max_iters: 50_000, eta: EtaRule::Auto }
    }
}

impl SolverConfig {
    fn to_options(self) -> SolverOptions {
        SolverOptions {
            step: match self.eta {
                EtaRule::Auto => StepRule::Backtracking { eta0: 1.0 },
                EtaRule::Fixed(v) => StepRule::Fixed(v),
            },
            max_iters: self.max_iters,
            tol: self.tol,
            record_trace: false,
            ref_point: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub p_values: Vec<usize>,
    pub sample_grid: SampleGrid,
    #[serde(default)]
    pub k_rule: KRule,
    pub covariates: CovariateLaw,
    pub errors: ErrorLaw,
    pub arms: Vec<ArmConfig>,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    /// Write measured per-trial wall times into trials.csv. Off by
    /// default so that reruns of the same config are byte-identical.
    #[serde(default)]
    pub record_timing: bool,
    /// When set, every trial also solves the restricted oracle on the
    /// true support inside an l2 ball of this radius around the truth,
    /// and the per-trial JSON diagnostics carry the distance of the fit
    /// to that oracle point.
    #[serde(default)]
    pub oracle_radius: Option<f64>,
}

/// A resolved grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub p: usize,
    pub k: usize,
    pub n: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub p: usize,
    pub k: usize,
    pub n: usize,
    pub ratio: f64,
    pub arm: String,
    pub seed: u64,
    pub l2_error: f64,
    pub l1_error: f64,
    pub support_recovered: bool,
    pub grad_supnorm: f64,
    pub iterations: usize,
    pub wall_time: f64,
    /// `sqrt(n) * e_1' (beta_hat - beta_star)`, the variance term.
    pub vterm: f64,
    /// Distance of the fit to the restricted oracle solution, when the
    /// config requests oracle diagnostics.
    pub oracle_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialFailure {
    pub p: usize,
    pub n: usize,
    pub arm: String,
    pub trial: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRecord {
    pub p: usize,
    pub k: usize,
    pub n: usize,
    pub ratio: f64,
    pub arm: String,
    pub trials_ok: usize,
    pub median_l2: f64,
    pub mean_l2: f64,
    pub median_l1: f64,
    pub recovery_fraction: f64,
    pub median_grad_supnorm: f64,
    pub mean_iterations: f64,
    pub variance_vterm: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    pub cells: Vec<Cell>,
    pub trials: Vec<TrialRecord>,
    pub failures: Vec<TrialFailure>,
    pub aggregates: Vec<AggregateRecord>,
    pub total_wall_time: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.p_values.is_empty() || self.p_values.iter().any(|&p| p == 0) {
            return Err(Error::InvalidConfig("p_values must be nonempty and positive".into()));
        }
        match &self.sample_grid {
            SampleGrid::Ratios(r) => {
                if r.is_empty() || r.iter().any(|&v| !v.is_finite() || v <= 0.0) {
                    return Err(Error::InvalidConfig(
                        "ratio grid must be nonempty and positive".into(),
                    ));
                }
            }
            SampleGrid::Sizes(s) => {
                if s.is_empty() || s.iter().any(|&v| v == 0) {
                    return Err(Error::InvalidConfig(
                        "size grid must be nonempty and positive".into(),
                    ));
                }
            }
        }
        if self.arms.is_empty() {
            return Err(Error::InvalidConfig("at least one arm is required".into()));
        }
        if let Some(solver) = &self.solver {
            solver.to_options().validate()?;
        }
        // Resolve every arm against every cell so invalid combinations
        // surface before any computation.
        for cell in self.cells()? {
            let probe_spec = DataSpec {
                n: cell.n,
                p: cell.p,
                k: cell.k,
                covariates: self.covariates,
                errors: self.errors,
                seed: 0,
            };
            probe_spec.validate()?;
            for arm in &self.arms {
                arm.resolve(&cell)?;
            }
        }
        Ok(())
    }

    /// The resolved (p, k, n, ratio) grid, in declaration order: p-major,
    /// then the sample grid.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut cells = Vec::new();
        for &p in &self.p_values {
            let k = match self.k_rule {
                KRule::RoundSqrtP => (p as f64).sqrt().round() as usize,
                KRule::Fixed(k) => k,
            };
            if k == 0 || k > p {
                return Err(Error::InvalidConfig(format!(
                    "resolved sparsity k = {k} invalid for p = {p}"
                )));
            }
            let klogp = k as f64 * (p as f64).ln();
            match &self.sample_grid {
                SampleGrid::Ratios(ratios) => {
                    for &ratio in ratios {
                        let n = (ratio * klogp).round().max(1.0) as usize;
                        cells.push(Cell { p, k, n, ratio: n as f64 / klogp });
                    }
                }
                SampleGrid::Sizes(sizes) => {
                    for &n in sizes {
                        cells.push(Cell { p, k, n, ratio: n as f64 / klogp });
                    }
                }
            }
        }
        Ok(cells)
    }

    fn solver_config(&self) -> SolverConfig {
        self.solver.unwrap_or_default()
    }

    pub fn sha256(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Arm pieces resolved against one cell.
struct ResolvedArm {
    loss: LossSpec,
    weights: WeightScheme,
    reg: RegularizerSpec,
    radius: f64,
}

impl ArmConfig {
    fn resolve(&self, cell: &Cell) -> Result<ResolvedArm> {
        let xi = self.xi();
        let loss = match self.loss.kind {
            LossKind::Squared => LossSpec::squared(),
            LossKind::Absolute => LossSpec::absolute(),
            kind => LossSpec::new(kind, xi)?,
        };
        let weights = match self.weights.kind {
            WeightKind::Identity => WeightScheme::identity(),
            WeightKind::Mallows => {
                let b = self.weights.b.ok_or_else(|| {
                    Error::InvalidConfig(format!("arm '{}': Mallows weights need b", self.name))
                })?;
                match self.weights.mallows_power {
                    MallowsPower::Linear => WeightScheme::mallows(b)?,
                    MallowsPower::Squared => WeightScheme::mallows_squared(b)?,
                }
            }
            WeightKind::HillRyan => {
                let b = self.weights.b.ok_or_else(|| {
                    Error::InvalidConfig(format!("arm '{}': Hill-Ryan weights need b", self.name))
                })?;
                WeightScheme::hill_ryan(b)?
            }
            WeightKind::Schweppe => WeightScheme::schweppe(),
        };
        let lambda = match self.reg.lambda {
            LambdaRule::Absolute(v) => v,
            LambdaRule::Multiplier(c) => c * ((cell.p as f64).ln() / cell.n as f64).sqrt(),
        };
        let reg = match self.reg.kind {
            RegKind::L1 => RegularizerSpec::l1(lambda)?,
            RegKind::Scad => {
                let a = self.reg.shape.ok_or_else(|| {
                    Error::InvalidConfig(format!("arm '{}': SCAD needs a shape", self.name))
                })?;
                RegularizerSpec::scad(lambda, a)?
            }
            RegKind::Mcp => {
                let b = self.reg.shape.ok_or_else(|| {
                    Error::InvalidConfig(format!("arm '{}': MCP needs a shape", self.name))
                })?;
                RegularizerSpec::mcp(lambda, b)?
            }
        };
        let radius = match self.r_rule {
            RRule::TrueL1Multiple(c) => {
                if !c.is_finite() || c <= 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "arm '{}': R multiple must be positive",
                        self.name
                    )));
                }
                c * (cell.k as f64).sqrt()
            }
            RRule::Absolute(r) => {
                if !r.is_finite() || r <= 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "arm '{}': absolute R must be positive",
                        self.name
                    )));
                }
                r
            }
        };
        if let InitStrategy::Random { sd } = self.init {
            if !sd.is_finite() || sd <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "arm '{}': random init sd must be positive",
                    self.name
                )));
            }
        }
        Ok(ResolvedArm { loss, weights, reg, radius })
    }

    fn xi(&self) -> f64 {
        self.loss.xi.unwrap_or_else(|| self.loss.kind.default_xi())
    }
}

fn solve_arm(
    arm: &ArmConfig,
    resolved: ResolvedArm,
    dataset: &Dataset,
    solver: SolverConfig,
    init_seed: u64,
) -> Result<(Array1<f64>, Problem, usize, f64)> {
    let opts = solver.to_options();
    let problem = Problem::new(
        dataset.x.clone(),
        dataset.y.clone(),
        resolved.loss,
        resolved.weights.clone(),
        resolved.reg,
        resolved.radius,
    )?;
    let p = problem.p();
    let grad_supnorm = problem.grad_supnorm_at_truth(&dataset.beta_star)?;
    match arm.init {
        InitStrategy::Zero => {
            let (beta, trace) = composite_gd(&problem, &Array1::zeros(p), &opts)?;
            Ok((beta, problem, trace.iterations, grad_supnorm))
        }
        InitStrategy::Random { sd } => {
            let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
            let mut draw = Array1::zeros(p);
            for d in draw.iter_mut() {
                *d = sd * rng.sample::<f64, _>(StandardNormal);
            }
            // The raw draw usually violates the l1 constraint; start from
            // its projection onto the feasible set.
            let beta0 = prox_l1_constrained(&draw, 0.0, problem.radius_l1);
            let (beta, trace) = composite_gd(&problem, &beta0, &opts)?;
            Ok((beta, problem, trace.iterations, grad_supnorm))
        }
        InitStrategy::TwoStep => {
            // Stage 1: l1-penalized Huber at the same level, weights, and
            // radius, from zero.
            let huber_xi = if arm.loss.kind == LossKind::Huber {
                arm.xi()
            } else {
                LossKind::Huber.default_xi()
            };
            let stage1 = Problem::new(
                dataset.x.clone(),
                dataset.y.clone(),
                LossSpec::huber(huber_xi)?,
                resolved.weights.clone(),
                RegularizerSpec::l1(resolved.reg.lambda)?,
                resolved.radius,
            )?;
            let (beta, trace1, trace2) = two_step(&stage1, &problem, &opts, &opts)?;
            Ok((beta, problem, trace1.iterations + trace2.iterations, grad_supnorm))
        }
    }
}

enum ArmOutcome {
    Ok(TrialRecord),
    Failed(TrialFailure),
}

fn run_trial(
    config: &ExperimentConfig,
    cell: &Cell,
    cell_idx: usize,
    trial: usize,
) -> Vec<ArmOutcome> {
    let cell_seed = derive_seed(config.master_seed, CELL_LANE, cell_idx as u64);
    let data_seed = derive_seed(cell_seed, TRIAL_LANE, trial as u64);
    let spec = DataSpec {
        n: cell.n,
        p: cell.p,
        k: cell.k,
        covariates: config.covariates,
        errors: config.errors,
        seed: data_seed,
    };
    let dataset = match gen_dataset(&spec) {
        Ok(d) => d,
        Err(e) => {
            return config
                .arms
                .iter()
                .map(|arm| {
                    ArmOutcome::Failed(TrialFailure {
                        p: cell.p,
                        n: cell.n,
                        arm: arm.name.clone(),
                        trial,
                        reason: format!("data generation failed: {e}"),
                    })
                })
                .collect();
        }
    };
    let solver = config.solver_config();
    config
        .arms
        .iter()
        .enumerate()
        .map(|(arm_idx, arm)| {
            let started = Instant::now();
            let init_seed = derive_seed(data_seed, INIT_LANE, arm_idx as u64);
            match arm
                .resolve(cell)
                .and_then(|resolved| solve_arm(arm, resolved, &dataset, solver, init_seed))
            {
                Ok((beta, problem, iterations, grad_supnorm)) => {
                    let diff = &beta - &dataset.beta_star;
                    let l2 = diff.dot(&diff).sqrt();
                    let l1 = diff.iter().map(|v| v.abs()).sum();
                    let truth: Vec<usize> = (0..cell.k).collect();
                    let recovered = support_recovered(&beta, &truth, SUPPORT_ZERO_TOL);
                    let vterm = (cell.n as f64).sqrt() * (beta[0] - dataset.beta_star[0]);
                    let oracle_error = config.oracle_radius.and_then(|radius| {
                        solve_oracle(&problem, &truth, &dataset.beta_star, radius)
                            .ok()
                            .map(|o| {
                                (&beta - &o.beta_oracle).mapv(|v| v * v).sum().sqrt()
                            })
                    });
                    ArmOutcome::Ok(TrialRecord {
                        p: cell.p,
                        k: cell.k,
                        n: cell.n,
                        ratio: cell.ratio,
                        arm: arm.name.clone(),
                        seed: data_seed,
                        l2_error: l2,
                        l1_error: l1,
                        support_recovered: recovered,
                        grad_supnorm,
                        iterations,
                        wall_time: started.elapsed().as_secs_f64(),
                        vterm,
                        oracle_error,
                    })
                }
                Err(e) => ArmOutcome::Failed(TrialFailure {
                    p: cell.p,
                    n: cell.n,
                    arm: arm.name.clone(),
                    trial,
                    reason: e.to_string(),
                }),
            }
        })
        .collect()
}

fn median(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    }
}

fn sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Run every (cell, arm, trial) combination. Trials execute in a rayon
/// worker pool; results are gathered in deterministic (cell, arm, trial)
/// order regardless of completion order. Individual trial failures are
/// recorded, never fatal.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResults> {
    config.validate()?;
    let started = Instant::now();
    let cells = config.cells()?;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.trials).map(move |t| (c, t)))
        .collect();
    let outcomes: Vec<Vec<ArmOutcome>> = jobs
        .par_iter()
        .map(|&(cell_idx, trial)| run_trial(config, &cells[cell_idx], cell_idx, trial))
        .collect();

    // Reassemble in (cell, arm, trial) order.
    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for cell_idx in 0..cells.len() {
        for arm_idx in 0..config.arms.len() {
            for trial in 0..config.trials {
                let job = cell_idx * config.trials + trial;
                match &outcomes[job][arm_idx] {
                    ArmOutcome::Ok(rec) => trials.push(rec.clone()),
                    ArmOutcome::Failed(f) => failures.push(f.clone()),
                }
            }
        }
    }

    let mut aggregates = Vec::new();
    for cell in &cells {
        for arm in &config.arms {
            let rows: Vec<&TrialRecord> = trials
                .iter()
                .filter(|r| r.p == cell.p && r.n == cell.n && r.arm == arm.name)
                .collect();
            if rows.is_empty() {
                continue;
            }
            let l2 = sorted(rows.iter().map(|r| r.l2_error));
            let l1 = sorted(rows.iter().map(|r| r.l1_error));
            let gs = sorted(rows.iter().map(|r| r.grad_supnorm));
            let m = rows.len() as f64;
            let vterm_mean = rows.iter().map(|r| r.vterm).sum::<f64>() / m;
            let variance_vterm = if rows.len() > 1 {
                rows.iter()
                    .map(|r| (r.vterm - vterm_mean) * (r.vterm - vterm_mean))
                    .sum::<f64>()
                    / (m - 1.0)
            } else {
                0.0
            };
            aggregates.push(AggregateRecord {
                p: cell.p,
                k: cell.k,
                n: cell.n,
                ratio: cell.ratio,
                arm: arm.name.clone(),
                trials_ok: rows.len(),
                median_l2: median(&l2),
                mean_l2: l2.iter().sum::<f64>() / m,
                median_l1: median(&l1),
                recovery_fraction: rows.iter().filter(|r| r.support_recovered).count() as f64 / m,
                median_grad_supnorm: median(&gs),
                mean_iterations: rows.iter().map(|r| r.iterations as f64).sum::<f64>() / m,
                variance_vterm,
            });
        }
    }

    Ok(ExperimentResults {
        config: config.clone(),
        cells,
        trials,
        failures,
        aggregates,
        total_wall_time: started.elapsed().as_secs_f64(),
    })
}

/// Like [`run_experiment`], with an explicit rayon worker count.
pub fn run_experiment_with_workers(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<ExperimentResults> {
    if workers == 0 {
        return Err(Error::InvalidConfig("worker count must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("failed to build worker pool: {e}")))?;
    pool.install(|| run_experiment(config))
}

#[derive(Debug, Clone)]
pub struct ReportPaths {
    pub trials: PathBuf,
    pub aggregates: PathBuf,
    pub manifest: PathBuf,
    /// Per-trial JSON diagnostic records, one object per line.
    pub diagnostics: PathBuf,
}

pub const TRIALS_HEADER: [&str; 13] = [
    "p",
    "k",
    "n",
    "ratio",
    "arm",
    "seed",
    "l2_error",
    "l1_error",
    "support_recovered",
    "grad_supnorm",
    "iterations",
    "wall_time",
    "vterm",
];

/// Write `trials.csv`, `aggregates.csv`, and `manifest.json` under
/// `out_dir` (created if missing).
pub fn emit_report(results: &ExperimentResults, out_dir: &Path) -> Result<ReportPaths> {
    if results.trials.is_empty() && results.failures.is_empty() {
        return Err(Error::InvalidConfig("no results to report".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let trials_path = out_dir.join("trials.csv");
    let mut writer = csv::Writer::from_path(&trials_path)?;
    writer.write_record(TRIALS_HEADER)?;
    for r in &results.trials {
        let wall = if results.config.record_timing { r.wall_time } else { 0.0 };
        writer.write_record(&[
            r.p.to_string(),
            r.k.to_string(),
            r.n.to_string(),
            r.ratio.to_string(),
            r.arm.clone(),
            r.seed.to_string(),
            r.l2_error.to_string(),
            r.l1_error.to_string(),
            r.support_recovered.to_string(),
            r.grad_supnorm.to_string(),
            r.iterations.to_string(),
            wall.to_string(),
            r.vterm.to_string(),
        ])?;
    }
    writer.flush()?;

    let aggregates_path = out_dir.join("aggregates.csv");
    let mut writer = csv::Writer::from_path(&aggregates_path)?;
    writer.write_record([
        "p",
        "k",
        "n",
        "ratio",
        "arm",
        "trials_ok",
        "median_l2",
        "mean_l2",
        "median_l1",
        "recovery_fraction",
        "median_grad_supnorm",
        "mean_iterations",
        "variance_vterm",
    ])?;
    for a in &results.aggregates {
        writer.write_record(&[
            a.p.to_string(),
            a.k.to_string(),
            a.n.to_string(),
            a.ratio.to_string(),
            a.arm.clone(),
            a.trials_ok.to_string(),
            a.median_l2.to_string(),
            a.mean_l2.to_string(),
            a.median_l1.to_string(),
            a.recovery_fraction.to_string(),
            a.median_grad_supnorm.to_string(),
            a.mean_iterations.to_string(),
            a.variance_vterm.to_string(),
        ])?;
    }
    writer.flush()?;

    // Per-trial machine-readable diagnostics, one JSON object per line.
    let diagnostics_path = out_dir.join("diagnostics.jsonl");
    let mut f = std::fs::File::create(&diagnostics_path)?;
    for r in &results.trials {
        let record = serde_json::json!({
            "seed": r.seed,
            "n": r.n,
            "p": r.p,
            "k": r.k,
            "ratio": r.ratio,
            "arm": r.arm,
            "l2_error": r.l2_error,
            "l1_error": r.l1_error,
            "support_recovered": r.support_recovered,
            "grad_supnorm": r.grad_supnorm,
            "oracle_error": r.oracle_error,
            "variance_term": r.vterm,
        });
        f.write_all(serde_json::to_string(&record)?.as_bytes())?;
        f.write_all(b"\n")?;
    }

    let manifest_path = out_dir.join("manifest.json");
    let arm_xis: Vec<serde_json::Value> = results
        .config
        .arms
        .iter()
        .map(|arm| {
            serde_json::json!({
                "arm": arm.name,
                "loss": arm.loss.kind,
                "resolved_xi": arm.xi(),
            })
        })
        .collect();
    let manifest = serde_json::json!({
        "name": results.config.name,
        "crate_version": env!("CARGO_PKG_VERSION"),
        "config": results.config,
        "config_sha256": results.config.sha256(),
        "cells": results.cells,
        "resolved_arm_tuning": arm_xis,
        "solver": results.config.solver_config(),
        "k_rule_note": "k = round(sqrt(p)) unless fixed",
        "support_zero_tol": SUPPORT_ZERO_TOL,
        "timing_recorded": results.config.record_timing,
        "total_wall_time_secs": results.total_wall_time,
        "failures": results.failures,
    });
    let mut f = std::fs::File::create(&manifest_path)?;
    f.write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    f.write_all(b"\n")?;

    Ok(ReportPaths {
        trials: trials_path,
        aggregates: aggregates_path,
        manifest: manifest_path,
        diagnostics: diagnostics_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            name: "tiny".into(),
            p_values: vec![6],
            sample_grid: SampleGrid::Sizes(vec![40]),
            k_rule: KRule::RoundSqrtP,
            covariates: CovariateLaw::GaussianIdentity,
            errors: ErrorLaw::None,
            arms: vec![ArmConfig {
                name: "ols-l1".into(),
                loss: LossConfig { kind: LossKind::Squared, xi: None },
                weights: WeightConfig::default(),
                reg: RegConfig {
                    kind: RegKind::L1,
                    lambda: LambdaRule::Absolute(1e-9),
                    shape: None,
                },
                r_rule: RRule::Absolute(100.0),
                init: InitStrategy::Zero,
            }],
            trials: 1,
            master_seed: 42,
            solver: Some(SolverConfig { tol: 1e-12, max_iters: 100_000, eta: EtaRule::Auto }),
            record_timing: false,
            oracle_radius: None,
        }
    }

    #[test]
    fn noiseless_squared_recovers_exactly() {
        let results = run_experiment(&tiny_config()).unwrap();
        assert_eq!(results.trials.len(), 1);
        assert!(results.failures.is_empty());
        assert!(results.trials[0].l2_error <= 1e-6, "error {}", results.trials[0].l2_error);
    }

    #[test]
    fn cells_resolve_ratios() {
        let mut config = tiny_config();
        config.p_values = vec![64];
        config.sample_grid = SampleGrid::Ratios(vec![2.0, 10.0]);
        let cells = config.cells().unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].k, 8);
        let klogp = 8.0 * 64f64.ln();
        assert_eq!(cells[0].n, (2.0 * klogp).round() as usize);
        assert!((cells[1].ratio - cells[1].n as f64 / klogp).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut config = tiny_config();
        config.trials = 0;
        assert!(config.validate().is_err());

        let mut config = tiny_config();
        config.arms[0].reg =
            RegConfig { kind: RegKind::Scad, lambda: LambdaRule::Multiplier(0.3), shape: None };
        assert!(config.validate().is_err());

        let mut config = tiny_config();
        config.arms[0].reg.shape = Some(1.5);
        config.arms[0].reg.kind = RegKind::Scad;
        assert!(config.validate().is_err(), "SCAD shape must exceed 2");

        let mut config = tiny_config();
        config.arms[0].weights =
            WeightConfig { kind: WeightKind::Mallows, b: None, mallows_power: MallowsPower::Linear };
        assert!(config.validate().is_err(), "Mallows needs b");

        let mut config = tiny_config();
        config.arms[0].init = InitStrategy::Random { sd: -1.0 };
        assert!(config.validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let config = tiny_config();
        let text = serde_json::to_string_pretty(&config).unwrap();
        let parsed = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn reruns_are_bit_identical() {
        let mut config = tiny_config();
        config.errors = ErrorLaw::Cauchy { scale: 0.1 };
        config.trials = 3;
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a.trials.len(), b.trials.len());
        for (ra, rb) in a.trials.iter().zip(b.trials.iter()) {
            assert_eq!(ra.seed, rb.seed);
            assert_eq!(ra.l2_error, rb.l2_error);
            assert_eq!(ra.l1_error, rb.l1_error);
            assert_eq!(ra.vterm, rb.vterm);
            assert_eq!(ra.iterations, rb.iterations);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut config = tiny_config();
        config.errors = ErrorLaw::Cauchy { scale: 0.1 };
        config.trials = 4;
        let one = run_experiment_with_workers(&config, 1).unwrap();
        let four = run_experiment_with_workers(&config, 4).unwrap();
        for (ra, rb) in one.trials.iter().zip(four.trials.iter()) {
            assert_eq!(ra.l2_error, rb.l2_error);
            assert_eq!(ra.arm, rb.arm);
            assert_eq!(ra.seed, rb.seed);
        }
    }

    #[test]
    fn report_files_have_the_contract_shape() {
        let results = run_experiment(&tiny_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_report(&results, dir.path()).unwrap();
        let text = std::fs::read_to_string(&paths.trials).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "p,k,n,ratio,arm,seed,l2_error,l1_error,support_recovered,grad_supnorm,iterations,wall_time,vterm"
        );
        assert_eq!(lines.count(), 1, "one trial row expected");
        let agg = std::fs::read_to_string(&paths.aggregates).unwrap();
        assert_eq!(agg.lines().count(), 2, "header plus one aggregate row");
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&paths.manifest).unwrap()).unwrap();
        assert_eq!(manifest["name"], "tiny");
        assert!(manifest["config_sha256"].as_str().unwrap().len() == 64);
        assert_eq!(manifest["timing_recorded"], serde_json::Value::Bool(false));
    }

    #[test]
    fn emitted_trials_are_byte_identical_across_reruns() {
        let mut config = tiny_config();
        config.errors = ErrorLaw::Cauchy { scale: 0.1 };
        config.trials = 3;
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let p1 = emit_report(&run_experiment(&config).unwrap(), d1.path()).unwrap();
        let p2 = emit_report(&run_experiment(&config).unwrap(), d2.path()).unwrap();
        let b1 = std::fs::read(&p1.trials).unwrap();
        let b2 = std::fs::read(&p2.trials).unwrap();
        assert_eq!(b1, b2);
    }

    #[test]
    fn oracle_diagnostics_are_emitted_when_requested() {
        let mut config = tiny_config();
        config.errors = ErrorLaw::Cauchy { scale: 0.1 };
        config.trials = 2;
        config.oracle_radius = Some(1.0);
        let results = run_experiment(&config).unwrap();
        assert!(results.trials.iter().all(|t| t.oracle_error.is_some()));
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_report(&results, dir.path()).unwrap();
        let text = std::fs::read_to_string(&paths.diagnostics).unwrap();
        assert_eq!(text.lines().count(), 2);
        for line in text.lines() {
            let record: serde_json::Value = serde_json::from_str(line).unwrap();
            for field in [
                "seed",
                "n",
                "p",
                "k",
                "l2_error",
                "l1_error",
                "support_recovered",
                "grad_supnorm",
                "oracle_error",
                "variance_term",
            ] {
                assert!(!record[field].is_null(), "missing {field}: {line}");
            }
        }
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        let results = ExperimentResults {
            config: tiny_config(),
            cells: vec![],
            trials: vec![],
            failures: vec![TrialFailure {
                p: 6,
                n: 40,
                arm: "ols-l1".into(),
                trial: 0,
                reason: "synthetic".into(),
            }],
            aggregates: vec![],
            total_wall_time: 0.0,
        };
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_report(&results, dir.path()).unwrap();
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&paths.manifest).unwrap()).unwrap();
        assert_eq!(manifest["failures"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn two_step_and_random_init_arms_run() {
        let mut config = tiny_config();
        config.errors = ErrorLaw::Cauchy { scale: 0.1 };
        config.p_values = vec![16];
        config.sample_grid = SampleGrid::Ratios(vec![8.0]);
        config.solver = Some(SolverConfig { tol: 1e-8, max_iters: 20_000, eta: EtaRule::Auto });
        config.arms = vec![
            ArmConfig {
                name: "tukey-two-step".into(),
                loss: LossConfig { kind: LossKind::Tukey, xi: Some(4.685) },
                weights: WeightConfig::default(),
                reg: RegConfig {
                    kind: RegKind::L1,
                    lambda: LambdaRule::Multiplier(0.3),
                    shape: None,
                },
                r_rule: RRule::TrueL1Multiple(1.1),
                init: InitStrategy::TwoStep,
            },
            ArmConfig {
                name: "tukey-random".into(),
                loss: LossConfig { kind: LossKind::Tukey, xi: Some(4.685) },
                weights: WeightConfig::default(),
                reg: RegConfig {
                    kind: RegKind::L1,
                    lambda: LambdaRule::Multiplier(0.3),
                    shape: None,
                },
                r_rule: RRule::TrueL1Multiple(1.1),
                init: InitStrategy::Random { sd: 3.0 },
            },
        ];
        config.trials = 2;
        let results = run_experiment(&config).unwrap();
        assert_eq!(results.trials.len(), 4);
        assert!(results.failures.is_empty(), "failures: {:?}", results.failures);
        // Shared data within a trial: both arms see the same seed.
        assert_eq!(results.trials[0].seed, results.trials[2].seed);
    }
}
