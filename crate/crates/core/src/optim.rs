//! Composite gradient descent under the l1 constraint.
//!
//! The solver works on the rewritten program
//! `min { Lbar_n(beta) + lambda ||beta||_1 : ||beta||_1 <= R }` with
//! `Lbar_n = L_n - q`, so each iterate is
//!
//! ```text
//! beta_{t+1} = argmin_{||beta||_1 <= R}
//!     0.5 ||beta - (beta_t - grad Lbar_n(beta_t) / eta)||_2^2
//!     + (lambda / eta) ||beta||_1
//! ```
//!
//! evaluated exactly by the constrained soft-thresholding map. The step
//! size is either fixed or grown by backtracking until the quadratic
//! surrogate majorizes `Lbar_n` at the candidate point.
//!
//! [`two_step`] chains two solves: a convex bounded-derivative stage
//! (Huber loss with l1 penalty) started from zero, whose output
//! initializes the possibly nonconvex target stage inside its basin of
//! good behavior.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::objective::Problem;
use crate::regularizers::{prox_l1_constrained, RegKind};

/// Step-size policy. `Fixed` replays a known stepsize parameter;
/// `Backtracking` doubles the trial value until the surrogate majorizes
/// the smooth part at the candidate point, and is the default because the
/// smoothness constant is not observable in practice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Fixed(f64),
    Backtracking { eta0: f64 },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Backtracking { eta0: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub step: StepRule,
    pub max_iters: usize,
    /// Relative iterate-change stopping tolerance:
    /// `||b' - b||_2 / max(1, ||b||_2) <= tol`.
    pub tol: f64,
    pub record_trace: bool,
    /// Reference point for the optional per-iteration distance column of
    /// the trace (e.g. the truth, or a precomputed optimum).
    pub ref_point: Option<Array1<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            step: StepRule::default(),
            max_iters: 50_000,
            tol: 1e-8,
            record_trace: false,
            ref_point: None,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidSpec("max_iters must be at least 1".into()));
        }
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "stopping tolerance must be positive, got {}",
                self.tol
            )));
        }
        match self.step {
            StepRule::Fixed(eta) | StepRule::Backtracking { eta0: eta } => {
                if !eta.is_finite() || eta <= 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "step-size parameter must be positive, got {eta}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIters,
}

/// Per-iteration history of a solve. The objective recorded is the
/// surrogate program's, `Lbar_n(beta) + lambda ||beta||_1`, evaluated at
/// each new iterate; vectors are filled only when `record_trace` is set,
/// in which case their length equals `iterations`.
#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub objectives: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub dist_to_ref: Option<Vec<f64>>,
    pub iterations: usize,
    pub stationarity_residual: f64,
    pub termination: Termination,
}

/// Surrogate objective `Lbar_n(beta) + lambda ||beta||_1`.
fn surrogate_objective(prob: &Problem, beta: &Array1<f64>, lbar: f64) -> f64 {
    lbar + prob.reg.lambda * beta.iter().map(|v| v.abs()).sum::<f64>()
}

struct StepOutcome {
    next: Array1<f64>,
    lbar_next: f64,
    eta: f64,
}

/// One prox step at step size `eta`, plus the majorization test
/// `Lbar(next) <= Lbar(beta) + <g, d> + (eta/2) ||d||^2 (+ slack)`.
fn prox_trial(
    prob: &Problem,
    beta: &Array1<f64>,
    grad: &Array1<f64>,
    lbar_beta: f64,
    eta: f64,
) -> Result<(Array1<f64>, f64, bool)> {
    let z = beta - &(grad / eta);
    let next = prox_l1_constrained(&z, prob.reg.lambda / eta, prob.radius_l1);
    let diff = &next - beta;
    let quad = lbar_beta + grad.dot(&diff) + 0.5 * eta * diff.dot(&diff);
    let lbar_next = prob.barred_loss(&next)?;
    let ok = lbar_next <= quad + 1e-10 * (1.0 + lbar_beta.abs());
    Ok((next, lbar_next, ok))
}

fn backtrack(
    prob: &Problem,
    beta: &Array1<f64>,
    grad: &Array1<f64>,
    lbar_beta: f64,
    eta0: f64,
) -> Result<StepOutcome> {
    let mut eta = eta0;
    for doubling in 0..=60 {
        let (next, lbar_next, ok) = prox_trial(prob, beta, grad, lbar_beta, eta)?;
        if ok {
            return Ok(StepOutcome { next, lbar_next, eta });
        }
        if doubling == 60 {
            break;
        }
        eta *= 2.0;
    }
    Err(Error::CurvatureEstimation { doublings: 60 })
}

/// Smallest power-of-2 multiple of `eta0` whose quadratic surrogate
/// majorizes the smooth part at the resulting prox point.
pub fn backtracking_step(prob: &Problem, beta: &Array1<f64>, eta0: f64) -> Result<f64> {
    if !eta0.is_finite() || eta0 <= 0.0 {
        return Err(Error::InvalidSpec(format!(
            "step-size parameter must be positive, got {eta0}"
        )));
    }
    let lbar = prob.barred_loss(beta)?;
    let grad = prob.barred_gradient(beta)?;
    if grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverFailure {
            iteration: 0,
            reason: "non-finite gradient".into(),
        });
    }
    Ok(backtrack(prob, beta, &grad, lbar, eta0)?.eta)
}

/// Composite gradient descent from `beta0`.
///
/// Every iterate is feasible by construction. Terminates when the relative
/// iterate change drops below `opts.tol` or after `opts.max_iters`
/// iterations, and reports the stationarity residual of the final point.
pub fn composite_gd(
    prob: &Problem,
    beta0: &Array1<f64>,
    opts: &SolverOptions,
) -> Result<(Array1<f64>, SolverTrace)> {
    opts.validate()?;
    if beta0.len() != prob.p() {
        return Err(Error::DimensionMismatch { expected: prob.p(), got: beta0.len() });
    }
    if !prob.is_l1_feasible(beta0) {
        return Err(Error::Infeasible(format!(
            "initial point has ||beta||_1 = {} > R = {}",
            beta0.iter().map(|v| v.abs()).sum::<f64>(),
            prob.radius_l1
        )));
    }
    if prob.reg.kind != RegKind::L1 {
        // SCAD and MCP have convex q by construction; nothing further to
        // check. Guard anyway so additions to the catalog revisit this.
        debug_assert!(matches!(prob.reg.kind, RegKind::Scad | RegKind::Mcp));
    }

    let mut beta = beta0.clone();
    let mut lbar = prob.barred_loss(&beta)?;
    let mut eta_carry = match opts.step {
        StepRule::Fixed(eta) => eta,
        StepRule::Backtracking { eta0 } => eta0,
    };

    let mut objectives = Vec::new();
    let mut step_sizes = Vec::new();
    let mut dists = opts.ref_point.as_ref().map(|_| Vec::new());

    let mut iterations = 0;
    let mut termination = Termination::MaxIters;

    for t in 0..opts.max_iters {
        let grad = prob.barred_gradient(&beta)?;
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverFailure {
                iteration: t,
                reason: "non-finite gradient".into(),
            });
        }
        let outcome = match opts.step {
            StepRule::Fixed(eta) => {
                let (next, lbar_next, _) = prox_trial(prob, &beta, &grad, lbar, eta)?;
                StepOutcome { next, lbar_next, eta }
            }
            StepRule::Backtracking { .. } => {
                // Accepted step sizes carry forward; backtracking only grows.
                backtrack(prob, &beta, &grad, lbar, eta_carry)?
            }
        };
        eta_carry = outcome.eta;
        iterations = t + 1;

        if opts.record_trace {
            objectives.push(surrogate_objective(prob, &outcome.next, outcome.lbar_next));
            step_sizes.push(outcome.eta);
            if let (Some(d), Some(r)) = (dists.as_mut(), opts.ref_point.as_ref()) {
                let diff = &outcome.next - r;
                d.push(diff.dot(&diff).sqrt());
            }
        }

        let diff = &outcome.next - &beta;
        let rel_change = diff.dot(&diff).sqrt() / beta.dot(&beta).sqrt().max(1.0);
        beta = outcome.next;
        lbar = outcome.lbar_next;
        if rel_change <= opts.tol {
            termination = Termination::Converged;
            break;
        }
    }

    let residual = prob.stationarity_residual(&beta)?;
    let trace = SolverTrace {
        objectives,
        step_sizes,
        dist_to_ref: dists,
        iterations,
        stationarity_residual: residual,
        termination,
    };
    Ok((beta, trace))
}

/// Two-step procedure: solve a convex bounded-derivative l1-penalized
/// stage from zero, then solve the target problem initialized at the
/// stage-1 output. Both problems must share the data `(X, y)` and the l1
/// radius `R`.
pub fn two_step(
    prob_convex: &Problem,
    prob_target: &Problem,
    opts1: &SolverOptions,
    opts2: &SolverOptions,
) -> Result<(Array1<f64>, SolverTrace, SolverTrace)> {
    if !prob_convex.loss.is_convex() || !prob_convex.loss.has_bounded_derivative() {
        return Err(Error::InvalidSpec(
            "stage-1 loss must be convex with a bounded derivative".into(),
        ));
    }
    if prob_convex.reg.kind != RegKind::L1 {
        return Err(Error::InvalidSpec("stage-1 penalty must be l1".into()));
    }
    if prob_convex.design() != prob_target.design()
        || prob_convex.response() != prob_target.response()
        || prob_convex.radius_l1 != prob_target.radius_l1
    {
        return Err(Error::InvalidSpec(
            "two-step stages must share the data and the l1 radius".into(),
        ));
    }
    let zero = Array1::zeros(prob_convex.p());
    let (beta1, trace1) = composite_gd(prob_convex, &zero, opts1)?;
    let (beta2, trace2) = composite_gd(prob_target, &beta1, opts2)?;
    Ok((beta2, trace1, trace2))
}
