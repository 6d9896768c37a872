//! Restricted oracle fits and statistical diagnostics.
//!
//! The oracle estimator minimizes the unpenalized loss over vectors
//! supported on a given index set, inside an l2 ball around a reference
//! vector. It is the low-dimensional benchmark that nonconvex-penalized
//! stationary points are expected to match once the sample size is large
//! enough for exact support recovery.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::objective::{weighted_gradient, weighted_loss, Problem};

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Full-dimensional solution, zero off the support.
    pub beta_oracle: Array1<f64>,
    pub support: Vec<usize>,
    pub iterations: usize,
    /// Whether the l2 ball constraint was active at the solution.
    pub radius_active: bool,
    /// Euclidean norm of the restricted-loss gradient at the solution.
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub eta0: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { max_iters: 200_000, tol: 1e-10, eta0: 1.0 }
    }
}

/// Minimize the unpenalized loss restricted to `support`, subject to
/// `||beta - beta_star||_2 <= radius`, by projected gradient descent on
/// the |support|-dimensional problem with backtracking step sizes.
pub fn solve_oracle(
    prob: &Problem,
    support: &[usize],
    beta_star: &Array1<f64>,
    radius: f64,
) -> Result<OracleResult> {
    solve_oracle_with(prob, support, beta_star, radius, &OracleOptions::default())
}

pub fn solve_oracle_with(
    prob: &Problem,
    support: &[usize],
    beta_star: &Array1<f64>,
    radius: f64,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    let p = prob.p();
    let n = prob.n();
    if beta_star.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: beta_star.len() });
    }
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::InvalidSpec(format!(
            "oracle ball radius must be positive, got {radius}"
        )));
    }
    let mut support: Vec<usize> = support.to_vec();
    support.sort_unstable();
    support.dedup();
    if support.iter().any(|&j| j >= p) {
        return Err(Error::InvalidSpec("support index out of range".into()));
    }
    if support.is_empty() || support.len() > n {
        return Err(Error::InvalidSpec(format!(
            "support size must lie in [1, n]; got {} with n = {n}",
            support.len()
        )));
    }
    let k = support.len();

    // Mass of the reference vector off the support shrinks the effective
    // radius of the ball in restricted coordinates.
    let mut off_mass = 0.0;
    let mut on = vec![false; p];
    for &j in &support {
        on[j] = true;
    }
    for j in 0..p {
        if !on[j] {
            off_mass += beta_star[j] * beta_star[j];
        }
    }
    let r_eff_sq = radius * radius - off_mass;
    if r_eff_sq < 0.0 {
        return Err(Error::Infeasible(
            "no vector on the support lies inside the oracle ball".into(),
        ));
    }
    let r_eff = r_eff_sq.sqrt();

    let xs = Array2::from_shape_fn((n, k), |(i, jj)| prob.design()[[i, support[jj]]]);
    let center = Array1::from_iter(support.iter().map(|&j| beta_star[j]));
    let (w, v) = prob.observation_weights();

    let loss_at = |b: &Array1<f64>| -> Result<f64> {
        weighted_loss(&xs.view(), &prob.response().view(), &prob.loss, &w.view(), &v.view(), b)
    };
    let grad_at = |b: &Array1<f64>| -> Result<Array1<f64>> {
        weighted_gradient(&xs.view(), &prob.response().view(), &prob.loss, &w.view(), &v.view(), b)
    };
    let project = |z: Array1<f64>| -> Array1<f64> {
        let diff = &z - &center;
        let dist = diff.dot(&diff).sqrt();
        if dist <= r_eff || r_eff == 0.0 {
            if r_eff == 0.0 {
                center.clone()
            } else {
                z
            }
        } else {
            &center + &(&diff * (r_eff / dist))
        }
    };

    let mut b = center.clone();
    let mut fval = loss_at(&b)?;
    let mut eta = opts.eta0;
    let mut iterations = 0;
    let mut converged = false;
    for t in 0..opts.max_iters {
        let g = grad_at(&b)?;
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::SolverFailure {
                iteration: t,
                reason: "non-finite gradient in oracle solve".into(),
            });
        }
        let mut accepted = None;
        for doubling in 0..=60 {
            let cand = project(&b - &(&g / eta));
            let diff = &cand - &b;
            let quad = fval + g.dot(&diff) + 0.5 * eta * diff.dot(&diff);
            let fc = loss_at(&cand)?;
            if fc <= quad + 1e-12 * (1.0 + fval.abs()) {
                accepted = Some((cand, fc));
                break;
            }
            if doubling == 60 {
                return Err(Error::CurvatureEstimation { doublings: 60 });
            }
            eta *= 2.0;
        }
        let (next, fnext) = accepted.expect("backtracking returned");
        iterations = t + 1;
        let diff = &next - &b;
        let rel = diff.dot(&diff).sqrt() / b.dot(&b).sqrt().max(1.0);
        b = next;
        fval = fnext;
        if rel <= opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SolverFailure {
            iteration: iterations,
            reason: "oracle solve did not converge within its iteration budget".into(),
        });
    }

    let dist_to_center = {
        let d = &b - &center;
        d.dot(&d).sqrt()
    };
    let radius_active = r_eff > 0.0 && dist_to_center >= r_eff * (1.0 - 1e-8);
    let g = grad_at(&b)?;
    let grad_norm = g.dot(&g).sqrt();

    let mut beta_full = Array1::zeros(p);
    for (jj, &j) in support.iter().enumerate() {
        beta_full[j] = b[jj];
    }
    Ok(OracleResult { beta_oracle: beta_full, support, iterations, radius_active, grad_norm })
}

/// Exact support recovery: the set of entries exceeding `zero_tol` in
/// magnitude equals the true support.
pub fn support_recovered(beta_hat: &Array1<f64>, true_support: &[usize], zero_tol: f64) -> bool {
    let mut est: Vec<usize> = beta_hat
        .iter()
        .enumerate()
        .filter(|(_, &v)| v.abs() > zero_tol)
        .map(|(j, _)| j)
        .collect();
    let mut truth: Vec<usize> = true_support.to_vec();
    est.sort_unstable();
    truth.sort_unstable();
    truth.dedup();
    est == truth
}

/// Default magnitude below which an entry counts as zero for support
/// recovery; soft-thresholding produces exact zeros, so this only absorbs
/// float noise.
pub const SUPPORT_ZERO_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBounds {
    pub l2: f64,
    pub l1: f64,
}

/// Closed-form l2/l1 error bounds for local stationary points of the
/// penalized program, in terms of the penalty level, the sparsity `k`,
/// the restricted-strong-convexity constant `alpha`, and the penalty's
/// weak-convexity constant `mu`:
///
/// ```text
/// l2 <= 24 lambda sqrt(k) / (4 alpha - 3 mu)
/// l1 <= 96 lambda k / (4 alpha - 3 mu)
/// ```
pub fn stationary_point_bounds(lambda: f64, k: usize, alpha: f64, mu: f64) -> Result<ErrorBounds> {
    if !(lambda.is_finite() && lambda > 0.0) || k == 0 {
        return Err(Error::InvalidSpec(format!(
            "bounds need lambda > 0 and k >= 1, got lambda = {lambda}, k = {k}"
        )));
    }
    let denom = 4.0 * alpha - 3.0 * mu;
    if !(denom > 0.0) {
        return Err(Error::AssumptionViolated(format!(
            "need 4 alpha > 3 mu, got alpha = {alpha}, mu = {mu}"
        )));
    }
    let kf = k as f64;
    Ok(ErrorBounds {
        l2: 24.0 * lambda * kf.sqrt() / denom,
        l1: 96.0 * lambda * kf / denom,
    })
}

/// Empirical distribution of curvature ratios
/// `<grad L(b1) - grad L(b2), b1 - b2> / ||b1 - b2||_2^2` over random
/// pairs from the l2 ball of radius `radius` around `center`.
#[derive(Debug, Clone)]
pub struct CurvatureProbe {
    pub ratios: Vec<f64>,
    pub frac_nonpositive: f64,
}

impl CurvatureProbe {
    pub fn min(&self) -> f64 {
        self.ratios.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn median(&self) -> f64 {
        let mut v = self.ratios.clone();
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    }
}

/// Sample `num_pairs` pairs uniformly from the ball and return the
/// curvature ratios; degenerate pairs (coincident points) are rejected
/// and resampled.
pub fn rsc_probe(
    prob: &Problem,
    center: &Array1<f64>,
    radius: f64,
    num_pairs: usize,
    seed: u64,
) -> Result<CurvatureProbe> {
    if num_pairs == 0 {
        return Err(Error::InvalidSpec("curvature probe needs at least one pair".into()));
    }
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::InvalidSpec(format!(
            "curvature probe radius must be positive, got {radius}"
        )));
    }
    if center.len() != prob.p() {
        return Err(Error::DimensionMismatch { expected: prob.p(), got: center.len() });
    }
    let p = prob.p();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ball_point = |rng: &mut ChaCha8Rng| -> Array1<f64> {
        let mut g = Array1::zeros(p);
        for gj in g.iter_mut() {
            *gj = rng.sample::<f64, _>(StandardNormal);
        }
        let norm = g.dot(&g).sqrt().max(1e-300);
        let u: f64 = rng.gen::<f64>();
        let scale = radius * u.powf(1.0 / p as f64) / norm;
        center + &(&g * scale)
    };
    let mut ratios = Vec::with_capacity(num_pairs);
    let mut nonpositive = 0usize;
    while ratios.len() < num_pairs {
        let b1 = ball_point(&mut rng);
        let b2 = ball_point(&mut rng);
        let d = &b1 - &b2;
        let dist_sq = d.dot(&d);
        if dist_sq < (1e-12 * radius).powi(2) {
            continue;
        }
        let g1 = prob.gradient(&b1)?;
        let g2 = prob.gradient(&b2)?;
        let ratio = (&g1 - &g2).dot(&d) / dist_sq;
        if ratio <= 0.0 {
            nonpositive += 1;
        }
        ratios.push(ratio);
    }
    Ok(CurvatureProbe {
        ratios,
        frac_nonpositive: nonpositive as f64 / num_pairs as f64,
    })
}

/// Sample variance of `sqrt(n) * v' (fit - beta_star)` across trials.
/// Plug-in closed-form variance formulas are deliberately not provided;
/// efficiency comparisons in this crate are made through this empirical
/// quantity.
pub fn empirical_variance(
    fits: &[Array1<f64>],
    beta_star: &Array1<f64>,
    direction: &Array1<f64>,
    n: usize,
) -> Result<f64> {
    if fits.len() < 2 {
        return Err(Error::InvalidSpec(format!(
            "empirical variance needs at least 2 fits, got {}",
            fits.len()
        )));
    }
    let norm = direction.dot(direction).sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidSpec(format!(
            "direction must be a unit vector, got norm {norm}"
        )));
    }
    let root_n = (n as f64).sqrt();
    let mut terms = Vec::with_capacity(fits.len());
    for fit in fits {
        if fit.len() != beta_star.len() {
            return Err(Error::DimensionMismatch { expected: beta_star.len(), got: fit.len() });
        }
        terms.push(root_n * direction.dot(&(fit - beta_star)));
    }
    let mean = terms.iter().sum::<f64>() / terms.len() as f64;
    let var = terms.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>()
        / (terms.len() - 1) as f64;
    Ok(var)
}
