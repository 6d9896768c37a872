//! Assembled penalized M-estimation problems.
//!
//! A [`Problem`] bundles the data `(X, y)`, a loss, a weight scheme, a
//! penalty, the l1 side constraint `||beta||_1 <= R`, and an optional local
//! l2 ball. The empirical loss is
//!
//! ```text
//! L_n(beta) = (1/n) sum_i (w_i / v_i) * loss((x_i' beta - y_i) * v_i)
//! ```
//!
//! which reduces to the plain M-estimator under identity weights. The
//! solver works with the shifted smooth part `Lbar_n = L_n - q` so that its
//! proximal step stays plain soft-thresholding.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::regularizers::{prox_l1_constrained, RegularizerSpec};
use crate::weights::WeightScheme;

/// An l2 ball `||beta - center||_2 <= radius` intersected with the l1
/// constraint.
#[derive(Debug, Clone)]
pub struct LocalBall {
    pub center: Array1<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct Problem {
    x: Array2<f64>,
    y: Array1<f64>,
    pub loss: LossSpec,
    pub weights: WeightScheme,
    pub reg: RegularizerSpec,
    pub radius_l1: f64,
    pub local_ball: Option<LocalBall>,
    /// Cached per-observation weights w(x_i) and v(x_i).
    w: Array1<f64>,
    v: Array1<f64>,
}

/// Weighted empirical loss on explicit data, shared with the restricted
/// solver in the oracle module.
pub(crate) fn weighted_loss(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    loss: &LossSpec,
    w: &ArrayView1<f64>,
    v: &ArrayView1<f64>,
    beta: &Array1<f64>,
) -> Result<f64> {
    let n = x.nrows();
    let residuals = x.dot(beta) - y;
    let mut total = 0.0;
    for i in 0..n {
        total += w[i] / v[i] * loss.value(residuals[i] * v[i])?;
    }
    Ok(total / n as f64)
}

/// Gradient of [`weighted_loss`] with respect to beta.
pub(crate) fn weighted_gradient(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    loss: &LossSpec,
    w: &ArrayView1<f64>,
    v: &ArrayView1<f64>,
    beta: &Array1<f64>,
) -> Result<Array1<f64>> {
    let n = x.nrows();
    let residuals = x.dot(beta) - y;
    let mut coef = Array1::zeros(n);
    for i in 0..n {
        coef[i] = w[i] * loss.psi(residuals[i] * v[i])? / n as f64;
    }
    Ok(x.t().dot(&coef))
}

impl Problem {
    pub fn new(
        x: Array2<f64>,
        y: Array1<f64>,
        loss: LossSpec,
        weights: WeightScheme,
        reg: RegularizerSpec,
        radius_l1: f64,
    ) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 || p == 0 {
            return Err(Error::InvalidSpec(format!("empty design matrix {n}x{p}")));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: y.len() });
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design matrix or response".into()));
        }
        if !radius_l1.is_finite() || radius_l1 < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "l1 constraint radius must be nonnegative, got {radius_l1}"
            )));
        }
        loss.validate()?;
        reg.validate()?;
        if let Some(dim) = weights.required_dim() {
            if dim != p {
                return Err(Error::DimensionMismatch { expected: p, got: dim });
            }
        }
        let mut w = Array1::zeros(n);
        let mut v = Array1::zeros(n);
        for i in 0..n {
            let row = x.row(i);
            w[i] = weights.weight_w(&row)?;
            v[i] = weights.weight_v(&row)?;
        }
        Ok(Problem { x, y, loss, weights, reg, radius_l1, local_ball: None, w, v })
    }

    /// Attach a local l2 ball; fails if the intersection with the l1
    /// constraint is empty.
    pub fn with_local_ball(mut self, center: Array1<f64>, radius: f64) -> Result<Self> {
        if center.len() != self.p() {
            return Err(Error::DimensionMismatch { expected: self.p(), got: center.len() });
        }
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "local ball radius must be positive, got {radius}"
            )));
        }
        // Nearest point of the l1 ball to the center decides nonemptiness.
        let projected = prox_l1_constrained(&center, 0.0, self.radius_l1);
        let dist = (&projected - &center).mapv(|d| d * d).sum().sqrt();
        if dist > radius + 1e-12 {
            return Err(Error::Infeasible(format!(
                "l1 ball of radius {} and local ball of radius {radius} are disjoint",
                self.radius_l1
            )));
        }
        self.local_ball = Some(LocalBall { center, radius });
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn design(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn response(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn observation_weights(&self) -> (&Array1<f64>, &Array1<f64>) {
        (&self.w, &self.v)
    }

    fn check_dim(&self, beta: &Array1<f64>) -> Result<()> {
        if beta.len() != self.p() {
            return Err(Error::DimensionMismatch { expected: self.p(), got: beta.len() });
        }
        Ok(())
    }

    /// Weighted empirical loss `L_n(beta)`.
    pub fn loss_value(&self, beta: &Array1<f64>) -> Result<f64> {
        self.check_dim(beta)?;
        weighted_loss(
            &self.x.view(),
            &self.y.view(),
            &self.loss,
            &self.w.view(),
            &self.v.view(),
            beta,
        )
    }

    /// Gradient of the weighted empirical loss.
    pub fn gradient(&self, beta: &Array1<f64>) -> Result<Array1<f64>> {
        self.check_dim(beta)?;
        weighted_gradient(
            &self.x.view(),
            &self.y.view(),
            &self.loss,
            &self.w.view(),
            &self.v.view(),
            beta,
        )
    }

    /// Full composite objective `L_n(beta) + rho(beta)`.
    pub fn objective_value(&self, beta: &Array1<f64>) -> Result<f64> {
        Ok(self.loss_value(beta)? + self.reg.penalty(beta)?)
    }

    /// Shifted smooth part `Lbar_n(beta) = L_n(beta) - q(beta)`.
    pub fn barred_loss(&self, beta: &Array1<f64>) -> Result<f64> {
        let q: f64 = beta.iter().map(|&t| self.reg.q_value(t)).sum();
        Ok(self.loss_value(beta)? - q)
    }

    /// Gradient of the shifted smooth part, `grad L_n - grad q`.
    pub fn barred_gradient(&self, beta: &Array1<f64>) -> Result<Array1<f64>> {
        let mut g = self.gradient(beta)?;
        for (gj, &t) in g.iter_mut().zip(beta.iter()) {
            *gj -= self.reg.q_grad(t)?;
        }
        Ok(g)
    }

    pub fn is_l1_feasible(&self, beta: &Array1<f64>) -> bool {
        let l1: f64 = beta.iter().map(|v| v.abs()).sum();
        l1 <= self.radius_l1 * (1.0 + 1e-9) + 1e-12
    }

    /// Norm of the minimal-norm generalized gradient of the composite
    /// objective at `beta`, restricted to feasible directions.
    ///
    /// The composite subdifferential is `grad L_n - grad q + lambda *
    /// d||.||_1`, plus `nu * d||.||_1` with `nu >= 0` when the l1
    /// constraint is active; the returned value is minimized over that
    /// multiplier. Zero (to tolerance) iff `beta` is first-order stationary.
    pub fn stationarity_residual(&self, beta: &Array1<f64>) -> Result<f64> {
        self.check_dim(beta)?;
        if !self.is_l1_feasible(beta) {
            return Err(Error::Infeasible(format!(
                "||beta||_1 = {} exceeds R = {}",
                beta.iter().map(|v| v.abs()).sum::<f64>(),
                self.radius_l1
            )));
        }
        let g = self.barred_gradient(beta)?;
        let lambda = self.reg.lambda;
        let residual_norm = |shift: f64| -> f64 {
            let threshold = lambda + shift;
            let mut sq = 0.0;
            for (&gj, &bj) in g.iter().zip(beta.iter()) {
                let rj = if bj != 0.0 {
                    gj + threshold * bj.signum()
                } else {
                    gj.signum() * (gj.abs() - threshold).max(0.0)
                };
                sq += rj * rj;
            }
            sq.sqrt()
        };
        let l1: f64 = beta.iter().map(|v| v.abs()).sum();
        let active = l1 >= self.radius_l1 * (1.0 - 1e-9);
        if !active {
            return Ok(residual_norm(0.0));
        }
        // Golden-section minimization over the constraint multiplier; the
        // residual norm is convex in the shift.
        let mut lo = 0.0;
        let mut hi = g.iter().fold(0.0_f64, |m, v| m.max(v.abs())) + lambda + 1.0;
        let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
        let mut m1 = hi - phi * (hi - lo);
        let mut m2 = lo + phi * (hi - lo);
        let mut f1 = residual_norm(m1);
        let mut f2 = residual_norm(m2);
        for _ in 0..200 {
            if f1 <= f2 {
                hi = m2;
                m2 = m1;
                f2 = f1;
                m1 = hi - phi * (hi - lo);
                f1 = residual_norm(m1);
            } else {
                lo = m1;
                m1 = m2;
                f1 = f2;
                m2 = lo + phi * (hi - lo);
                f2 = residual_norm(m2);
            }
            if hi - lo < 1e-13 * (1.0 + hi) {
                break;
            }
        }
        Ok(residual_norm(0.5 * (lo + hi)).min(residual_norm(0.0)))
    }

    /// Whether `beta` is stationary at the scale-aware tolerance
    /// `1e-6 * (1 + ||grad L_n(beta)||_inf)`.
    pub fn is_stationary(&self, beta: &Array1<f64>) -> Result<bool> {
        let res = self.stationarity_residual(beta)?;
        let gsup = self
            .gradient(beta)?
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(res <= 1e-6 * (1.0 + gsup))
    }

    /// Sup-norm of the loss gradient at a reference vector, the quantity
    /// that drives the lower bound on a usable penalty level.
    pub fn grad_supnorm_at_truth(&self, beta_star: &Array1<f64>) -> Result<f64> {
        Ok(self
            .gradient(beta_star)?
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs())))
    }
}
