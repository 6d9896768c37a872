//! Catalog of robust regression losses.
//!
//! Each loss is a symmetric scalar function `u -> loss(u)` applied to
//! residuals, with `loss(0) = 0` and `loss` nondecreasing in `|u|`. The
//! robust members (Huber, Tukey, Cauchy) have a bounded derivative, which
//! is what caps the influence of any single gross outlier on the
//! estimating equation. Squared and absolute losses are included as
//! non-robust / baseline comparators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Huber,
    Tukey,
    Cauchy,
    Squared,
    Absolute,
}

impl LossKind {
    /// Classical default tuning constant for each family. The squared and
    /// absolute losses take no tuning parameter; a placeholder of 1 is used.
    pub fn default_xi(self) -> f64 {
        match self {
            LossKind::Huber => 1.345,
            LossKind::Tukey => 4.685,
            LossKind::Cauchy => 1.0,
            LossKind::Squared | LossKind::Absolute => 1.0,
        }
    }
}

/// A robust loss together with its tuning parameter `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    pub xi: f64,
}

/// Derivative bounds and local curvature floor of a loss:
/// `kappa1 = sup |loss'|`, `kappa2 = max(0, -inf loss'')`, and
/// `alpha_t = min of loss'' over [-t, t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConstants {
    pub kappa1: f64,
    pub kappa2: f64,
    pub alpha_t: f64,
}

impl LossSpec {
    pub fn new(kind: LossKind, xi: f64) -> Result<Self> {
        if !xi.is_finite() || xi <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "loss tuning parameter must be positive and finite, got {xi}"
            )));
        }
        Ok(LossSpec { kind, xi })
    }

    pub fn huber(xi: f64) -> Result<Self> {
        Self::new(LossKind::Huber, xi)
    }

    pub fn tukey(xi: f64) -> Result<Self> {
        Self::new(LossKind::Tukey, xi)
    }

    pub fn cauchy(xi: f64) -> Result<Self> {
        Self::new(LossKind::Cauchy, xi)
    }

    pub fn squared() -> Self {
        LossSpec { kind: LossKind::Squared, xi: 1.0 }
    }

    pub fn absolute() -> Self {
        LossSpec { kind: LossKind::Absolute, xi: 1.0 }
    }

    /// Loss with the classical default tuning constant for its family.
    pub fn with_default_xi(kind: LossKind) -> Self {
        LossSpec { kind, xi: kind.default_xi() }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.xi.is_finite() || self.xi <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "loss tuning parameter must be positive and finite, got {}",
                self.xi
            )));
        }
        Ok(())
    }

    /// True for losses whose empirical average is a convex function of beta.
    pub fn is_convex(&self) -> bool {
        matches!(
            self.kind,
            LossKind::Huber | LossKind::Squared | LossKind::Absolute
        )
    }

    /// True when `sup |loss'|` is finite.
    pub fn has_bounded_derivative(&self) -> bool {
        !matches!(self.kind, LossKind::Squared)
    }

    /// Evaluate the loss at `u`.
    pub fn value(&self, u: f64) -> Result<f64> {
        if !u.is_finite() {
            return Err(Error::NonFinite(format!("loss argument u = {u}")));
        }
        let xi = self.xi;
        Ok(match self.kind {
            LossKind::Huber => {
                if u.abs() <= xi {
                    0.5 * u * u
                } else {
                    xi * u.abs() - 0.5 * xi * xi
                }
            }
            LossKind::Tukey => {
                if u.abs() <= xi {
                    let s = 1.0 - (u / xi).powi(2);
                    xi * xi / 6.0 * (1.0 - s.powi(3))
                } else {
                    xi * xi / 6.0
                }
            }
            LossKind::Cauchy => 0.5 * xi * xi * (1.0 + (u / xi).powi(2)).ln(),
            LossKind::Squared => 0.5 * u * u,
            LossKind::Absolute => u.abs(),
        })
    }

    /// Evaluate the derivative `loss'(u)`. For the absolute loss this is the
    /// sign function with the subgradient choice `psi(0) = 0`.
    pub fn psi(&self, u: f64) -> Result<f64> {
        if !u.is_finite() {
            return Err(Error::NonFinite(format!("loss argument u = {u}")));
        }
        let xi = self.xi;
        Ok(match self.kind {
            LossKind::Huber => u.clamp(-xi, xi),
            LossKind::Tukey => {
                if u.abs() <= xi {
                    let s = 1.0 - (u / xi).powi(2);
                    u * s * s
                } else {
                    0.0
                }
            }
            LossKind::Cauchy => u / (1.0 + (u / xi).powi(2)),
            LossKind::Squared => u,
            LossKind::Absolute => {
                if u == 0.0 {
                    0.0
                } else {
                    u.signum()
                }
            }
        })
    }

    /// Evaluate the second derivative `loss''(u)`.
    ///
    /// The Huber loss has a kink at `|u| = xi`, where the second derivative
    /// does not exist; evaluating there is an error rather than a one-sided
    /// value. The absolute loss has no meaningful second derivative anywhere.
    pub fn psi_prime(&self, u: f64) -> Result<f64> {
        if !u.is_finite() {
            return Err(Error::NonFinite(format!("loss argument u = {u}")));
        }
        let xi = self.xi;
        Ok(match self.kind {
            LossKind::Huber => {
                if u.abs() == xi {
                    return Err(Error::UnsupportedPoint(format!(
                        "Huber second derivative does not exist at |u| = xi = {xi}"
                    )));
                } else if u.abs() < xi {
                    1.0
                } else {
                    0.0
                }
            }
            LossKind::Tukey => {
                if u.abs() <= xi {
                    let s = (u / xi).powi(2);
                    (1.0 - s) * (1.0 - 5.0 * s)
                } else {
                    0.0
                }
            }
            LossKind::Cauchy => {
                let s = (u / xi).powi(2);
                (1.0 - s) / (1.0 + s).powi(2)
            }
            LossKind::Squared => 1.0,
            LossKind::Absolute => {
                return Err(Error::UnsupportedPoint(
                    "absolute loss has no second derivative".into(),
                ))
            }
        })
    }

    /// Derivative-bound and curvature constants `(kappa1, kappa2, alpha_t)`
    /// for this loss, with `alpha_t` taken over the interval `[-t_radius,
    /// t_radius]`.
    ///
    /// `kappa1` is reported as `+inf` for the squared loss, whose derivative
    /// is unbounded. The absolute loss supports `kappa1` only; its curvature
    /// constants are undefined.
    pub fn constants(&self, t_radius: f64) -> Result<LossConstants> {
        if !t_radius.is_finite() || t_radius < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "curvature radius must be nonnegative and finite, got {t_radius}"
            )));
        }
        let xi = self.xi;
        let kappa1 = match self.kind {
            LossKind::Huber => xi,
            LossKind::Tukey => 16.0 * xi / (25.0 * 5.0_f64.sqrt()),
            LossKind::Cauchy => 0.5 * xi,
            LossKind::Squared => f64::INFINITY,
            LossKind::Absolute => 1.0,
        };
        let (kappa2, alpha_t) = match self.kind {
            LossKind::Huber => {
                // Curvature is 1 inside the corner and 0 beyond it, so the
                // minimum over [-t, t] drops to 0 once t reaches the corner.
                let a = if t_radius < xi { 1.0 } else { 0.0 };
                (0.0, a)
            }
            LossKind::Tukey => {
                // loss'' = (1 - s)(1 - 5s) with s = (u/xi)^2 decreases in s
                // until s = 3/5, where it attains its minimum of -4/5.
                let s_min = 0.6 * xi * xi;
                let a = if t_radius * t_radius <= s_min {
                    self.psi_prime(t_radius)?
                } else {
                    -0.8
                };
                (0.8, a)
            }
            LossKind::Cauchy => {
                // loss'' = (1 - s)/(1 + s)^2 decreases in s until s = 3,
                // where it attains its minimum of -1/8.
                let s_min = 3.0 * xi * xi;
                let a = if t_radius * t_radius <= s_min {
                    self.psi_prime(t_radius)?
                } else {
                    -0.125
                };
                (0.125, a)
            }
            LossKind::Squared => (0.0, 1.0),
            LossKind::Absolute => {
                return Err(Error::UnsupportedPoint(
                    "curvature constants are undefined for the absolute loss".into(),
                ))
            }
        };
        Ok(LossConstants { kappa1, kappa2, alpha_t })
    }
}

/// Minimum of `loss''` over a symmetric dense grid on `[-t_radius, t_radius]`.
///
/// Generic fallback for losses without a closed-form curvature analysis, and
/// the independent oracle the tests compare [`LossSpec::constants`] against.
/// Grid points falling on a kink are skipped.
pub fn min_psi_prime_on_grid(loss: &LossSpec, t_radius: f64, points: usize) -> Result<f64> {
    if points < 2 || t_radius < 0.0 {
        return Err(Error::InvalidSpec(
            "grid minimization needs at least 2 points and a nonnegative radius".into(),
        ));
    }
    if t_radius == 0.0 {
        return loss.psi_prime(0.0);
    }
    let mut min = f64::INFINITY;
    for i in 0..points {
        let u = -t_radius + 2.0 * t_radius * (i as f64) / ((points - 1) as f64);
        match loss.psi_prime(u) {
            Ok(v) => min = min.min(v),
            Err(Error::UnsupportedPoint(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(min)
}
