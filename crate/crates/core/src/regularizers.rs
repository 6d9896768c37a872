//! Coordinate-separable amenable penalties and the constrained proximal map.
//!
//! Each penalty `rho(t)` decomposes as `rho(t) = lambda * |t| - q(t)` with
//! `q` everywhere differentiable, so the solver can fold `q` into the smooth
//! part of the objective and keep plain soft-thresholding as its proximal
//! step. The amenability parameters `(mu, gamma)` are the weak-convexity
//! constant of `rho` and the multiple of `lambda` beyond which `rho'`
//! vanishes.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegKind {
    L1,
    Scad,
    Mcp,
}

/// A separable penalty: kind, level `lambda`, and shape parameter
/// (`a > 2` for SCAD, `b > 0` for MCP, unused for L1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizerSpec {
    pub kind: RegKind,
    pub lambda: f64,
    pub shape: f64,
}

impl RegularizerSpec {
    pub fn l1(lambda: f64) -> Result<Self> {
        let spec = RegularizerSpec { kind: RegKind::L1, lambda, shape: 1.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn scad(lambda: f64, a: f64) -> Result<Self> {
        let spec = RegularizerSpec { kind: RegKind::Scad, lambda, shape: a };
        spec.validate()?;
        Ok(spec)
    }

    pub fn mcp(lambda: f64, b: f64) -> Result<Self> {
        let spec = RegularizerSpec { kind: RegKind::Mcp, lambda, shape: b };
        spec.validate()?;
        Ok(spec)
    }

    /// Same penalty family and shape at a different level.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let spec = RegularizerSpec { lambda, ..*self };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "penalty level lambda must be positive and finite, got {}",
                self.lambda
            )));
        }
        match self.kind {
            RegKind::L1 => {}
            RegKind::Scad => {
                if !self.shape.is_finite() || self.shape <= 2.0 {
                    return Err(Error::InvalidSpec(format!(
                        "SCAD shape must satisfy a > 2, got {}",
                        self.shape
                    )));
                }
            }
            RegKind::Mcp => {
                if !self.shape.is_finite() || self.shape <= 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "MCP shape must satisfy b > 0, got {}",
                        self.shape
                    )));
                }
            }
        }
        Ok(())
    }

    /// Weak-convexity and flat-region parameters `(mu, gamma)`:
    /// `(0, +inf)` for L1, `(1/(a-1), a)` for SCAD, `(1/b, b)` for MCP.
    pub fn amenability(&self) -> (f64, f64) {
        match self.kind {
            RegKind::L1 => (0.0, f64::INFINITY),
            RegKind::Scad => (1.0 / (self.shape - 1.0), self.shape),
            RegKind::Mcp => (1.0 / self.shape, self.shape),
        }
    }

    /// Scalar penalty value `rho(t)`.
    pub fn penalty_scalar(&self, t: f64) -> f64 {
        let lam = self.lambda;
        let at = t.abs();
        match self.kind {
            RegKind::L1 => lam * at,
            RegKind::Scad => {
                let a = self.shape;
                if at <= lam {
                    lam * at
                } else if at <= a * lam {
                    -(at * at - 2.0 * a * lam * at + lam * lam) / (2.0 * (a - 1.0))
                } else {
                    0.5 * (a + 1.0) * lam * lam
                }
            }
            RegKind::Mcp => {
                let b = self.shape;
                if at <= lam * b {
                    lam * at - t * t / (2.0 * b)
                } else {
                    0.5 * lam * lam * b
                }
            }
        }
    }

    /// Derivative `rho'(t)` for `t >= 0`; extended to negative `t` by odd
    /// symmetry. Ties at the piecewise breakpoints take the left branch;
    /// the formulas are C^1 so both branches agree there.
    fn rho_prime_abs(&self, at: f64) -> f64 {
        let lam = self.lambda;
        match self.kind {
            RegKind::L1 => lam,
            RegKind::Scad => {
                let a = self.shape;
                if at <= lam {
                    lam
                } else if at <= a * lam {
                    (a * lam - at) / (a - 1.0)
                } else {
                    0.0
                }
            }
            RegKind::Mcp => (lam - at / self.shape).max(0.0),
        }
    }

    /// Value of the smooth correction `q(t) = lambda * |t| - rho(t)`.
    pub fn q_value(&self, t: f64) -> f64 {
        self.lambda * t.abs() - self.penalty_scalar(t)
    }

    /// Derivative of the smooth correction,
    /// `q'(t) = sign(t) * (lambda - rho'(|t|))`, with `q'(0) = 0`.
    pub fn q_grad(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::NonFinite(format!("q gradient argument t = {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(t.signum() * (self.lambda - self.rho_prime_abs(t.abs())))
    }

    /// Penalty value of a coefficient vector, `sum_j rho(beta_j)`.
    pub fn penalty(&self, beta: &Array1<f64>) -> Result<f64> {
        let mut total = 0.0;
        for &t in beta.iter() {
            if !t.is_finite() {
                return Err(Error::NonFinite(format!("penalty argument entry {t}")));
            }
            total += self.penalty_scalar(t);
        }
        Ok(total)
    }
}

/// Componentwise soft-thresholding `sign(z) * (|z| - shift)_+`.
pub fn soft_threshold(z: &Array1<f64>, shift: f64) -> Array1<f64> {
    z.mapv(|v| v.signum() * (v.abs() - shift).max(0.0))
}

/// Exact minimizer of `0.5 ||beta - z||_2^2 + threshold * ||beta||_1`
/// subject to `||beta||_1 <= radius`.
///
/// When plain soft-thresholding at `threshold` already satisfies the
/// constraint that point is returned unchanged. Otherwise the KKT
/// conditions give soft-thresholding with an inflated shift
/// `threshold + theta`, where `theta > 0` is the unique root of
/// `||S_{threshold+theta}(z)||_1 = radius`; the root is located by
/// bisection to absolute tolerance 1e-12, returning the feasible endpoint
/// of the final bracket.
pub fn prox_l1_constrained(z: &Array1<f64>, threshold: f64, radius: f64) -> Array1<f64> {
    debug_assert!(threshold >= 0.0 && radius >= 0.0);
    if radius == 0.0 {
        return Array1::zeros(z.len());
    }
    let base = soft_threshold(z, threshold);
    if base.iter().map(|v| v.abs()).sum::<f64>() <= radius {
        return base;
    }
    let l1_at = |theta: f64| -> f64 {
        z.iter()
            .map(|v| (v.abs() - threshold - theta).max(0.0))
            .sum()
    };
    let mut lo = 0.0;
    let mut hi = z.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if l1_at(mid) > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    soft_threshold(z, threshold + hi)
}
