//! Covariate weighting schemes for generalized M-estimation.
//!
//! A scheme supplies two positive functions `w(x)` and `v(x)`; observation
//! `i` contributes `(w/v)(x_i) * loss((x_i' beta - y_i) * v(x_i))` to the
//! empirical loss, so its score is `w(x_i) * loss'(r_i * v(x_i)) * x_i`.
//! Downweighting large `||B x||_2` caps the influence of leverage points.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Identity,
    Mallows,
    HillRyan,
    Schweppe,
}

/// Exponent variant for the Mallows-type weight: `min{1, b/||Bx||}` or
/// `min{1, b^2/||Bx||^2}`. The squared form trades a smaller weight for
/// weaker distributional requirements on the covariates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MallowsPower {
    #[default]
    Linear,
    Squared,
}

#[derive(Debug, Clone)]
pub struct WeightScheme {
    pub kind: WeightKind,
    pub b: f64,
    pub mallows_power: MallowsPower,
    /// Leverage metric `B`; `None` means the identity.
    matrix: Option<Array2<f64>>,
    /// Operator norm of `B^{-1}`, supplied with a custom `B`; 1 for the
    /// identity. Used by the bounded-leverage diagnostics, not by the
    /// weights themselves.
    b_inv_opnorm: Option<f64>,
}

impl WeightScheme {
    pub fn identity() -> Self {
        WeightScheme {
            kind: WeightKind::Identity,
            b: 1.0,
            mallows_power: MallowsPower::Linear,
            matrix: None,
            b_inv_opnorm: Some(1.0),
        }
    }

    pub fn mallows(b: f64) -> Result<Self> {
        Self::bounded(WeightKind::Mallows, b, MallowsPower::Linear)
    }

    pub fn mallows_squared(b: f64) -> Result<Self> {
        Self::bounded(WeightKind::Mallows, b, MallowsPower::Squared)
    }

    pub fn hill_ryan(b: f64) -> Result<Self> {
        Self::bounded(WeightKind::HillRyan, b, MallowsPower::Linear)
    }

    pub fn schweppe() -> Self {
        WeightScheme {
            kind: WeightKind::Schweppe,
            b: 1.0,
            mallows_power: MallowsPower::Linear,
            matrix: None,
            b_inv_opnorm: Some(1.0),
        }
    }

    fn bounded(kind: WeightKind, b: f64, mallows_power: MallowsPower) -> Result<Self> {
        if !b.is_finite() || b <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "leverage bound b must be positive and finite, got {b}"
            )));
        }
        Ok(WeightScheme { kind, b, mallows_power, matrix: None, b_inv_opnorm: Some(1.0) })
    }

    /// Replace the identity leverage metric by a general matrix `B`.
    /// `b_inv_opnorm` is the operator norm of `B^{-1}` when known; it feeds
    /// the `||w(x) x|| <= b * ||B^{-1}||` diagnostic only.
    pub fn with_matrix(mut self, matrix: Array2<f64>, b_inv_opnorm: Option<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidSpec(format!(
                "leverage matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        self.matrix = Some(matrix);
        self.b_inv_opnorm = b_inv_opnorm;
        Ok(self)
    }

    pub fn matrix(&self) -> Option<&Array2<f64>> {
        self.matrix.as_ref()
    }

    pub fn b_inv_opnorm(&self) -> Option<f64> {
        self.b_inv_opnorm
    }

    pub fn is_identity(&self) -> bool {
        self.kind == WeightKind::Identity
    }

    /// Dimension required of covariate vectors, when a custom `B` pins one.
    pub fn required_dim(&self) -> Option<usize> {
        self.matrix.as_ref().map(|m| m.ncols())
    }

    fn scaled_norm(&self, x: &ArrayView1<f64>) -> Result<f64> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariate vector".into()));
        }
        let norm = match &self.matrix {
            None => x.dot(x).sqrt(),
            Some(b) => {
                if b.ncols() != x.len() {
                    return Err(Error::DimensionMismatch { expected: b.ncols(), got: x.len() });
                }
                let bx: Array1<f64> = b.dot(x);
                bx.dot(&bx).sqrt()
            }
        };
        Ok(norm)
    }

    /// Score weight `w(x)`.
    pub fn weight_w(&self, x: &ArrayView1<f64>) -> Result<f64> {
        match self.kind {
            WeightKind::Identity => {
                self.scaled_norm(x)?;
                Ok(1.0)
            }
            WeightKind::Mallows | WeightKind::HillRyan => {
                let norm = self.scaled_norm(x)?;
                if norm == 0.0 {
                    return Ok(1.0);
                }
                Ok(match self.mallows_power {
                    MallowsPower::Linear => (self.b / norm).min(1.0),
                    MallowsPower::Squared => (self.b * self.b / (norm * norm)).min(1.0),
                })
            }
            WeightKind::Schweppe => {
                let norm = self.scaled_norm(x)?;
                if norm == 0.0 {
                    return Err(Error::DegenerateLeverage);
                }
                Ok(1.0 / norm)
            }
        }
    }

    /// Residual scaling `v(x)`.
    pub fn weight_v(&self, x: &ArrayView1<f64>) -> Result<f64> {
        match self.kind {
            WeightKind::Identity | WeightKind::Mallows => {
                self.scaled_norm(x)?;
                Ok(1.0)
            }
            WeightKind::HillRyan => self.weight_w(x),
            WeightKind::Schweppe => {
                let norm = self.scaled_norm(x)?;
                if norm == 0.0 {
                    return Err(Error::DegenerateLeverage);
                }
                Ok(norm)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mallows_examples() {
        let scheme = WeightScheme::mallows(3.0).unwrap();
        // ||x|| = 6 -> b / ||x|| branch.
        let x = array![6.0, 0.0];
        assert_eq!(scheme.weight_w(&x.view()).unwrap(), 0.5);
        assert_eq!(scheme.weight_v(&x.view()).unwrap(), 1.0);
        // ||x|| = 2 -> capped at 1.
        let x = array![2.0, 0.0];
        assert_eq!(scheme.weight_w(&x.view()).unwrap(), 1.0);
    }

    #[test]
    fn identity_is_unit_weights() {
        let scheme = WeightScheme::identity();
        let x = array![100.0, -40.0, 3.0];
        assert_eq!(scheme.weight_w(&x.view()).unwrap(), 1.0);
        assert_eq!(scheme.weight_v(&x.view()).unwrap(), 1.0);
    }

    #[test]
    fn hill_ryan_scales_residuals_by_w() {
        let scheme = WeightScheme::hill_ryan(3.0).unwrap();
        let x = array![6.0, 0.0];
        assert_eq!(scheme.weight_w(&x.view()).unwrap(), 0.5);
        assert_eq!(scheme.weight_v(&x.view()).unwrap(), 0.5);
    }

    #[test]
    fn schweppe_reciprocal_weights() {
        let scheme = WeightScheme::schweppe();
        let x = array![4.0, 0.0];
        assert_eq!(scheme.weight_w(&x.view()).unwrap(), 0.25);
        assert_eq!(scheme.weight_v(&x.view()).unwrap(), 4.0);
        let zero = Array1::zeros(2);
        assert!(matches!(
            scheme.weight_w(&zero.view()),
            Err(Error::DegenerateLeverage)
        ));
    }

    #[test]
    fn squared_variant() {
        let scheme = WeightScheme::mallows_squared(3.0).unwrap();
        let x = array![6.0, 0.0];
        assert_eq!(scheme.weight_w(&x.view()).unwrap(), 0.25);
        let x = array![2.0, 0.0];
        assert_eq!(scheme.weight_w(&x.view()).unwrap(), 1.0);
    }

    #[test]
    fn custom_matrix_changes_the_norm() {
        let b_mat = array![[2.0, 0.0], [0.0, 0.5]];
        let scheme = WeightScheme::mallows(3.0)
            .unwrap()
            .with_matrix(b_mat, Some(2.0))
            .unwrap();
        // ||Bx|| = ||(6, 0)|| = 6 -> w = 0.5.
        let x = array![3.0, 0.0];
        assert_eq!(scheme.weight_w(&x.view()).unwrap(), 0.5);
        assert_eq!(scheme.b_inv_opnorm(), Some(2.0));
    }

    #[test]
    fn bounded_leverage_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let schemes = [
            WeightScheme::mallows(3.0).unwrap(),
            WeightScheme::mallows_squared(3.0).unwrap(),
            WeightScheme::hill_ryan(3.0).unwrap(),
        ];
        for _ in 0..100_000 {
            let scale = 10f64.powf(rng.gen_range(-2.0..6.0));
            let x = array![
                scale * rng.gen_range(-1.0..1.0),
                scale * rng.gen_range(-1.0..1.0),
                scale * rng.gen_range(-1.0..1.0)
            ];
            for scheme in &schemes {
                let w = scheme.weight_w(&x.view()).unwrap();
                assert!(w > 0.0 && w <= 1.0);
                let norm = x.dot(&x).sqrt();
                let bound = scheme.b * scheme.b_inv_opnorm().unwrap();
                assert!(w * norm <= bound + 1e-9);
            }
        }
    }

    #[test]
    fn weight_nonincreasing_in_scale() {
        let schemes = [
            WeightScheme::mallows(3.0).unwrap(),
            WeightScheme::hill_ryan(2.0).unwrap(),
        ];
        let x = array![1.0, -2.0, 0.5];
        for scheme in &schemes {
            let mut prev = f64::INFINITY;
            for i in 1..200 {
                let scaled = &x * (0.1 * i as f64);
                let w = scheme.weight_w(&scaled.view()).unwrap();
                assert!(w <= prev + 1e-15);
                prev = w;
            }
        }
    }

    #[test]
    fn invalid_bound_rejected() {
        assert!(WeightScheme::mallows(0.0).is_err());
        assert!(WeightScheme::hill_ryan(-2.0).is_err());
    }
}
