//! Penalized robust M-estimation for high-dimensional sparse linear models.
//!
//! The crate provides:
//!
//! - a catalog of robust losses ([`losses`]) and covariate weighting
//!   schemes ([`weights`]) for (generalized) M-estimation,
//! - amenable separable penalties with the soft-thresholding-compatible
//!   decomposition and the l1-ball-constrained proximal map
//!   ([`regularizers`]),
//! - assembled penalized problems with gradients and stationarity
//!   diagnostics ([`objective`]),
//! - a composite gradient descent solver with an optional two-step
//!   convex-initialization procedure ([`optim`]),
//! - restricted oracle fits, support-recovery and curvature diagnostics,
//!   and closed-form error bounds ([`oracle`]),
//! - synthetic data generation with heavy-tailed error laws ([`datagen`]),
//! - a declarative, reproducible Monte-Carlo experiment runner
//!   ([`experiments`]).

pub mod datagen;
pub mod error;
pub mod experiments;
pub mod optim;
pub mod oracle;
pub mod losses;
pub mod objective;
pub mod regularizers;
pub mod weights;

pub use error::{Error, Result};
pub use losses::{LossKind, LossSpec};
pub use objective::{LocalBall, Problem};
pub use optim::{composite_gd, two_step, SolverOptions, SolverTrace, StepRule};
pub use oracle::{empirical_variance, rsc_probe, solve_oracle, stationary_point_bounds, support_recovered, OracleResult};
pub use regularizers::{prox_l1_constrained, soft_threshold, RegKind, RegularizerSpec};
pub use weights::{MallowsPower, WeightKind, WeightScheme};
