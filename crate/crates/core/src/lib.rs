//! Dual sparse partial least squares regression.
//!
//! The crate builds PLS1 models whose weight vectors come from dual-norm
//! penalties (pseudo-lasso, pseudo-group-lasso, pseudo-least-squares and
//! pseudo-ridge), together with OLS, ridge and lasso baselines, a Gaussian
//! mixture spectra simulator, calibration splitters and cross-validation.

pub mod error;
pub mod linalg;
pub mod metrics;
mod par;
pub mod baselines;
pub mod datasets;
pub mod engine;
pub mod io;
pub mod penalty;
pub mod protocol;
pub mod reports;
pub mod sampling;
pub mod selection;

pub use error::{Error, Result};
pub use linalg::{CenteringStats, DataMatrix, SquareMatrix, SymmetricMatrix};
pub use par::mode as execution_mode;
pub use baselines::{BaselineMethod, BaselineModel};
pub use engine::{fit, FittedModel, PenaltySpec, SavedModel};
pub use penalty::{GroupPartition, RidgeParams, ShrinkRatio, ThresholdLog};
