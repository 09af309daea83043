//! Variable importance estimation.
//!
//! Each estimator turns a [`Dataset`] into a [`VimReport`]: one score per
//! feature, a deterministic ranking and the subset of features the method
//! considers important.
//!
//! - [`baseline`]: squared correlation and the nonparametric ψ estimator
//!   (naive and residual-adjusted).
//! - [`linear`]: LASSO by cyclic coordinate descent, OLS and logistic
//!   regression.
//! - [`forest`]: CART trees, random forests, MDI and OOB-permutation MDA.
//! - [`boost`]: second-order gradient boosted trees and gain importance.
//! - [`svm`]: SMO dual solver and margin-based backward elimination.
//! - [`perf`]: the predictive error function over a random-subspace ensemble.
//! - [`simgen`]: seeded simulation scenarios.

pub mod baseline;
pub mod boost;
pub mod data;
pub mod error;
pub mod forest;
pub mod linear;
pub mod metrics;
pub mod model;
pub mod perf;
pub mod report;
pub mod rng;
pub mod simgen;
pub mod svm;

pub use data::{load_csv, read_csv, standardize, write_csv, Dataset, Standardization, Task};
pub use error::{Result, VimError};
pub use metrics::EvalMetrics;
pub use model::{FittedModel, Predictor};
pub use report::{rank_features, VimReport};
