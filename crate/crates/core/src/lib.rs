//! Outcome-wide longitudinal analysis.
//!
//! One exposure is regressed against many outcomes under a single shared
//! covariate set. Each association gets Wald inference, an E-value for
//! robustness to unmeasured confounding, and multiplicity summaries
//! (Bonferroni, Holm, Romano–Wolf resampling and a null interval for the
//! number of rejections). Missing data are handled by chained-equations
//! multiple imputation pooled with Rubin's rules.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod glm;
pub mod imputation;
pub mod registry;
pub mod report;
pub mod multiplicity;
pub mod pipeline;
pub mod rng;
pub mod sensitivity;
pub mod simulate;

pub use error::{Error, Result};
