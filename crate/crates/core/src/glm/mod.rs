//! Regression engine: design matrices, OLS, logistic and modified-Poisson
//! fits with Wald inference.

mod design;
mod family;
mod inference;
mod irls;
mod linear;
mod model;

pub use design::{
    build_design_matrix, check_rank, contrast_name, product_name, DesignMatrix, Term, INTERCEPT,
    RANK_TOLERANCE,
};
pub use family::{choose_family, family_registry, GlmFamily, Linear, Logistic, ModifiedPoisson};
pub use inference::{
    critical_value, min_detectable_estimate, normal_upper_quantile, two_sided_p, EffectScale,
    FamilyKind, FitResult,
};
pub use irls::{fit_logistic, fit_modified_poisson, score_max};
pub use linear::fit_linear;
pub use model::{FitOptions, ModelFit};

pub(crate) use irls::{irls, Link};
