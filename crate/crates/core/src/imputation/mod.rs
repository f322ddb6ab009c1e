//! Multiple imputation: a chained-equations imputer, Rubin's rules, and the
//! complete-case comparison used to judge whether imputation changed the picture.

mod chained;
mod compare;
mod pool;

pub use chained::{
    complete_case_filter, impute_chained, load_imputed_dir, ImputeOptions, ImputedSet,
    Provenance, MIN_OBSERVED, WARN_MISSING_FRACTION,
};
pub use compare::{compare_estimates, Discrepancy, DiscrepancyReport, DISCREPANCY_ADVICE};
pub use pool::{pool_rubin, PooledResult};
