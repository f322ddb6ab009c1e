//! Familywise corrections across the K outcome tests.

mod adjust;
mod resample;

pub use adjust::{adjust_bonferroni_holm, holm, MultiplicityReport};
pub use resample::{
    null_rejection_counts, null_rejection_interval, romano_wolf, stepdown_max_t,
    NullIntervalReport, ResidualResampler, MIN_NULL_RESAMPLES, MIN_RW_RESAMPLES,
};
