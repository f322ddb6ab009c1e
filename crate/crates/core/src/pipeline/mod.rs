//! The analysis layer: specs, rule engines and the battery runners.

mod coding;
mod config;
mod modes;
mod result;
mod rules;
mod run;

pub use coding::{coding_registry, ExposureCoding, MedianSplit, Raw, Standardized, Tertiles};
pub use config::{
    AnalysisSpec, DataSpec, ExposureSpec, LaggedSpec, MissingStrategy, Options, OutcomeSpec,
};
pub use modes::{
    canonical_mode, effective_covariates, mode_registry, Analysis, AnalysisMode, Interaction,
    LaggedExposureWide, OutcomeWide, Plan,
};
pub use result::{compare_mi_cc, OutcomeRow, OutcomeWideResult, RunMetadata, StandardizedSd};
pub use rules::{
    classify_design_level, select_covariates, CovariateSelection, CovariateTag, DesignFlags,
    DesignLevel, Exclusion, ExclusionReason, DESIGN_CAUTION,
};
pub use run::{
    analysis_designs, run, run_interaction, run_lagged_exposure_wide, run_outcome_wide, RunInput,
};
