//! Covariate selection and design classification rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What is known about one candidate covariate. Every flag is explicit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariateTag {
    pub name: String,
    pub cause_of_exposure: bool,
    pub cause_of_any_outcome: bool,
    pub known_instrument: bool,
    pub proxy_for_unmeasured_common_cause: bool,
    pub temporally_prior_to_exposure: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    InstrumentalVariable,
    PotentialMediator,
    CauseOfNeither,
}

impl ExclusionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::InstrumentalVariable => "instrumental variable",
            ExclusionReason::PotentialMediator => "potential mediator",
            ExclusionReason::CauseOfNeither => "cause of neither",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub name: String,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CovariateSelection {
    pub included: Vec<String>,
    pub excluded: Vec<Exclusion>,
}

/// Modified disjunctive cause criterion: keep causes of the exposure or of
/// any outcome and proxies of unmeasured common causes, drop known
/// instruments, and drop anything not measured before the exposure.
pub fn select_covariates(tags: &[CovariateTag]) -> CovariateSelection {
    let mut sel = CovariateSelection::default();
    for t in tags {
        let reason = if !t.temporally_prior_to_exposure {
            Some(ExclusionReason::PotentialMediator)
        } else if t.known_instrument {
            Some(ExclusionReason::InstrumentalVariable)
        } else if !(t.cause_of_exposure || t.cause_of_any_outcome || t.proxy_for_unmeasured_common_cause) {
            Some(ExclusionReason::CauseOfNeither)
        } else {
            None
        };
        match reason {
            None => sel.included.push(t.name.clone()),
            Some(reason) => sel.excluded.push(Exclusion {
                name: t.name.clone(),
                reason,
            }),
        }
    }
    sel
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignFlags {
    pub longitudinal: bool,
    pub baseline_covariates: bool,
    pub baseline_outcome_controlled: bool,
    pub prior_exposure_controlled: bool,
    pub randomized: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignLevel {
    pub level: u8,
    pub label: String,
    pub caution: Option<String>,
}

pub const DESIGN_CAUTION: &str = "evidence below level 3: without control for the baseline \
    outcome, reverse causation remains a serious concern; at least level 3 is needed for \
    reasonable evidence about causal effects";

fn level_label(level: u8) -> &'static str {
    match level {
        1 => "cross-sectional",
        2 => "longitudinal with baseline covariates",
        3 => "longitudinal with baseline covariates and baseline outcome",
        4 => "longitudinal with baseline covariates, baseline outcome and prior exposure",
        _ => "randomized trial of the exposure",
    }
}

/// Position of a design in the five-level evidence hierarchy.
pub fn classify_design_level(flags: &DesignFlags) -> Result<DesignLevel> {
    if !flags.longitudinal && !flags.randomized {
        if flags.baseline_outcome_controlled {
            return Err(Error::InconsistentDesign(
                "baseline outcome control requires a longitudinal design".into(),
            ));
        }
        if flags.prior_exposure_controlled {
            return Err(Error::InconsistentDesign(
                "prior exposure control requires a longitudinal design".into(),
            ));
        }
    }
    let level = if flags.randomized {
        5
    } else if !(flags.longitudinal && flags.baseline_covariates) {
        1
    } else if !flags.baseline_outcome_controlled {
        2
    } else if !flags.prior_exposure_controlled {
        3
    } else {
        4
    };
    Ok(DesignLevel {
        level,
        label: level_label(level).into(),
        caution: (level < 3).then(|| DESIGN_CAUTION.to_string()),
    })
}
