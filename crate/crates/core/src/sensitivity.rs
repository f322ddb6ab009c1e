//! E-values and the confounding bias bound.
//!
//! The E-value of a risk ratio is the minimum strength of association, on
//! the risk-ratio scale, that an unmeasured confounder would need with both
//! exposure and outcome to fully explain the observed association away.
//! Estimates on other scales are first converted to approximate risk ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{EffectScale, FitResult};

/// Multiplier in the standardized-difference to risk-ratio approximation RR ≈ exp(0.91·d).
pub const SMD_TO_LOG_RR: f64 = 0.91;
/// Multiplier on s_d for the approximate CI limits exp(0.91·d ± 1.78·s_d).
pub const SMD_CI_MULTIPLIER: f64 = 1.78;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectMeasure {
    RiskRatio,
    OddsRatioRare,
    OddsRatioCommon,
    MeanDifferenceStandardized,
}

impl EffectMeasure {
    pub fn as_str(self) -> &'static str {
        match self {
            EffectMeasure::RiskRatio => "risk_ratio",
            EffectMeasure::OddsRatioRare => "odds_ratio_rare",
            EffectMeasure::OddsRatioCommon => "odds_ratio_common",
            EffectMeasure::MeanDifferenceStandardized => "mean_difference_standardized",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub value: f64,
    pub ci: (f64, f64),
    pub scale: EffectMeasure,
    /// Standard error; required for standardized mean differences.
    pub se: Option<f64>,
}

impl EffectEstimate {
    pub fn new(value: f64, lo: f64, hi: f64, scale: EffectMeasure) -> Self {
        Self {
            value,
            ci: (lo, hi),
            scale,
            se: None,
        }
    }

    pub fn with_se(mut self, se: f64) -> Self {
        self.se = Some(se);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EValueReport {
    pub evalue_point: f64,
    pub evalue_ci: f64,
    /// Risk ratio the point E-value was computed from (before inversion).
    pub rr_used: f64,
    pub rr_ci_used: (f64, f64),
    /// Conversion steps applied, in order.
    pub conversion: Vec<String>,
}

/// E-value for a point estimate on the risk-ratio scale. Protective ratios
/// are inverted first.
pub fn evalue_point(rr: f64) -> Result<f64> {
    if !(rr > 0.0) || !rr.is_finite() {
        return Err(Error::Domain(format!("risk ratio must be positive, got {rr}")));
    }
    let r = if rr < 1.0 { 1.0 / rr } else { rr };
    Ok(r + (r * (r - 1.0)).sqrt())
}

/// E-value for a confidence interval: 1 if it contains the null, otherwise
/// the E-value of the limit closest to 1.
pub fn evalue_interval(rr: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(lo > 0.0 && hi > 0.0 && rr > 0.0) {
        return Err(Error::Domain(format!(
            "interval limits must be positive, got ({lo}, {hi})"
        )));
    }
    if lo > hi || rr < lo || rr > hi {
        return Err(Error::InvertedInterval { lo, hi });
    }
    if lo <= 1.0 && 1.0 <= hi {
        Ok(1.0)
    } else if lo > 1.0 {
        evalue_point(lo)
    } else {
        evalue_point(hi)
    }
}

/// Largest RR_obs / RR_true attainable by a confounder whose association with
/// the outcome is at most `rr_uy` and with the exposure at most `rr_au`.
pub fn bias_bound(rr_uy: f64, rr_au: f64) -> Result<f64> {
    if !(rr_uy >= 1.0 && rr_au >= 1.0) {
        return Err(Error::Domain(format!(
            "confounder associations must be >= 1, got ({rr_uy}, {rr_au})"
        )));
    }
    Ok(rr_uy * rr_au / (rr_uy + rr_au - 1.0))
}

/// Converts an estimate to the (approximate) risk-ratio scale.
pub fn convert_to_rr(est: &EffectEstimate) -> Result<EffectEstimate> {
    let (value, ci) = match est.scale {
        EffectMeasure::RiskRatio | EffectMeasure::OddsRatioRare => (est.value, est.ci),
        EffectMeasure::OddsRatioCommon => {
            (est.value.sqrt(), (est.ci.0.sqrt(), est.ci.1.sqrt()))
        }
        EffectMeasure::MeanDifferenceStandardized => {
            let se = est
                .se
                .ok_or(Error::MissingStandardError("mean_difference_standardized"))?;
            let centre = SMD_TO_LOG_RR * est.value;
            (
                centre.exp(),
                (
                    (centre - SMD_CI_MULTIPLIER * se).exp(),
                    (centre + SMD_CI_MULTIPLIER * se).exp(),
                ),
            )
        }
    };
    Ok(EffectEstimate {
        value,
        ci,
        scale: EffectMeasure::RiskRatio,
        se: None,
    })
}

fn conversion_step(scale: EffectMeasure) -> &'static str {
    match scale {
        EffectMeasure::RiskRatio => "risk ratio used directly",
        EffectMeasure::OddsRatioRare => "odds ratio taken as risk ratio (rare outcome)",
        EffectMeasure::OddsRatioCommon => "risk ratio ≈ √OR (common outcome)",
        EffectMeasure::MeanDifferenceStandardized => {
            "risk ratio ≈ exp(0.91·d), CI exp(0.91·d ± 1.78·s_d)"
        }
    }
}

/// Full E-value report for an estimate on any supported scale.
pub fn evalue_for_estimate(est: &EffectEstimate) -> Result<EValueReport> {
    let rr = convert_to_rr(est)?;
    let mut conversion = vec![conversion_step(est.scale).to_string()];
    if rr.value < 1.0 {
        conversion.push("protective: inverted before applying the E-value formula".into());
    }
    Ok(EValueReport {
        evalue_point: evalue_point(rr.value)?,
        evalue_ci: evalue_interval(rr.value, rr.ci.0, rr.ci.1)?,
        rr_used: rr.value,
        rr_ci_used: rr.ci,
        conversion,
    })
}

/// What the E-value needs to know about an outcome beyond its fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeMeta {
    /// Sample prevalence, for binary outcomes.
    pub prevalence: Option<f64>,
    /// Prevalence above which an odds ratio is treated as common.
    pub rare_threshold: f64,
    /// Outcome sd on the scale of the fit; 1 when the outcome was standardized.
    pub outcome_sd: Option<f64>,
}

impl OutcomeMeta {
    pub fn standardized() -> Self {
        Self {
            prevalence: None,
            rare_threshold: 0.10,
            outcome_sd: Some(1.0),
        }
    }

    pub fn binary(prevalence: f64, rare_threshold: f64) -> Self {
        Self {
            prevalence: Some(prevalence),
            rare_threshold,
            outcome_sd: None,
        }
    }
}

/// Maps a fitted coefficient onto an [`EffectEstimate`] for E-value purposes.
pub fn effect_estimate(fit: &FitResult, meta: &OutcomeMeta) -> Result<EffectEstimate> {
    match fit.scale {
        EffectScale::MeanDifference => {
            let sd = meta.outcome_sd.ok_or_else(|| {
                Error::UnsupportedScale(
                    "mean_difference on an unstandardized outcome with unknown sd".into(),
                )
            })?;
            Ok(EffectEstimate {
                value: fit.estimate / sd,
                ci: (fit.ci.0 / sd, fit.ci.1 / sd),
                scale: EffectMeasure::MeanDifferenceStandardized,
                se: Some(fit.se / sd),
            })
        }
        EffectScale::LogRisk => Ok(EffectEstimate::new(
            fit.estimate.exp(),
            fit.ci.0.exp(),
            fit.ci.1.exp(),
            EffectMeasure::RiskRatio,
        )),
        EffectScale::LogOdds => {
            let common = meta
                .prevalence
                .is_some_and(|p| p > meta.rare_threshold);
            let scale = if common {
                EffectMeasure::OddsRatioCommon
            } else {
                EffectMeasure::OddsRatioRare
            };
            Ok(EffectEstimate::new(
                fit.estimate.exp(),
                fit.ci.0.exp(),
                fit.ci.1.exp(),
                scale,
            ))
        }
    }
}

pub fn evalue_report(fit: &FitResult, meta: &OutcomeMeta) -> Result<EValueReport> {
    let est = effect_estimate(fit, meta)?;
    let mut report = evalue_for_estimate(&est)?;
    if matches!(fit.scale, EffectScale::LogOdds | EffectScale::LogRisk) {
        report.conversion.insert(0, "exponentiated log-scale coefficient".into());
    }
    Ok(report)
}

/// Rounds to two decimals for display.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::FamilyKind;

    // Published values are given to two decimals, sometimes truncated.
    fn near(a: f64, published: f64) -> bool {
        (a - published).abs() <= 0.01 + 1e-12
    }

    #[test]
    fn worked_values() {
        for (rr, e) in [(1.3, 1.92), (2.0, 3.41), (1.1, 1.43), (1.5, 2.36), (0.77, 1.92)] {
            assert!(near(evalue_point(rr).unwrap(), e), "rr {rr}");
        }
        assert_eq!(evalue_point(1.0).unwrap(), 1.0);
        assert!(evalue_point(0.0).is_err());
        assert!(evalue_point(-1.0).is_err());
    }

    #[test]
    fn interval_cases() {
        assert!(near(evalue_interval(0.77, 0.69, 0.86).unwrap(), 1.59));
        assert_eq!(evalue_interval(1.0, 0.9, 1.2).unwrap(), 1.0);
        assert!(near(evalue_interval(1.1996, 1.157, 1.244).unwrap(), 1.59));
        assert!(matches!(
            evalue_interval(1.0, 1.2, 0.9),
            Err(Error::InvertedInterval { .. })
        ));
    }

    #[test]
    fn bias_bound_cases() {
        let b = bias_bound(1.92, 1.92).unwrap();
        assert!((b - 1.298).abs() < 1e-3);
        assert_eq!(bias_bound(1.0, 7.5).unwrap(), 1.0);
        assert_eq!(bias_bound(2.0, 3.0).unwrap(), 1.5);
        assert!(bias_bound(0.9, 2.0).is_err());
    }

    #[test]
    fn conversions() {
        let smd = EffectEstimate::new(0.43, 0.3, 0.5, EffectMeasure::MeanDifferenceStandardized)
            .with_se(0.05);
        assert!(near(convert_to_rr(&smd).unwrap().value, 1.47));
        let zero = EffectEstimate::new(0.0, -0.1, 0.1, EffectMeasure::MeanDifferenceStandardized)
            .with_se(0.05);
        assert_eq!(convert_to_rr(&zero).unwrap().value, 1.0);
        let or = EffectEstimate::new(4.0, 2.25, 9.0, EffectMeasure::OddsRatioCommon);
        let rr = convert_to_rr(&or).unwrap();
        assert_eq!((rr.value, rr.ci), (2.0, (1.5, 3.0)));
        let no_se = EffectEstimate::new(0.2, 0.1, 0.3, EffectMeasure::MeanDifferenceStandardized);
        assert!(matches!(convert_to_rr(&no_se), Err(Error::MissingStandardError(_))));
    }

    #[test]
    fn report_from_fits() {
        let se = (0.24 - 0.16) / (2.0 * 1.959_963_984_540_054);
        let mut lin = FitResult::wald("warmth", 0.20, se, 0.95, FamilyKind::Linear);
        lin.ci = (0.16, 0.24);
        let r = evalue_report(&lin, &OutcomeMeta::standardized()).unwrap();
        assert!(near(r.evalue_point, 1.69) && near(r.evalue_ci, 1.59));

        let null = FitResult::wald("warmth", 0.0, 0.1, 0.95, FamilyKind::Linear);
        let r = evalue_report(&null, &OutcomeMeta::standardized()).unwrap();
        assert_eq!((r.evalue_point, r.evalue_ci), (1.0, 1.0));

        let mut pois = FitResult::wald("warmth", 0.99f64.ln(), 0.02, 0.95, FamilyKind::PoissonRobust);
        pois.ci = (0.95f64.ln(), 1.05f64.ln());
        let r = evalue_report(&pois, &OutcomeMeta::binary(0.6, 0.10)).unwrap();
        assert_eq!(r.evalue_ci, 1.0);
        assert!(r.evalue_ci <= r.evalue_point);

        let unstd = OutcomeMeta {
            prevalence: None,
            rare_threshold: 0.1,
            outcome_sd: None,
        };
        assert!(matches!(
            evalue_report(&lin, &unstd),
            Err(Error::UnsupportedScale(_))
        ));
    }

    #[test]
    fn logistic_rare_vs_common() {
        let fit = FitResult::wald("a", 4f64.ln(), 0.1, 0.95, FamilyKind::Logistic);
        let rare = evalue_report(&fit, &OutcomeMeta::binary(0.05, 0.10)).unwrap();
        let common = evalue_report(&fit, &OutcomeMeta::binary(0.30, 0.10)).unwrap();
        assert!((rare.rr_used - 4.0).abs() < 1e-12);
        assert!((common.rr_used - 2.0).abs() < 1e-12);
    }
}
