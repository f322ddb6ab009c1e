use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Upper quantile of the standard normal: z with P(Z > z) = `tail`.
pub fn normal_upper_quantile(tail: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(1.0 - tail)
}

/// Two-sided normal-reference p-value for a z statistic.
pub fn two_sided_p(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    libm::erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

/// Critical value for a two-sided interval at `level` (e.g. 0.95 → 1.96).
pub fn critical_value(level: f64) -> f64 {
    normal_upper_quantile((1.0 - level) / 2.0)
}

/// Smallest absolute estimate whose two-sided Wald p-value is below `alpha`.
pub fn min_detectable_estimate(se: f64, alpha: f64) -> Result<f64> {
    if !(se > 0.0) || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "need se > 0 and alpha in (0, 1); got se = {se}, alpha = {alpha}"
        )));
    }
    Ok(normal_upper_quantile(alpha / 2.0) * se)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectScale {
    MeanDifference,
    LogOdds,
    LogRisk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Linear,
    Logistic,
    PoissonRobust,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Linear => "linear",
            FamilyKind::Logistic => "logistic",
            FamilyKind::PoissonRobust => "poisson_robust",
        }
    }

    pub fn scale(self) -> EffectScale {
        match self {
            FamilyKind::Linear => EffectScale::MeanDifference,
            FamilyKind::Logistic => EffectScale::LogOdds,
            FamilyKind::PoissonRobust => EffectScale::LogRisk,
        }
    }
}

/// Wald inference for one regression coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub term: String,
    pub estimate: f64,
    pub se: f64,
    pub ci: (f64, f64),
    pub ci_level: f64,
    pub z: f64,
    pub p_value: f64,
    pub scale: EffectScale,
    pub family: FamilyKind,
    pub n_used: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    /// Builds the Wald summary (normal reference) for an estimate and its se.
    pub fn wald(
        term: impl Into<String>,
        estimate: f64,
        se: f64,
        ci_level: f64,
        family: FamilyKind,
    ) -> Self {
        let crit = critical_value(ci_level);
        let z = estimate / se;
        Self {
            term: term.into(),
            estimate,
            se,
            ci: (estimate - crit * se, estimate + crit * se),
            ci_level,
            z,
            p_value: two_sided_p(z),
            scale: family.scale(),
            family,
            n_used: 0,
            converged: true,
            iterations: 0,
        }
    }

    /// Estimate and interval on the ratio scale for log-link fits; unchanged otherwise.
    pub fn natural_scale(&self) -> (f64, (f64, f64)) {
        match self.scale {
            EffectScale::MeanDifference => (self.estimate, self.ci),
            EffectScale::LogOdds | EffectScale::LogRisk => (
                self.estimate.exp(),
                (self.ci.0.exp(), self.ci.1.exp()),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_values() {
        assert!((critical_value(0.95) - 1.959_963_984_540_054).abs() < 1e-9);
        assert!((two_sided_p(1.959_963_984_540_054) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn mde_reported_values() {
        let r3 = |x: f64| (x * 1000.0).round() / 1000.0;
        assert_eq!(r3(min_detectable_estimate(0.031, 0.05).unwrap()), 0.061);
        assert_eq!(r3(min_detectable_estimate(0.031, 0.05 / 24.0).unwrap()), 0.095);
        assert_eq!(r3(min_detectable_estimate(0.0194, 0.05).unwrap()), 0.038);
        assert_eq!(r3(min_detectable_estimate(0.0194, 0.05 / 24.0).unwrap()), 0.060);
        assert!(min_detectable_estimate(0.0, 0.05).is_err());
    }

    #[test]
    fn wald_consistency() {
        let r = FitResult::wald("a", 0.3, 0.1, 0.95, FamilyKind::Linear);
        assert!(r.ci.0 <= r.estimate && r.estimate <= r.ci.1);
        assert!((r.p_value - two_sided_p(3.0)).abs() < 1e-15);
    }
}
