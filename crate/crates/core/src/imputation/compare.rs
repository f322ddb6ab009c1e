use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::FitResult;

/// Advice attached to a discrepancy report that flags any outcome.
pub const DISCREPANCY_ADVICE: &str = "complete-case and imputed estimates disagree; \
    the missing-data mechanism may matter, so analyse the flagged outcomes individually \
    rather than relying on the automated outcome-wide table";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub outcome: String,
    pub mi_estimate: f64,
    pub cc_estimate: f64,
    pub abs_difference: f64,
    /// |cc − mi| / |mi|; absent when the imputed estimate is zero.
    pub rel_difference: Option<f64>,
    pub mi_ci: (f64, f64),
    pub cc_ci: (f64, f64),
    pub cc_n: usize,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub rows: Vec<Discrepancy>,
    pub any_flagged: bool,
    pub recommendation: Option<String>,
}

/// Compares imputed and complete-case estimates outcome by outcome; an
/// outcome is flagged when the two confidence intervals do not overlap.
pub fn compare_estimates(mi: &[(String, FitResult)], cc: &[(String, FitResult)]) -> Result<DiscrepancyReport> {
    let names = |v: &[(String, FitResult)]| v.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
    if names(mi) != names(cc) {
        return Err(Error::OutcomeMismatch(format!(
            "imputed [{}] vs complete-case [{}]",
            names(mi).join(", "),
            names(cc).join(", ")
        )));
    }
    let rows: Vec<Discrepancy> = mi
        .iter()
        .zip(cc)
        .map(|((name, m), (_, c))| {
            let diff = (c.estimate - m.estimate).abs();
            Discrepancy {
                outcome: name.clone(),
                mi_estimate: m.estimate,
                cc_estimate: c.estimate,
                abs_difference: diff,
                rel_difference: (m.estimate != 0.0).then(|| diff / m.estimate.abs()),
                mi_ci: m.ci,
                cc_ci: c.ci,
                cc_n: c.n_used,
                flagged: m.ci.1 < c.ci.0 || c.ci.1 < m.ci.0,
            }
        })
        .collect();
    let any_flagged = rows.iter().any(|r| r.flagged);
    Ok(DiscrepancyReport {
        rows,
        any_flagged,
        recommendation: any_flagged.then(|| DISCREPANCY_ADVICE.to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::FamilyKind;

    fn fit(est: f64, se: f64) -> FitResult {
        FitResult::wald("a", est, se, 0.95, FamilyKind::Linear)
    }

    #[test]
    fn identical_and_close() {
        let mi = vec![("flourishing".to_string(), fit(0.20, 0.02))];
        let r = compare_estimates(&mi, &mi).unwrap();
        assert_eq!(r.rows[0].abs_difference, 0.0);
        assert!(!r.any_flagged);
        let cc = vec![("flourishing".to_string(), fit(0.21, 0.02))];
        let r = compare_estimates(&mi, &cc).unwrap();
        assert!((r.rows[0].abs_difference - 0.01).abs() < 1e-12);
        assert!(!r.any_flagged && r.recommendation.is_none());
    }

    #[test]
    fn disjoint_flagged_and_mismatch() {
        let mi = vec![("y".to_string(), fit(0.2, 0.02))];
        let cc = vec![("y".to_string(), fit(0.5, 0.02))];
        let r = compare_estimates(&mi, &cc).unwrap();
        assert!(r.rows[0].flagged && r.recommendation.is_some());
        let other = vec![("z".to_string(), fit(0.5, 0.02))];
        assert!(matches!(compare_estimates(&mi, &other), Err(Error::OutcomeMismatch(_))));
    }
}
