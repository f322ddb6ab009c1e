use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multiplicity summary over one family of K tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityReport {
    pub alpha: f64,
    pub k: usize,
    pub labels: Vec<String>,
    pub raw_p: Vec<f64>,
    pub bonferroni_threshold: f64,
    pub holm_adjusted: Vec<f64>,
    pub rw_adjusted: Option<Vec<f64>>,
    /// Labels of the tests entering the Romano–Wolf family (continuous outcomes).
    pub rw_labels: Option<Vec<String>>,
    pub rejected_nominal: usize,
    pub rejected_bonferroni: usize,
    pub rejected_holm: usize,
    pub rejected_rw: Option<usize>,
}

impl MultiplicityReport {
    pub fn bonferroni_rejects(&self, i: usize) -> bool {
        self.raw_p[i] < self.bonferroni_threshold
    }

    /// Attaches Romano–Wolf adjusted p-values for a subset of the tests.
    pub fn with_romano_wolf(mut self, labels: Vec<String>, adjusted: Vec<f64>) -> Self {
        self.rejected_rw = Some(adjusted.iter().filter(|&&p| p < self.alpha).count());
        self.rw_labels = Some(labels);
        self.rw_adjusted = Some(adjusted);
        self
    }
}

fn check_p(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::Empty("p-value sequence".into()));
    }
    if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Domain(format!("p-value {bad} outside [0, 1]")));
    }
    Ok(())
}

/// Holm stepdown adjusted p-values, in input order.
pub fn holm(p: &[f64]) -> Result<Vec<f64>> {
    check_p(p)?;
    let k = p.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; k];
    let mut running = 0.0f64;
    for (rank, &i) in order.iter().enumerate() {
        running = running.max(((k - rank) as f64 * p[i]).min(1.0));
        adjusted[i] = running;
    }
    Ok(adjusted)
}

pub fn adjust_bonferroni_holm(labels: &[String], p: &[f64], alpha: f64) -> Result<MultiplicityReport> {
    check_p(p)?;
    if labels.len() != p.len() {
        return Err(Error::Domain("labels and p-values differ in length".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let k = p.len();
    let threshold = alpha / k as f64;
    let holm_adjusted = holm(p)?;
    Ok(MultiplicityReport {
        alpha,
        k,
        labels: labels.to_vec(),
        raw_p: p.to_vec(),
        bonferroni_threshold: threshold,
        rejected_nominal: p.iter().filter(|&&x| x < alpha).count(),
        rejected_bonferroni: p.iter().filter(|&&x| x < threshold).count(),
        rejected_holm: holm_adjusted.iter().filter(|&&x| x < alpha).count(),
        holm_adjusted,
        rw_adjusted: None,
        rw_labels: None,
        rejected_rw: None,
    })
}
