use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{critical_value, two_sided_p, EffectScale, FamilyKind, FitResult};

/// Rubin's-rules combination of one coefficient over M imputations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledResult {
    pub term: String,
    pub m: usize,
    pub estimate: f64,
    pub within_var: f64,
    pub between_var: f64,
    pub total_var: f64,
    pub se: f64,
    pub ci: (f64, f64),
    pub ci_level: f64,
    pub z: f64,
    pub p_value: f64,
    pub scale: EffectScale,
    pub family: FamilyKind,
    pub n_used: usize,
}

impl PooledResult {
    /// The pooled inference viewed as a single fit, for code that consumes [`FitResult`].
    pub fn as_fit_result(&self, converged: bool) -> FitResult {
        FitResult {
            term: self.term.clone(),
            estimate: self.estimate,
            se: self.se,
            ci: self.ci,
            ci_level: self.ci_level,
            z: self.z,
            p_value: self.p_value,
            scale: self.scale,
            family: self.family,
            n_used: self.n_used,
            converged,
            iterations: 0,
        }
    }
}

/// Mean computed as ref + Σ(x − ref)/n over sorted values, so the result
/// does not depend on input order and equals the common value for copies.
fn stable_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let r = values[0];
    r + values.iter().map(|v| v - r).sum::<f64>() / values.len() as f64
}

pub fn pool_rubin(results: &[FitResult]) -> Result<PooledResult> {
    let m = results.len();
    if m < 2 {
        return Err(Error::Domain(format!(
            "pooling needs at least 2 imputations, got {m}"
        )));
    }
    let first = &results[0];
    if results
        .iter()
        .any(|r| r.family != first.family || r.scale != first.scale || r.ci_level != first.ci_level)
    {
        return Err(Error::MixedScales);
    }
    let mut estimates: Vec<f64> = results.iter().map(|r| r.estimate).collect();
    let mut variances: Vec<f64> = results.iter().map(|r| r.se * r.se).collect();
    let qbar = stable_mean(&mut estimates);
    let w = stable_mean(&mut variances);
    let b = estimates.iter().map(|q| (q - qbar) * (q - qbar)).sum::<f64>() / (m - 1) as f64;
    let t = w + (1.0 + 1.0 / m as f64) * b;
    let se = t.sqrt();
    let crit = critical_value(first.ci_level);
    let z = qbar / se;
    Ok(PooledResult {
        term: first.term.clone(),
        m,
        estimate: qbar,
        within_var: w,
        between_var: b,
        total_var: t,
        se,
        ci: (qbar - crit * se, qbar + crit * se),
        ci_level: first.ci_level,
        z,
        p_value: two_sided_p(z),
        scale: first.scale,
        family: first.family,
        n_used: results.iter().map(|r| r.n_used).min().unwrap_or(0),
    })
}
