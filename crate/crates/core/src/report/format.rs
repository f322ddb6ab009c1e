use crate::glm::{EffectScale, FitResult};

/// Significance markers: `***` below the Bonferroni threshold α/K, `**`
/// below 0.01, `*` below α.
pub fn stars(p: f64, alpha: f64, k: usize) -> &'static str {
    if p < alpha / k as f64 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < alpha {
        "*"
    } else {
        ""
    }
}

pub fn format_p(p: f64) -> String {
    if p < 0.0001 {
        "<0.0001".into()
    } else if p < 0.001 {
        format!("{p:.4}")
    } else {
        format!("{p:.3}")
    }
}

pub fn format_ci(lo: f64, hi: f64) -> String {
    format!("[{lo:.2}, {hi:.2}]")
}

/// Estimate and interval on the reporting scale: mean differences as is,
/// log-scale coefficients exponentiated.
pub fn natural(fit: &FitResult) -> (f64, (f64, f64)) {
    fit.natural_scale()
}

pub fn effect_cell(fit: &FitResult) -> String {
    let (est, (lo, hi)) = natural(fit);
    format!("{est:.2} {}", format_ci(lo, hi))
}

pub fn p_cell(p: f64, alpha: f64, k: usize) -> String {
    format!("{}{}", format_p(p), stars(p, alpha, k))
}

/// "0.77 [0.69, 0.86] <0.0001***"
pub fn effect_with_p(fit: &FitResult, alpha: f64, k: usize) -> String {
    format!("{} {}", effect_cell(fit), p_cell(fit.p_value, alpha, k))
}

pub fn scale_label(scale: EffectScale) -> &'static str {
    match scale {
        EffectScale::MeanDifference => "B",
        EffectScale::LogOdds => "OR",
        EffectScale::LogRisk => "RR",
    }
}

pub fn round2(x: f64) -> String {
    format!("{x:.2}")
}
