//! Synthetic cohorts with known coefficients, for checking the pipeline end to end.

use indexmap::IndexMap;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Column, ColumnKind, Dataset};
use crate::error::Result;
use crate::glm::EffectScale;
use crate::pipeline::{AnalysisSpec, DataSpec, ExposureSpec, Options, OutcomeSpec};
use crate::rng::{domain, stream, StreamRng};

/// Exposure effects on the continuous outcomes y1..y5 (mean differences).
pub const CONTINUOUS_EFFECTS: [f64; 5] = [0.20, 0.10, 0.0, -0.15, 0.30];
/// Log risk ratios for the common binary outcomes b1, b2.
pub const COMMON_LOG_RR: [f64; 2] = [0.405_465_108_108_164_4, -0.223_143_551_314_209_7];
/// Log odds ratio for the rare binary outcome b3.
pub const RARE_LOG_OR: f64 = std::f64::consts::LN_2;
/// Residual correlation among the continuous outcomes.
pub const RESIDUAL_CORRELATION: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub outcome: String,
    pub scale: EffectScale,
    pub value: f64,
}

/// The true exposure coefficient of every synthetic outcome, on the scale
/// the pipeline fits when outcomes are not standardized.
pub fn cohort_truth() -> Vec<Truth> {
    let mut out: Vec<Truth> = CONTINUOUS_EFFECTS
        .iter()
        .enumerate()
        .map(|(i, &v)| Truth {
            outcome: format!("y{}", i + 1),
            scale: EffectScale::MeanDifference,
            value: v,
        })
        .collect();
    for (i, &v) in COMMON_LOG_RR.iter().enumerate() {
        out.push(Truth {
            outcome: format!("b{}", i + 1),
            scale: EffectScale::LogRisk,
            value: v,
        });
    }
    out.push(Truth {
        outcome: "b3".into(),
        scale: EffectScale::LogOdds,
        value: RARE_LOG_OR,
    });
    out
}

fn bernoulli(rng: &mut StreamRng, p: f64) -> f64 {
    f64::from(rng.gen::<f64>() < p)
}

fn expit(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Cohort of `n` people: binary exposure `a`, confounders `c1` (uniform)
/// and `c2` (binary), five correlated continuous outcomes and three binary
/// outcomes (two common with log-linear risks, one rare logistic).
pub fn synthetic_cohort(n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = stream(seed, domain::SIMULATE, 0);
    let rho = RESIDUAL_CORRELATION;
    let mut c1 = Vec::with_capacity(n);
    let mut c2 = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    let mut ys: Vec<Vec<Option<f64>>> = (0..5).map(|_| Vec::with_capacity(n)).collect();
    let mut bs: Vec<Vec<Option<f64>>> = (0..3).map(|_| Vec::with_capacity(n)).collect();
    for _ in 0..n {
        let x1: f64 = rng.gen_range(-1.0..1.0);
        let x2 = bernoulli(&mut rng, 0.5);
        let ai = bernoulli(&mut rng, expit(0.5 * x1 - 0.4 * x2));
        let common: f64 = rng.sample(StandardNormal);
        for (k, y) in ys.iter_mut().enumerate() {
            let e: f64 = rng.sample(StandardNormal);
            let noise = rho.sqrt() * common + (1.0 - rho).sqrt() * e;
            y.push(Some(0.5 + CONTINUOUS_EFFECTS[k] * ai + 0.4 * x1 + 0.3 * x2 + noise));
        }
        for (k, b) in bs.iter_mut().take(2).enumerate() {
            let base = [0.25f64, 0.35][k].ln();
            let p = (base + COMMON_LOG_RR[k] * ai + 0.2 * x1 + 0.1 * x2).exp();
            b.push(Some(bernoulli(&mut rng, p)));
        }
        let p_rare = expit(-3.3 + RARE_LOG_OR * ai + 0.3 * x1 + 0.2 * x2);
        bs[2].push(Some(bernoulli(&mut rng, p_rare)));
        c1.push(Some(x1));
        c2.push(Some(x2));
        a.push(Some(ai));
    }
    let mut cols = vec![
        Column::binary("a", a)?,
        Column::continuous("c1", c1)?,
        Column::binary("c2", c2)?,
    ];
    for (k, y) in ys.into_iter().enumerate() {
        cols.push(Column::continuous(format!("y{}", k + 1), y)?);
    }
    for (k, b) in bs.into_iter().enumerate() {
        cols.push(Column::binary(format!("b{}", k + 1), b)?);
    }
    Dataset::new(cols)
}

/// Spec that analyses [`synthetic_cohort`] outcome-wide.
pub fn synthetic_spec(data_path: Option<&str>, seed: u64) -> AnalysisSpec {
    let mut columns = IndexMap::new();
    columns.insert("a".to_string(), ColumnKind::Binary);
    columns.insert("c1".to_string(), ColumnKind::Continuous);
    columns.insert("c2".to_string(), ColumnKind::Binary);
    let mut outcomes = Vec::new();
    for k in 1..=5 {
        columns.insert(format!("y{k}"), ColumnKind::Continuous);
        outcomes.push(OutcomeSpec::new(format!("y{k}")));
    }
    for k in 1..=3 {
        columns.insert(format!("b{k}"), ColumnKind::Binary);
        outcomes.push(OutcomeSpec::new(format!("b{k}")));
    }
    AnalysisSpec {
        covariates: vec!["c1".into(), "c2".into()],
        data: DataSpec {
            path: data_path.map(str::to_string),
            ..DataSpec::default()
        },
        columns,
        exposure: Some(ExposureSpec {
            column: "a".into(),
            coding: "raw".into(),
            prior_exposure_column: None,
            label: None,
        }),
        outcomes,
        options: Options {
            seed,
            ..Options::default()
        },
        design: None,
        covariate_tags: Vec::new(),
        lagged: None,
    }
}

/// Design (intercept, binary exposure) and `k` outcomes with pairwise
/// residual correlation `rho`; `effects[j]` is added to exposed rows of
/// outcome j (standardized units).
pub fn correlated_outcomes(
    n: usize,
    k: usize,
    rho: f64,
    effects: &[f64],
    rng: &mut StreamRng,
) -> (DMatrix<f64>, Vec<Vec<f64>>) {
    let a: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { a[i] });
    let mut ys = vec![vec![0.0; n]; k];
    for i in 0..n {
        let common: f64 = rng.sample(StandardNormal);
        for (j, y) in ys.iter_mut().enumerate() {
            let e: f64 = rng.sample(StandardNormal);
            let shift = effects.get(j).copied().unwrap_or(0.0) * a[i];
            y[i] = shift + rho.sqrt() * common + (1.0 - rho).sqrt() * e;
        }
    }
    (x, ys)
}

/// Copy of `ds` with each cell of `column` set missing with probability `fraction`.
pub fn inject_mcar(ds: &Dataset, column: &str, fraction: f64, seed: u64) -> Result<Dataset> {
    let mut rng = stream(seed, domain::SIMULATE, 1);
    let col = ds.column(column)?;
    let cells: Vec<Option<f64>> = (0..ds.n_rows())
        .map(|r| if rng.gen::<f64>() < fraction { None } else { col.get(r) })
        .collect();
    let new = match col.kind() {
        ColumnKind::Continuous => Column::continuous(column, cells)?,
        ColumnKind::Binary => Column::binary(column, cells)?,
        ColumnKind::Categorical => Column::categorical_codes(
            column,
            col.levels().to_vec(),
            cells.into_iter().map(|c| c.map(|v| v as usize)).collect(),
        )?,
    };
    ds.with_column(new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::column_prevalence;

    #[test]
    fn cohort_shape_and_prevalences() {
        let ds = synthetic_cohort(2000, 1).unwrap();
        assert_eq!(ds.n_rows(), 2000);
        assert_eq!(ds.n_columns(), 11);
        let p = |c: &str| column_prevalence(ds.column(c).unwrap()).unwrap();
        assert!(p("b1") > 0.10 && p("b2") > 0.10);
        assert!(p("b3") < 0.10);
        synthetic_spec(None, 1).validate().unwrap();
    }
}
