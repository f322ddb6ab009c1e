//! Column recodings used for reporting: per-sd standardization, tertiles,
//! median splits, and prevalence.
//!
//! Each transform returns the new column together with a [`TransformRecord`]
//! holding the fitted parameters. Records are frozen on the observed data and
//! re-applied unchanged to imputed copies via [`apply_record`].

use serde::{Deserialize, Serialize};

use super::column::{sample_sd, Column, ColumnKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "transform", rename_all = "snake_case")]
pub enum Transform {
    Standardize { mean: f64, sd: f64 },
    Tertile { lower_cut: f64, upper_cut: f64 },
    MedianSplit { median: f64 },
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub source: String,
    #[serde(flatten)]
    pub transform: Transform,
}

pub const TERTILE_LEVELS: [&str; 3] = ["bottom", "middle", "top"];

/// Type-1 quantile (inverse empirical CDF): the smallest order statistic
/// whose empirical CDF is at least `p`. `sorted` must be ascending.
pub fn quantile_type1(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    // Guard against n·p landing a hair above an integer, e.g. 9 · (1/3).
    let k = ((n as f64) * p - 1e-9).ceil().max(1.0) as usize;
    sorted[k.min(n) - 1]
}

pub fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn sorted_observed(col: &Column) -> Vec<f64> {
    let mut v: Vec<f64> = col.observed().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn standardize_column(col: &Column) -> Result<(Column, TransformRecord)> {
    col.expect_kind(ColumnKind::Continuous)?;
    let obs: Vec<f64> = col.observed().collect();
    if obs.is_empty() {
        return Err(Error::Empty(format!("column '{}' has no observed values", col.name())));
    }
    let mean = obs.iter().sum::<f64>() / obs.len() as f64;
    let sd = sample_sd(&obs, mean);
    if !(sd > 0.0) {
        return Err(Error::DegenerateColumn(col.name().to_string()));
    }
    let record = TransformRecord {
        source: col.name().to_string(),
        transform: Transform::Standardize { mean, sd },
    };
    Ok((apply_record(col, &record)?, record))
}

pub fn tertile_code(col: &Column) -> Result<(Column, TransformRecord)> {
    col.expect_kind(ColumnKind::Continuous)?;
    let sorted = sorted_observed(col);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::TooFewDistinct {
            column: col.name().to_string(),
            found: distinct.len(),
            needed: 3,
        });
    }
    let record = TransformRecord {
        source: col.name().to_string(),
        transform: Transform::Tertile {
            lower_cut: quantile_type1(&sorted, 1.0 / 3.0),
            upper_cut: quantile_type1(&sorted, 2.0 / 3.0),
        },
    };
    Ok((apply_record(col, &record)?, record))
}

pub fn median_split(col: &Column) -> Result<(Column, TransformRecord)> {
    col.expect_kind(ColumnKind::Continuous)?;
    let sorted = sorted_observed(col);
    if sorted.is_empty() {
        return Err(Error::Empty(format!("column '{}' has no observed values", col.name())));
    }
    let record = TransformRecord {
        source: col.name().to_string(),
        transform: Transform::MedianSplit {
            median: median(&sorted),
        },
    };
    Ok((apply_record(col, &record)?, record))
}

/// Re-applies previously fitted transform parameters to a column.
pub fn apply_record(col: &Column, record: &TransformRecord) -> Result<Column> {
    match record.transform {
        Transform::None => Ok(col.clone()),
        Transform::Standardize { mean, sd } => {
            col.expect_kind(ColumnKind::Continuous)?;
            Ok(col.map_observed(ColumnKind::Continuous, |x| (x - mean) / sd))
        }
        Transform::Tertile {
            lower_cut,
            upper_cut,
        } => {
            col.expect_kind(ColumnKind::Continuous)?;
            let coded = col.map_observed(ColumnKind::Categorical, |x| {
                if x <= lower_cut {
                    0.0
                } else if x <= upper_cut {
                    1.0
                } else {
                    2.0
                }
            });
            Ok(coded.with_levels(TERTILE_LEVELS.iter().map(|s| s.to_string()).collect()))
        }
        Transform::MedianSplit { median } => {
            col.expect_kind(ColumnKind::Continuous)?;
            Ok(col.map_observed(ColumnKind::Binary, |x| if x > median { 1.0 } else { 0.0 }))
        }
    }
}

/// Inverse of a standardization record.
pub fn unstandardize(col: &Column, record: &TransformRecord) -> Result<Column> {
    match record.transform {
        Transform::Standardize { mean, sd } => {
            Ok(col.map_observed(ColumnKind::Continuous, |z| z * sd + mean))
        }
        _ => Err(Error::Domain(format!(
            "record for '{}' is not a standardization",
            record.source
        ))),
    }
}

/// Mean of the non-missing cells of a binary column.
pub fn column_prevalence(col: &Column) -> Result<f64> {
    col.expect_kind(ColumnKind::Binary)?;
    let n = col.n_observed();
    if n == 0 {
        return Err(Error::Empty(format!("column '{}' has no observed values", col.name())));
    }
    Ok(col.observed().sum::<f64>() / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cont(vals: &[f64]) -> Column {
        Column::continuous("x", vals.iter().map(|&v| Some(v)).collect()).unwrap()
    }

    #[test]
    fn standardize_one_two_three() {
        let (z, rec) = standardize_column(&cont(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(z.raw_values(), &[-1.0, 0.0, 1.0]);
        assert_eq!(rec.transform, Transform::Standardize { mean: 2.0, sd: 1.0 });
    }

    #[test]
    fn standardize_idempotent_in_moments() {
        let (z, _) = standardize_column(&cont(&[0.3, 1.7, -2.2, 5.1, 0.0, 2.4])).unwrap();
        let (zz, rec) = standardize_column(&z).unwrap();
        let Transform::Standardize { mean, sd } = rec.transform else { unreachable!() };
        assert!(mean.abs() < 1e-12 && (sd - 1.0).abs() < 1e-12);
        let s = zz.summary();
        assert!(s.mean.abs() < 1e-12 && (s.sd - 1.0).abs() < 1e-12);
    }

    #[test]
    fn standardize_constant_errors() {
        assert!(matches!(
            standardize_column(&cont(&[4.0, 4.0, 4.0])),
            Err(Error::DegenerateColumn(_))
        ));
    }

    #[test]
    fn standardize_keeps_missing() {
        let c = Column::continuous("x", vec![Some(1.0), None, Some(3.0)]).unwrap();
        let (z, _) = standardize_column(&c).unwrap();
        assert!(z.is_missing(1));
        assert_eq!(z.get(0), Some(-1.0 / 2f64.sqrt()));
    }

    #[test]
    fn tertiles_one_to_nine() {
        let vals: Vec<f64> = (1..=9).map(f64::from).collect();
        let (t, rec) = tertile_code(&cont(&vals)).unwrap();
        assert_eq!(t.raw_values(), &[0., 0., 0., 1., 1., 1., 2., 2., 2.]);
        assert_eq!(t.levels(), &["bottom", "middle", "top"]);
        assert_eq!(
            rec.transform,
            Transform::Tertile {
                lower_cut: 3.0,
                upper_cut: 6.0
            }
        );
    }

    #[test]
    fn tertile_ties_go_low() {
        // type-1 cuts are 2 and 2 here; every 2 stays in the bottom group
        let (t, _) = tertile_code(&cont(&[1.0, 2.0, 2.0, 2.0, 2.0, 3.0])).unwrap();
        assert_eq!(t.raw_values(), &[0., 0., 0., 0., 0., 2.]);
    }

    #[test]
    fn tertile_needs_three_distinct() {
        assert!(matches!(
            tertile_code(&cont(&[5.0; 6])),
            Err(Error::TooFewDistinct { found: 1, .. })
        ));
    }

    #[test]
    fn median_split_even() {
        let (m, rec) = median_split(&cont(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(m.raw_values(), &[0., 0., 1., 1.]);
        assert_eq!(m.kind(), ColumnKind::Binary);
        assert_eq!(rec.transform, Transform::MedianSplit { median: 2.5 });
    }

    #[test]
    fn median_split_symmetric_half() {
        let vals = [-3.0, -1.5, -0.2, 0.2, 1.5, 3.0];
        let (m, _) = median_split(&cont(&vals)).unwrap();
        assert_eq!(m.observed().sum::<f64>(), 3.0);
    }

    #[test]
    fn median_split_strict() {
        let (m, _) = median_split(&cont(&[1.0, 1.0, 1.0, 2.0])).unwrap();
        assert_eq!(m.raw_values(), &[0., 0., 0., 1.]);
    }

    #[test]
    fn prevalence_cases() {
        let c = Column::binary("y", vec![Some(1.0), Some(0.0), Some(0.0), Some(0.0), None]).unwrap();
        assert_eq!(column_prevalence(&c).unwrap(), 0.25);
        let z = Column::binary("y", vec![Some(0.0); 4]).unwrap();
        assert_eq!(column_prevalence(&z).unwrap(), 0.0);
        assert!(column_prevalence(&cont(&[1.0])).is_err());
    }
}
