use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Binary,
    Categorical,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Continuous => "continuous",
            ColumnKind::Binary => "binary",
            ColumnKind::Categorical => "categorical",
        }
    }
}

/// Descriptive statistics over the non-missing cells of a column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub n_observed: usize,
    pub mean: f64,
    pub sd: f64,
    /// Share of ones, for binary columns.
    pub prevalence: Option<f64>,
    /// (level, count) pairs, for categorical columns.
    pub levels: Option<Vec<(String, usize)>>,
}

/// One typed column with an explicit missingness mask.
///
/// Numeric payloads live in `values`; categorical columns store level codes
/// there, indexing into `levels`. Missing cells hold `0.0` and are flagged in
/// `missing`; the placeholder is never read as data.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    name: String,
    kind: ColumnKind,
    values: Vec<f64>,
    missing: Vec<bool>,
    levels: Vec<String>,
}

impl Column {
    pub fn continuous(name: impl Into<String>, cells: Vec<Option<f64>>) -> Result<Self> {
        let name = name.into();
        for (row, v) in cells.iter().enumerate() {
            if let Some(x) = v {
                if !x.is_finite() {
                    return Err(Error::Ingestion {
                        row: row + 1,
                        column: name,
                        message: format!("non-finite value {x}"),
                    });
                }
            }
        }
        let missing = cells.iter().map(Option::is_none).collect();
        let values = cells.into_iter().map(|v| v.unwrap_or(0.0)).collect();
        Ok(Self {
            name,
            kind: ColumnKind::Continuous,
            values,
            missing,
            levels: Vec::new(),
        })
    }

    pub fn binary(name: impl Into<String>, cells: Vec<Option<f64>>) -> Result<Self> {
        let name = name.into();
        for (row, v) in cells.iter().enumerate() {
            if let Some(x) = v {
                if *x != 0.0 && *x != 1.0 {
                    return Err(Error::Ingestion {
                        row: row + 1,
                        column: name,
                        message: format!("binary column holds {x}, expected 0 or 1"),
                    });
                }
            }
        }
        let missing = cells.iter().map(Option::is_none).collect();
        let values = cells.into_iter().map(|v| v.unwrap_or(0.0)).collect();
        Ok(Self {
            name,
            kind: ColumnKind::Binary,
            values,
            missing,
            levels: Vec::new(),
        })
    }

    /// Builds a categorical column; levels are recorded in first-seen order.
    pub fn categorical<S: AsRef<str>>(name: impl Into<String>, cells: Vec<Option<S>>) -> Self {
        let mut levels: Vec<String> = Vec::new();
        let mut values = Vec::with_capacity(cells.len());
        let mut missing = Vec::with_capacity(cells.len());
        for cell in &cells {
            match cell {
                Some(s) => {
                    let s = s.as_ref();
                    let code = match levels.iter().position(|l| l == s) {
                        Some(i) => i,
                        None => {
                            levels.push(s.to_string());
                            levels.len() - 1
                        }
                    };
                    values.push(code as f64);
                    missing.push(false);
                }
                None => {
                    values.push(0.0);
                    missing.push(true);
                }
            }
        }
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical,
            values,
            missing,
            levels,
        }
    }

    /// Categorical column from explicit codes and a fixed level list.
    pub fn categorical_codes(
        name: impl Into<String>,
        levels: Vec<String>,
        codes: Vec<Option<usize>>,
    ) -> Result<Self> {
        let name = name.into();
        if let Some(bad) = codes.iter().flatten().find(|&&c| c >= levels.len()) {
            return Err(Error::Domain(format!(
                "level code {bad} out of range for column '{name}'"
            )));
        }
        let missing = codes.iter().map(Option::is_none).collect();
        let values = codes.into_iter().map(|c| c.unwrap_or(0) as f64).collect();
        Ok(Self {
            name,
            kind: ColumnKind::Categorical,
            values,
            missing,
            levels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ColumnKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn missing_mask(&self) -> &[bool] {
        &self.missing
    }

    /// Raw payload including placeholders at missing cells.
    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_missing(&self, row: usize) -> bool {
        self.missing[row]
    }

    pub fn get(&self, row: usize) -> Option<f64> {
        (!self.missing[row]).then(|| self.values[row])
    }

    /// Level label at a row, for categorical columns.
    pub fn level_at(&self, row: usize) -> Option<&str> {
        if self.kind != ColumnKind::Categorical {
            return None;
        }
        self.get(row).map(|c| self.levels[c as usize].as_str())
    }

    pub fn observed(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.missing)
            .filter(|(_, &m)| !m)
            .map(|(&v, _)| v)
    }

    pub fn n_missing(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    pub fn n_observed(&self) -> usize {
        self.len() - self.n_missing()
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().any(|&m| m)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Copy with every missing cell filled from `fill(row)`.
    pub(crate) fn filled(&self, mut fill: impl FnMut(usize) -> f64) -> Column {
        let mut out = self.clone();
        for row in 0..out.len() {
            if out.missing[row] {
                out.values[row] = fill(row);
                out.missing[row] = false;
            }
        }
        out
    }

    /// Overwrites one cell (used by imputation, which keeps the schema fixed).
    pub(crate) fn set(&mut self, row: usize, value: f64) {
        self.values[row] = value;
        self.missing[row] = false;
    }

    /// Same kind and levels, values mapped over the observed cells.
    pub(crate) fn map_observed(&self, kind: ColumnKind, f: impl Fn(f64) -> f64) -> Column {
        Column {
            name: self.name.clone(),
            kind,
            values: self
                .values
                .iter()
                .zip(&self.missing)
                .map(|(&v, &m)| if m { 0.0 } else { f(v) })
                .collect(),
            missing: self.missing.clone(),
            levels: if kind == ColumnKind::Categorical {
                self.levels.clone()
            } else {
                Vec::new()
            },
        }
    }

    pub(crate) fn with_levels(mut self, levels: Vec<String>) -> Column {
        self.levels = levels;
        self
    }

    pub fn select_rows(&self, rows: &[usize]) -> Column {
        Column {
            name: self.name.clone(),
            kind: self.kind,
            values: rows.iter().map(|&r| self.values[r]).collect(),
            missing: rows.iter().map(|&r| self.missing[r]).collect(),
            levels: self.levels.clone(),
        }
    }

    pub fn summary(&self) -> ColumnSummary {
        let obs: Vec<f64> = self.observed().collect();
        let n = obs.len();
        let mean = if n > 0 {
            obs.iter().sum::<f64>() / n as f64
        } else {
            f64::NAN
        };
        let sd = sample_sd(&obs, mean);
        let prevalence = (self.kind == ColumnKind::Binary && n > 0).then_some(mean);
        let levels = (self.kind == ColumnKind::Categorical).then(|| {
            let mut counts = vec![0usize; self.levels.len()];
            for v in &obs {
                counts[*v as usize] += 1;
            }
            self.levels.iter().cloned().zip(counts).collect()
        });
        ColumnSummary {
            n_observed: n,
            mean,
            sd,
            prevalence,
            levels,
        }
    }

    pub(crate) fn expect_kind(&self, expected: ColumnKind) -> Result<()> {
        if self.kind == expected {
            Ok(())
        } else {
            Err(Error::WrongKind {
                column: self.name.clone(),
                expected: expected.as_str(),
                actual: self.kind.as_str(),
            })
        }
    }
}

/// Sample standard deviation with the n - 1 denominator; 0 for n < 2.
pub(crate) fn sample_sd(values: &[f64], mean: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}
