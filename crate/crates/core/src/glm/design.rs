use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{Column, ColumnKind, Dataset};
use crate::error::{Error, Result};

pub const INTERCEPT: &str = "(intercept)";

/// Relative singular-value tolerance for the full-rank check.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// One regressor specification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Term {
    /// A dataset column. Categorical columns expand to reference-coded
    /// indicators; `reference` defaults to the first level.
    Column {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference: Option<String>,
    },
    /// Product of two numeric columns.
    Product { left: String, right: String },
}

impl Term {
    pub fn column(name: impl Into<String>) -> Self {
        Term::Column {
            name: name.into(),
            reference: None,
        }
    }

    pub fn product(left: impl Into<String>, right: impl Into<String>) -> Self {
        Term::Product {
            left: left.into(),
            right: right.into(),
        }
    }

    /// Dataset columns the term reads.
    pub fn sources(&self) -> Vec<&str> {
        match self {
            Term::Column { name, .. } => vec![name.as_str()],
            Term::Product { left, right } => vec![left.as_str(), right.as_str()],
        }
    }
}

pub fn product_name(left: &str, right: &str) -> String {
    format!("{left}:{right}")
}

pub fn contrast_name(column: &str, level: &str, reference: &str) -> String {
    format!("{column}[{level} vs {reference}]")
}

/// Regressor matrix over the complete rows of a dataset.
///
/// Column 0 is the intercept, followed by the exposure block and then the
/// covariate block. Rows with a missing regressor are left out and listed in
/// `incomplete_rows` so the caller can decide what to do with them.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    matrix: DMatrix<f64>,
    column_names: Vec<String>,
    exposure_columns: Vec<usize>,
    rows: Vec<usize>,
    incomplete_rows: Vec<usize>,
}

impl DesignMatrix {
    /// Wraps a raw matrix, checking the intercept column and rank.
    pub fn from_matrix(
        matrix: DMatrix<f64>,
        column_names: Vec<String>,
        exposure_columns: Vec<usize>,
    ) -> Result<Self> {
        if column_names.len() != matrix.ncols() {
            return Err(Error::Validation("column name count mismatch".into()));
        }
        if matrix.column(0).iter().any(|&v| v != 1.0) {
            return Err(Error::Validation("first design column must be all ones".into()));
        }
        check_rank(&matrix, &column_names)?;
        let rows = (0..matrix.nrows()).collect();
        Ok(Self {
            matrix,
            column_names,
            exposure_columns,
            rows,
            incomplete_rows: Vec::new(),
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn exposure_columns(&self) -> &[usize] {
        &self.exposure_columns
    }

    /// Dataset row indices backing each matrix row.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn incomplete_rows(&self) -> &[usize] {
        &self.incomplete_rows
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Columns after the exposure block.
    pub fn covariate_block(&self) -> DMatrix<f64> {
        let start = 1 + self.exposure_columns.len();
        self.matrix.columns(start, self.ncols() - start).into_owned()
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.column_names[1 + self.exposure_columns.len()..]
    }

    /// Response values aligned with the matrix rows; errors if any is missing.
    pub fn response(&self, col: &Column) -> Result<Vec<f64>> {
        self.rows
            .iter()
            .map(|&r| {
                col.get(r).ok_or_else(|| {
                    Error::Validation(format!(
                        "response '{}' missing at row {}; filter rows first",
                        col.name(),
                        r + 1
                    ))
                })
            })
            .collect()
    }
}

struct Expanded {
    name: String,
    values: Vec<f64>,
    missing: Vec<bool>,
}

fn numeric_column<'a>(dataset: &'a Dataset, name: &str) -> Result<&'a Column> {
    let col = dataset.column(name)?;
    if col.kind() == ColumnKind::Categorical {
        return Err(Error::Validation(format!(
            "column '{name}' is categorical and cannot enter a product term"
        )));
    }
    Ok(col)
}

fn expand(dataset: &Dataset, term: &Term) -> Result<Vec<Expanded>> {
    match term {
        Term::Column { name, reference } => {
            let col = dataset.column(name)?;
            if col.kind() != ColumnKind::Categorical {
                return Ok(vec![Expanded {
                    name: name.clone(),
                    values: col.raw_values().to_vec(),
                    missing: col.missing_mask().to_vec(),
                }]);
            }
            let levels = col.levels();
            let ref_idx = match reference {
                None => 0,
                Some(r) => levels.iter().position(|l| l == r).ok_or_else(|| {
                    Error::Validation(format!("reference level '{r}' not found in '{name}'"))
                })?,
            };
            Ok(levels
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != ref_idx)
                .map(|(i, level)| Expanded {
                    name: contrast_name(name, level, &levels[ref_idx]),
                    values: col
                        .raw_values()
                        .iter()
                        .map(|&c| if c as usize == i { 1.0 } else { 0.0 })
                        .collect(),
                    missing: col.missing_mask().to_vec(),
                })
                .collect())
        }
        Term::Product { left, right } => {
            let a = numeric_column(dataset, left)?;
            let b = numeric_column(dataset, right)?;
            Ok(vec![Expanded {
                name: product_name(left, right),
                values: a
                    .raw_values()
                    .iter()
                    .zip(b.raw_values())
                    .map(|(x, y)| x * y)
                    .collect(),
                missing: a
                    .missing_mask()
                    .iter()
                    .zip(b.missing_mask())
                    .map(|(&x, &y)| x || y)
                    .collect(),
            }])
        }
    }
}

/// Assembles intercept, exposure terms and covariate terms into a checked
/// full-rank design over the rows where every regressor is observed.
pub fn build_design_matrix(
    dataset: &Dataset,
    exposure: &[Term],
    covariates: &[Term],
) -> Result<DesignMatrix> {
    let mut blocks = Vec::new();
    let mut n_exposure = 0;
    for term in exposure {
        let e = expand(dataset, term)?;
        n_exposure += e.len();
        blocks.extend(e);
    }
    for term in covariates {
        blocks.extend(expand(dataset, term)?);
    }

    let mut names = vec![INTERCEPT.to_string()];
    for b in &blocks {
        if names.contains(&b.name) {
            return Err(Error::RankDeficient {
                columns: vec![b.name.clone(), b.name.clone()],
            });
        }
        names.push(b.name.clone());
    }

    let n = dataset.n_rows();
    let (rows, incomplete_rows): (Vec<usize>, Vec<usize>) =
        (0..n).partition(|&r| blocks.iter().all(|b| !b.missing[r]));
    let p = names.len();
    if rows.len() <= p {
        return Err(Error::TooFewObservations { n: rows.len(), p });
    }
    let matrix = DMatrix::from_fn(rows.len(), p, |i, j| {
        if j == 0 {
            1.0
        } else {
            blocks[j - 1].values[rows[i]]
        }
    });
    check_rank(&matrix, &names)?;
    Ok(DesignMatrix {
        matrix,
        column_names: names,
        exposure_columns: (1..=n_exposure).collect(),
        rows,
        incomplete_rows,
    })
}

/// Errors with the set of columns involved in any linear dependency.
///
/// Columns are scaled to unit norm first so the check does not depend on the
/// units a covariate happens to be measured in.
pub fn check_rank(matrix: &DMatrix<f64>, names: &[String]) -> Result<()> {
    let mut scaled = matrix.clone();
    let mut zero_cols = Vec::new();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            zero_cols.push(j);
        } else {
            col /= norm;
        }
    }
    if !zero_cols.is_empty() {
        return Err(Error::RankDeficient {
            columns: zero_cols.into_iter().map(|j| names[j].clone()).collect(),
        });
    }
    let svd = scaled.svd(false, true);
    let sv = &svd.singular_values;
    let max = sv.max();
    let v_t = svd.v_t.as_ref().expect("requested v_t");
    let mut involved = vec![false; matrix.ncols()];
    let mut deficient = false;
    for (k, &s) in sv.iter().enumerate() {
        if s <= RANK_TOLERANCE * max {
            deficient = true;
            for (j, &v) in v_t.row(k).iter().enumerate() {
                if v.abs() > 1e-6 {
                    involved[j] = true;
                }
            }
        }
    }
    if deficient {
        return Err(Error::RankDeficient {
            columns: names
                .iter()
                .zip(involved)
                .filter(|(_, inv)| *inv)
                .map(|(n, _)| n.clone())
                .collect(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset() -> Dataset {
        let n = 12;
        let a: Vec<Option<f64>> = (0..n).map(|i| Some((i % 2) as f64)).collect();
        let x: Vec<Option<f64>> = (0..n).map(|i| Some((i * i) as f64 * 0.1)).collect();
        let t: Vec<Option<&str>> = (0..n)
            .map(|i| Some(["bottom", "middle", "top"][i % 3]))
            .collect();
        Dataset::new(vec![
            Column::binary("a", a).unwrap(),
            Column::continuous("x", x.clone()).unwrap(),
            Column::continuous("x_copy", x).unwrap(),
            Column::categorical("t", t),
        ])
        .unwrap()
    }

    #[test]
    fn tertile_contrasts() {
        let d = build_design_matrix(&dataset(), &[Term::column("t")], &[Term::column("x")]).unwrap();
        assert_eq!(
            d.column_names(),
            &[
                INTERCEPT.to_string(),
                "t[middle vs bottom]".into(),
                "t[top vs bottom]".into(),
                "x".into()
            ]
        );
        assert_eq!(d.exposure_columns(), &[1, 2]);
    }

    #[test]
    fn duplicate_covariate_rank_error() {
        let err = build_design_matrix(
            &dataset(),
            &[Term::column("a")],
            &[Term::column("x"), Term::column("x_copy")],
        )
        .unwrap_err();
        match err {
            Error::RankDeficient { columns } => {
                assert_eq!(columns, vec!["x".to_string(), "x_copy".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shape_binary_plus_four() {
        let n = 100;
        let mut cols = vec![Column::binary("a", (0..n).map(|i| Some((i % 2) as f64)).collect()).unwrap()];
        for k in 0..4 {
            cols.push(
                Column::continuous(
                    format!("c{k}"),
                    (0..n).map(|i| Some(((i * (k + 3)) % 17) as f64 + (i as f64).sqrt())).collect(),
                )
                .unwrap(),
            );
        }
        let ds = Dataset::new(cols).unwrap();
        let covs: Vec<Term> = (0..4).map(|k| Term::column(format!("c{k}"))).collect();
        let d = build_design_matrix(&ds, &[Term::column("a")], &covs).unwrap();
        assert_eq!((d.nrows(), d.ncols()), (100, 6));
    }

    #[test]
    fn incomplete_rows_flagged() {
        let ds = Dataset::new(vec![
            Column::continuous("a", vec![Some(1.0), None, Some(3.0), Some(4.0), Some(2.0)]).unwrap(),
        ])
        .unwrap();
        let d = build_design_matrix(&ds, &[Term::column("a")], &[]).unwrap();
        assert_eq!(d.incomplete_rows(), &[1]);
        assert_eq!(d.rows(), &[0, 2, 3, 4]);
    }

    #[test]
    fn reference_level_override() {
        let term = Term::Column {
            name: "t".into(),
            reference: Some("top".into()),
        };
        let d = build_design_matrix(&dataset(), &[term], &[]).unwrap();
        assert_eq!(d.column_names()[1], "t[bottom vs top]");
    }
}
