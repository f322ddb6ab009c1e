use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{load_table, Column, ColumnKind, Dataset, LoadOptions, Schema};
use crate::error::{Error, Result};
use crate::glm::{irls, FitOptions, Link};
use crate::rng::{domain, stream, StreamRng};

/// Columns with missing cells need at least this many observed values.
pub const MIN_OBSERVED: usize = 20;
/// Missing fraction above which a warning is attached to the imputed set.
pub const WARN_MISSING_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImputeOptions {
    pub m: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Ridge penalty per observed row on the standardized predictors of
    /// each conditional model; keeps collinear or separated predictors from
    /// breaking the chain.
    pub ridge: f64,
}

impl Default for ImputeOptions {
    fn default() -> Self {
        Self {
            m: 20,
            iterations: 10,
            seed: 0,
            ridge: 1e-4,
        }
    }
}

impl ImputeOptions {
    pub fn new(m: usize, iterations: usize, seed: u64) -> Self {
        Self {
            m,
            iterations,
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    Internal {
        m: usize,
        iterations: usize,
        seed: u64,
        ridge: f64,
    },
    External {
        files: Vec<String>,
    },
}

/// M completed copies of a dataset.
#[derive(Debug, Clone)]
pub struct ImputedSet {
    datasets: Vec<Dataset>,
    provenance: Provenance,
    warnings: Vec<String>,
}

impl ImputedSet {
    pub fn m(&self) -> usize {
        self.datasets.len()
    }

    pub fn datasets(&self) -> &[Dataset] {
        &self.datasets
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

fn missingness_warnings(ds: &Dataset) -> Vec<String> {
    let n = ds.n_rows().max(1) as f64;
    ds.columns()
        .filter_map(|c| {
            let frac = c.n_missing() as f64 / n;
            (frac > WARN_MISSING_FRACTION).then(|| {
                format!(
                    "column '{}' is {:.1}% missing; with considerably more than 10% missing, \
                     compare complete-case and imputed estimates before relying on the results",
                    c.name(),
                    100.0 * frac
                )
            })
        })
        .collect()
}

/// Chained-equations multiple imputation.
///
/// Continuous columns are drawn from a normal linear model, binary columns
/// from a logistic model and categorical columns from one-vs-rest logistic
/// models, each with coefficients drawn from their approximate posterior.
/// Every other column of the dataset serves as a predictor.
pub fn impute_chained(ds: &Dataset, opts: &ImputeOptions) -> Result<ImputedSet> {
    if opts.m == 0 {
        return Err(Error::Domain("number of imputations must be at least 1".into()));
    }
    if opts.iterations == 0 {
        return Err(Error::Domain("number of iterations must be at least 1".into()));
    }
    let targets: Vec<usize> = ds
        .columns()
        .enumerate()
        .filter(|(_, c)| c.has_missing())
        .map(|(i, _)| i)
        .collect();
    for c in ds.columns().filter(|c| c.has_missing()) {
        if c.n_observed() < MIN_OBSERVED {
            return Err(Error::TooFewObserved {
                column: c.name().to_string(),
                observed: c.n_observed(),
                needed: MIN_OBSERVED,
            });
        }
    }
    let warnings = missingness_warnings(ds);
    for w in &warnings {
        log::warn!("{w}");
    }
    let provenance = Provenance::Internal {
        m: opts.m,
        iterations: opts.iterations,
        seed: opts.seed,
        ridge: opts.ridge,
    };
    if targets.is_empty() {
        return Ok(ImputedSet {
            datasets: vec![ds.clone(); opts.m],
            provenance,
            warnings,
        });
    }
    let chains: Vec<Result<Dataset>> = (0..opts.m)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(opts.seed, domain::IMPUTE, k as u64);
            run_chain(ds, &targets, opts, &mut rng)
        })
        .collect();
    Ok(ImputedSet {
        datasets: chains.into_iter().collect::<Result<_>>()?,
        provenance,
        warnings,
    })
}

fn run_chain(ds: &Dataset, targets: &[usize], opts: &ImputeOptions, rng: &mut StreamRng) -> Result<Dataset> {
    let original: Vec<&Column> = ds.columns().collect();
    let mut cols: Vec<Column> = original.iter().map(|c| (*c).clone()).collect();
    for &j in targets {
        let obs: Vec<f64> = cols[j].observed().collect();
        cols[j] = cols[j].filled(|_| obs[rng.gen_range(0..obs.len())]);
    }
    for _ in 0..opts.iterations {
        for &j in targets {
            impute_column(&mut cols, j, original[j].missing_mask(), opts.ridge, rng)?;
        }
    }
    Dataset::new(cols)
}

/// Intercept plus every other column, standardized; categorical columns
/// expand to indicators for all but the first level.
fn predictor_matrix(cols: &[Column], target: usize) -> DMatrix<f64> {
    let n = cols[target].len();
    let mut features: Vec<Vec<f64>> = Vec::new();
    for (i, c) in cols.iter().enumerate() {
        if i == target {
            continue;
        }
        let v = c.raw_values();
        match c.kind() {
            ColumnKind::Categorical => {
                for level in 1..c.levels().len() {
                    features.push(v.iter().map(|&x| f64::from(x as usize == level)).collect());
                }
            }
            _ => features.push(v.to_vec()),
        }
    }
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(features.len());
    for mut f in features {
        let mean = f.iter().sum::<f64>() / n as f64;
        let sd = (f.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64).sqrt();
        if sd > 1e-12 {
            f.iter_mut().for_each(|x| *x = (*x - mean) / sd);
            kept.push(f);
        }
    }
    DMatrix::from_fn(n, kept.len() + 1, |r, c| if c == 0 { 1.0 } else { kept[c - 1][r] })
}

fn rows_of(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |r, c| x[(rows[r], c)])
}

fn normal_vector(p: usize, rng: &mut StreamRng) -> DVector<f64> {
    DVector::from_fn(p, |_, _| rng.sample(StandardNormal))
}

/// β̂ + L⁻ᵀz for precision matrix LLᵀ, i.e. a draw from N(β̂, precision⁻¹·scale²).
fn perturb(beta: &DVector<f64>, precision: DMatrix<f64>, scale: f64, rng: &mut StreamRng) -> Result<DVector<f64>> {
    let chol = precision.cholesky().ok_or(Error::Singular("imputation model"))?;
    let z = normal_vector(beta.len(), rng);
    let shift = chol
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or(Error::Singular("imputation model"))?;
    Ok(beta + shift * scale)
}

fn expit(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

/// Posterior-perturbed logistic probabilities for `x_mis`, or the constant
/// observed rate when the observed response does not vary.
fn logistic_draw(
    x_obs: &DMatrix<f64>,
    y_obs: &[f64],
    x_mis: &DMatrix<f64>,
    ridge: f64,
    rng: &mut StreamRng,
) -> Result<Vec<f64>> {
    let rate = y_obs.iter().sum::<f64>() / y_obs.len() as f64;
    if rate == 0.0 || rate == 1.0 {
        return Ok(vec![rate; x_mis.nrows()]);
    }
    let opts = FitOptions {
        max_iterations: 50,
        score_tolerance: 1e-6,
        ..FitOptions::default()
    };
    let fit = irls(x_obs, y_obs, Link::Logit, &opts, ridge)?;
    let beta = perturb(&fit.beta, fit.information, 1.0, rng)?;
    Ok((x_mis * beta).iter().map(|&e| expit(e)).collect())
}

fn impute_column(cols: &mut [Column], j: usize, mask: &[bool], ridge: f64, rng: &mut StreamRng) -> Result<()> {
    let x = predictor_matrix(cols, j);
    let obs_rows: Vec<usize> = (0..mask.len()).filter(|&r| !mask[r]).collect();
    let mis_rows: Vec<usize> = (0..mask.len()).filter(|&r| mask[r]).collect();
    let x_obs = rows_of(&x, &obs_rows);
    let x_mis = rows_of(&x, &mis_rows);
    let lambda = ridge * obs_rows.len() as f64;
    let values = cols[j].raw_values();
    let y_obs: Vec<f64> = obs_rows.iter().map(|&r| values[r]).collect();

    let draws: Vec<f64> = match cols[j].kind() {
        ColumnKind::Continuous => {
            let p = x_obs.ncols();
            let mut a = x_obs.tr_mul(&x_obs);
            for d in 1..p {
                a[(d, d)] += lambda;
            }
            let yv = DVector::from_column_slice(&y_obs);
            let beta_hat = a
                .clone()
                .cholesky()
                .ok_or(Error::Singular("imputation model"))?
                .solve(&x_obs.tr_mul(&yv));
            let rss = (&yv - &x_obs * &beta_hat).norm_squared();
            let dof = obs_rows.len().saturating_sub(p).max(1) as f64;
            let g: f64 = ChiSquared::new(dof)
                .map_err(|e| Error::Domain(e.to_string()))?
                .sample(rng);
            let sigma = (rss / g).sqrt();
            let beta = perturb(&beta_hat, a, sigma, rng)?;
            (&x_mis * beta)
                .iter()
                .map(|&m| m + sigma * rng.sample::<f64, _>(StandardNormal))
                .collect()
        }
        ColumnKind::Binary => logistic_draw(&x_obs, &y_obs, &x_mis, lambda, rng)?
            .into_iter()
            .map(|p| f64::from(rng.gen::<f64>() < p))
            .collect(),
        ColumnKind::Categorical => {
            let n_levels = cols[j].levels().len();
            let mut probs = vec![vec![0.0; n_levels]; mis_rows.len()];
            for level in 0..n_levels {
                let y_l: Vec<f64> = y_obs.iter().map(|&v| f64::from(v as usize == level)).collect();
                let p_l = logistic_draw(&x_obs, &y_l, &x_mis, lambda, rng)?;
                for (row, p) in probs.iter_mut().zip(p_l) {
                    row[level] = p;
                }
            }
            probs
                .into_iter()
                .map(|row| {
                    let total: f64 = row.iter().sum();
                    let u = rng.gen::<f64>();
                    if !(total > 0.0) {
                        return ((u * n_levels as f64) as usize).min(n_levels - 1) as f64;
                    }
                    let mut acc = 0.0;
                    for (level, p) in row.iter().enumerate() {
                        acc += p / total;
                        if u < acc {
                            return level as f64;
                        }
                    }
                    (n_levels - 1) as f64
                })
                .collect()
        }
    };
    for (&r, v) in mis_rows.iter().zip(draws) {
        cols[j].set(r, v);
    }
    Ok(())
}

/// Reads externally imputed datasets, one delimited file per imputation,
/// taken in file-name order.
pub fn load_imputed_dir(dir: &Path, schema: &Schema, opts: &LoadOptions) -> Result<ImputedSet> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("csv" | "tsv" | "txt")
                )
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Empty(format!("no imputed files in {}", dir.display())));
    }
    let mut datasets = Vec::with_capacity(files.len());
    for path in &files {
        let ds = load_table(std::fs::File::open(path)?, schema, opts)?;
        if ds.has_missing() {
            return Err(Error::Validation(format!(
                "imputed file {} still has missing cells",
                path.display()
            )));
        }
        if let Some(first) = datasets.first().map(Dataset::n_rows) {
            if ds.n_rows() != first {
                return Err(Error::Validation(format!(
                    "imputed file {} has {} rows, expected {first}",
                    path.display(),
                    ds.n_rows()
                )));
            }
        }
        datasets.push(ds);
    }
    Ok(ImputedSet {
        datasets,
        provenance: Provenance::External {
            files: files.iter().map(|p| p.display().to_string()).collect(),
        },
        warnings: Vec::new(),
    })
}

/// Rows observed on every one of `columns`.
pub fn complete_case_filter(ds: &Dataset, columns: &[&str]) -> Result<Dataset> {
    let rows = ds.complete_rows(columns)?;
    if rows.is_empty() {
        return Err(Error::Empty(format!(
            "no complete cases on {}",
            columns.join(", ")
        )));
    }
    Ok(ds.select_rows(&rows))
}
