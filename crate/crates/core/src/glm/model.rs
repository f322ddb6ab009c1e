use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::inference::{FamilyKind, FitResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub ci_level: f64,
    pub max_iterations: usize,
    /// Convergence requires max |score component| below this.
    pub score_tolerance: f64,
    /// |coefficient| beyond which a logistic fit is declared separated.
    pub separation_threshold: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            ci_level: 0.95,
            max_iterations: 100,
            score_tolerance: 1e-8,
            separation_threshold: 15.0,
        }
    }
}

/// A fitted regression: all coefficients and their covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFit {
    pub family: FamilyKind,
    pub coefficients: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub column_names: Vec<String>,
    pub exposure_columns: Vec<usize>,
    pub n_used: usize,
    pub converged: bool,
    pub iterations: usize,
    pub max_abs_score: f64,
    pub ci_level: f64,
    /// σ̂² for linear fits.
    pub residual_variance: Option<f64>,
}

impl ModelFit {
    pub fn se(&self, index: usize) -> f64 {
        self.covariance[(index, index)].max(0.0).sqrt()
    }

    pub fn coefficient(&self, index: usize) -> FitResult {
        let mut r = FitResult::wald(
            self.column_names[index].clone(),
            self.coefficients[index],
            self.se(index),
            self.ci_level,
            self.family,
        );
        r.n_used = self.n_used;
        r.converged = self.converged;
        r.iterations = self.iterations;
        r
    }

    pub fn term(&self, name: &str) -> Option<FitResult> {
        self.column_names
            .iter()
            .position(|c| c == name)
            .map(|i| self.coefficient(i))
    }

    /// Inference for the first exposure column.
    pub fn exposure(&self) -> FitResult {
        self.coefficient(self.exposure_columns[0])
    }

    pub fn exposure_results(&self) -> Vec<FitResult> {
        self.exposure_columns
            .iter()
            .map(|&i| self.coefficient(i))
            .collect()
    }
}
