use serde::{Deserialize, Serialize};

use super::config::Options;
use super::rules::DesignLevel;
use crate::data::{ColumnKind, TransformRecord};
use crate::error::Result;
use crate::glm::{FamilyKind, FitResult};
use crate::imputation::{compare_estimates, DiscrepancyReport, PooledResult, Provenance};
use crate::multiplicity::{MultiplicityReport, NullIntervalReport};
use crate::sensitivity::EValueReport;

/// One regression of the battery: an outcome in outcome-wide and
/// interaction runs, a wave-2 exposure in lagged runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub label: String,
    pub outcome: String,
    pub exposure: String,
    pub kind: ColumnKind,
    pub family: FamilyKind,
    pub prevalence: Option<f64>,
    pub n: usize,
    /// Inference for the summary exposure term (pooled when imputed).
    pub fit: FitResult,
    /// Every reported exposure term, summary included.
    pub terms: Vec<FitResult>,
    pub pooled: Option<PooledResult>,
    pub evalue: Option<EValueReport>,
    pub transforms: Vec<TransformRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedSd {
    pub variable: String,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub spec_hash: String,
    pub mode: String,
    pub exposure_coding: String,
    pub p_value_reference: String,
    pub interval_method: String,
    pub missing_data: String,
    pub pooling: String,
    pub imputation: Option<Provenance>,
    /// Dataset the resampling metrics were computed on.
    pub resampling_dataset: Option<String>,
    pub n_rows: usize,
    pub options: Options,
    pub design_level: Option<DesignLevel>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeWideResult {
    pub rows: Vec<OutcomeRow>,
    pub multiplicity: MultiplicityReport,
    pub null_interval: Option<NullIntervalReport>,
    pub standardized: Vec<StandardizedSd>,
    pub metadata: RunMetadata,
}

impl OutcomeWideResult {
    pub fn row(&self, label: &str) -> Option<&OutcomeRow> {
        self.rows.iter().find(|r| r.label == label || r.outcome == label)
    }
}

/// Per-outcome comparison of an imputed run with a complete-case run.
pub fn compare_mi_cc(mi: &OutcomeWideResult, cc: &OutcomeWideResult) -> Result<DiscrepancyReport> {
    let pairs = |r: &OutcomeWideResult| {
        r.rows
            .iter()
            .map(|row| (row.label.clone(), row.fit.clone()))
            .collect::<Vec<_>>()
    };
    compare_estimates(&pairs(mi), &pairs(cc))
}
