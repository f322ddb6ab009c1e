use std::collections::HashSet;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::rules::{CovariateTag, DesignFlags};
use crate::data::{ColumnKind, LoadOptions, Schema};
use crate::error::{Error, Result};

/// A complete analysis description, normally read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    /// Shared covariate set. When empty and `covariate_tags` is given, the
    /// tags are run through the selection rule instead.
    #[serde(default)]
    pub covariates: Vec<String>,
    #[serde(default)]
    pub data: DataSpec,
    /// Column kinds of the input table.
    pub columns: IndexMap<String, ColumnKind>,
    #[serde(default)]
    pub exposure: Option<ExposureSpec>,
    #[serde(default)]
    pub outcomes: Vec<OutcomeSpec>,
    #[serde(default)]
    pub options: Options,
    #[serde(default)]
    pub design: Option<DesignFlags>,
    #[serde(default)]
    pub covariate_tags: Vec<CovariateTag>,
    #[serde(default)]
    pub lagged: Option<LaggedSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSpec {
    pub path: Option<String>,
    pub delimiter: char,
    pub missing_tokens: Vec<String>,
    /// Directory of externally imputed copies of the data, one file each.
    pub imputed_dir: Option<String>,
}

impl Default for DataSpec {
    fn default() -> Self {
        Self {
            path: None,
            delimiter: ',',
            missing_tokens: vec![String::new(), "NA".into()],
            imputed_dir: None,
        }
    }
}

impl DataSpec {
    pub fn load_options(&self) -> Result<LoadOptions> {
        if !self.delimiter.is_ascii() {
            return Err(Error::Config(format!(
                "delimiter must be a single ASCII character, got '{}'",
                self.delimiter
            )));
        }
        Ok(LoadOptions {
            delimiter: self.delimiter as u8,
            missing_tokens: self.missing_tokens.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExposureSpec {
    pub column: String,
    #[serde(default = "default_coding")]
    pub coding: String,
    #[serde(default)]
    pub prior_exposure_column: Option<String>,
    #[serde(default)]
    pub label: Option<String>,
}

fn default_coding() -> String {
    "raw".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeSpec {
    pub column: String,
    /// Declared kind; must agree with the column schema when given.
    #[serde(default)]
    pub kind: Option<ColumnKind>,
    #[serde(default)]
    pub baseline_outcome_column: Option<String>,
    #[serde(default)]
    pub label: Option<String>,
}

impl OutcomeSpec {
    pub fn new(column: impl Into<String>) -> Self {
        Self {
            column: column.into(),
            kind: None,
            baseline_outcome_column: None,
            label: None,
        }
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingStrategy {
    Impute,
    CompleteCase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    pub alpha: f64,
    pub ci_level: f64,
    /// Binary outcomes with prevalence above this get modified Poisson.
    pub family_threshold: f64,
    pub resamples: usize,
    pub null_resamples: usize,
    /// Run the Romano–Wolf and null-interval resampling.
    pub resampling: bool,
    pub seed: u64,
    pub imputations: usize,
    pub iterations: usize,
    pub mode: String,
    pub second_exposure: Option<String>,
    pub standardize_outcomes: bool,
    pub missing: MissingStrategy,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            ci_level: 0.95,
            family_threshold: 0.10,
            resamples: 1000,
            null_resamples: 2000,
            resampling: true,
            seed: 0,
            imputations: 20,
            iterations: 10,
            mode: "outcome_wide".into(),
            second_exposure: None,
            standardize_outcomes: true,
            missing: MissingStrategy::Impute,
        }
    }
}

/// Lagged exposure-wide design: every wave-2 exposure gets its own
/// regression on the one outcome, each controlling for all wave-1 exposures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaggedSpec {
    pub wave1: Vec<String>,
    pub wave2: Vec<String>,
    pub outcome: String,
    #[serde(default = "default_coding")]
    pub coding: String,
    /// Wave-2 exposure → its wave-1 measurement. When empty and the two
    /// lists have equal length, exposures are paired by position.
    #[serde(default)]
    pub counterparts: IndexMap<String, String>,
}

impl LaggedSpec {
    pub fn counterpart(&self, wave2: &str) -> Option<&str> {
        if self.counterparts.is_empty() && self.wave1.len() == self.wave2.len() {
            let i = self.wave2.iter().position(|w| w == wave2)?;
            return Some(&self.wave1[i]);
        }
        self.counterparts
            .get(wave2)
            .map(String::as_str)
            .filter(|c| self.wave1.iter().any(|w| w == c))
    }
}

impl AnalysisSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn schema(&self) -> Schema {
        self.columns.clone()
    }

    /// sha256 of the canonical JSON form, defaults included.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn exposure(&self) -> Result<&ExposureSpec> {
        self.exposure
            .as_ref()
            .ok_or_else(|| Error::Validation("an [exposure] section is required".into()))
    }

    /// Baseline-outcome columns of all outcomes, in declaration order.
    pub fn baseline_outcome_columns(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for o in &self.outcomes {
            if let Some(b) = o.baseline_outcome_column.as_deref() {
                if !out.contains(&b) {
                    out.push(b);
                }
            }
        }
        out
    }

    fn kind_of(&self, column: &str, role: &str) -> Result<ColumnKind> {
        self.columns.get(column).copied().ok_or_else(|| {
            Error::Validation(format!("{role} '{column}' is not declared in [columns]"))
        })
    }

    /// Checks the invariants that do not need the data.
    pub fn validate(&self) -> Result<()> {
        let o = &self.options;
        if !(o.alpha > 0.0 && o.alpha < 1.0) {
            return Err(Error::Validation(format!("alpha must lie in (0, 1), got {}", o.alpha)));
        }
        if !(o.ci_level > 0.0 && o.ci_level < 1.0) {
            return Err(Error::Validation(format!(
                "ci_level must lie in (0, 1), got {}",
                o.ci_level
            )));
        }
        if !(0.0..=1.0).contains(&o.family_threshold) {
            return Err(Error::Validation(format!(
                "family_threshold must lie in [0, 1], got {}",
                o.family_threshold
            )));
        }

        let mut exposures: Vec<(&str, &str)> = Vec::new();
        if let Some(e) = &self.exposure {
            exposures.push((e.column.as_str(), "exposure"));
            if let Some(p) = &e.prior_exposure_column {
                exposures.push((p.as_str(), "prior exposure"));
            }
        }
        if let Some(x) = &o.second_exposure {
            exposures.push((x.as_str(), "second exposure"));
        }
        let outcomes: Vec<(&str, &str)> = self
            .outcomes
            .iter()
            .map(|o| (o.column.as_str(), "outcome"))
            .collect();
        let mut covariates: Vec<(&str, &str)> = self
            .covariates
            .iter()
            .map(|c| (c.as_str(), "covariate"))
            .collect();
        covariates.extend(
            self.baseline_outcome_columns()
                .into_iter()
                .map(|b| (b, "baseline outcome")),
        );

        let mut seen: IndexMap<&str, &str> = IndexMap::new();
        for (name, role) in exposures.iter().chain(&outcomes).chain(&covariates) {
            self.kind_of(name, role)?;
            if let Some(prev) = seen.insert(name, role) {
                if !(prev == "baseline outcome" && *role == "baseline outcome") {
                    return Err(Error::Validation(format!(
                        "column '{name}' appears as both {prev} and {role}; \
                         exposures, outcomes and covariates must be disjoint"
                    )));
                }
            }
        }

        for out in &self.outcomes {
            let kind = self.kind_of(&out.column, "outcome")?;
            if let Some(declared) = out.kind {
                if declared != kind {
                    return Err(Error::Validation(format!(
                        "outcome '{}' declared {} but the column is {}",
                        out.column,
                        declared.as_str(),
                        kind.as_str()
                    )));
                }
            }
            if kind == ColumnKind::Categorical {
                return Err(Error::Validation(format!(
                    "outcome '{}' is categorical; outcomes must be continuous or binary",
                    out.column
                )));
            }
        }

        for tag in &self.covariate_tags {
            self.kind_of(&tag.name, "tagged covariate")?;
        }

        if let Some(lag) = &self.lagged {
            let mut names = HashSet::new();
            for n in lag.wave1.iter().chain(&lag.wave2).chain(std::iter::once(&lag.outcome)) {
                self.kind_of(n, "lagged column")?;
                if !names.insert(n.as_str()) {
                    return Err(Error::Validation(format!(
                        "column '{n}' appears more than once in [lagged]"
                    )));
                }
            }
            for c in &self.covariates {
                if names.contains(c.as_str()) {
                    return Err(Error::Validation(format!(
                        "column '{c}' is both a covariate and a lagged exposure or outcome"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"
covariates = ["age", "sex"]

[data]
path = "cohort.csv"

[columns]
warmth = "continuous"
flourishing = "continuous"
depression = "binary"
age = "continuous"
sex = "binary"

[exposure]
column = "warmth"
coding = "standardized"

[[outcomes]]
column = "flourishing"

[[outcomes]]
column = "depression"
kind = "binary"

[options]
seed = 7
"#;

    #[test]
    fn parses_with_defaults() {
        let spec = AnalysisSpec::from_toml(SPEC).unwrap();
        spec.validate().unwrap();
        assert_eq!(spec.options.seed, 7);
        assert_eq!(spec.options.alpha, 0.05);
        assert_eq!(spec.options.resamples, 1000);
        assert_eq!(spec.data.missing_tokens, vec!["".to_string(), "NA".into()]);
        let again = AnalysisSpec::from_toml(&spec.to_toml().unwrap()).unwrap();
        assert_eq!(spec, again);
        assert_eq!(spec.hash(), again.hash());
    }

    #[test]
    fn outcome_as_covariate_rejected() {
        let mut spec = AnalysisSpec::from_toml(SPEC).unwrap();
        spec.covariates.push("depression".into());
        let err = spec.validate().unwrap_err().to_string();
        assert!(err.contains("depression"), "{err}");
    }

    #[test]
    fn declared_kind_must_match() {
        let mut spec = AnalysisSpec::from_toml(SPEC).unwrap();
        spec.outcomes[0].kind = Some(ColumnKind::Binary);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(AnalysisSpec::from_toml(&SPEC.replace("seed = 7", "sed = 7")).is_err());
    }
}
