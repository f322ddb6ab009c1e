use super::coding::{coding_registry, ExposureCoding};
use super::config::AnalysisSpec;
use super::rules::select_covariates;
use crate::data::{standardize_column, ColumnKind, Dataset, TransformRecord};
use crate::error::{Error, Result};
use crate::glm::{product_name, Term};
use crate::registry::{Named, Registry};

/// One regression of a battery.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub label: String,
    pub outcome: String,
    pub exposure: String,
    pub exposure_terms: Vec<Term>,
    pub covariate_terms: Vec<Term>,
    /// Design columns reported for this regression.
    pub reported: Vec<String>,
    /// The reported column that feeds the main table, E-values and multiplicity.
    pub summary: String,
}

impl Analysis {
    /// Every dataset column the regression reads.
    pub fn sources(&self) -> Vec<&str> {
        let mut out: Vec<&str> = vec![self.outcome.as_str()];
        for t in self.exposure_terms.iter().chain(&self.covariate_terms) {
            for s in t.sources() {
                if !out.contains(&s) {
                    out.push(s);
                }
            }
        }
        out
    }
}

/// What a mode wants executed.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub analyses: Vec<Analysis>,
    /// Recodings applied, in order, to every analysed copy of the data.
    pub transforms: Vec<TransformRecord>,
    pub coding: String,
    pub evalues: bool,
    /// All analyses share one design, so the joint resampling metrics apply.
    pub shared_design: bool,
    pub warnings: Vec<String>,
}

/// An analysis layout: which regressions make up the battery.
pub trait AnalysisMode: Named + Send + Sync {
    fn validate(&self, spec: &AnalysisSpec) -> Result<()>;

    /// Builds the battery; transforms are fitted on `observed`.
    fn plan(&self, spec: &AnalysisSpec, observed: &Dataset) -> Result<Plan>;
}

/// Declared covariates, or the covariates selected from the tags when none are declared.
pub fn effective_covariates(spec: &AnalysisSpec) -> Vec<String> {
    if spec.covariates.is_empty() && !spec.covariate_tags.is_empty() {
        select_covariates(&spec.covariate_tags).included
    } else {
        spec.covariates.clone()
    }
}

fn column_terms<'a>(names: impl IntoIterator<Item = &'a str>) -> Vec<Term> {
    let mut seen: Vec<&str> = Vec::new();
    for n in names {
        if !seen.contains(&n) {
            seen.push(n);
        }
    }
    seen.into_iter().map(Term::column).collect()
}

fn outcome_transforms(spec: &AnalysisSpec, observed: &Dataset, outcomes: &[&str]) -> Result<Vec<TransformRecord>> {
    if !spec.options.standardize_outcomes {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for &o in outcomes {
        let col = observed.column(o)?;
        if col.kind() == ColumnKind::Continuous {
            out.push(standardize_column(col).map_err(|e| e.for_outcome(o))?.1);
        }
    }
    Ok(out)
}

fn coding<'a>(reg: &'a Registry<dyn ExposureCoding>, name: &str) -> Result<&'a dyn ExposureCoding> {
    reg.get(name)
}

fn require_outcomes(spec: &AnalysisSpec) -> Result<()> {
    if spec.outcomes.is_empty() {
        return Err(Error::Validation("at least one [[outcomes]] entry is required".into()));
    }
    Ok(())
}

/// One exposure against every declared outcome under one covariate set.
pub struct OutcomeWide;

impl Named for OutcomeWide {
    fn name(&self) -> &'static str {
        "outcome_wide"
    }
}

impl AnalysisMode for OutcomeWide {
    fn validate(&self, spec: &AnalysisSpec) -> Result<()> {
        coding(&coding_registry(), &spec.exposure()?.coding)?;
        require_outcomes(spec)
    }

    fn plan(&self, spec: &AnalysisSpec, observed: &Dataset) -> Result<Plan> {
        let exposure = spec.exposure()?;
        let reg = coding_registry();
        let code = coding(&reg, &exposure.coding)?;
        let e = exposure.column.as_str();
        let mut transforms = vec![code.fit(observed.column(e)?)?];
        let outcomes: Vec<&str> = spec.outcomes.iter().map(|o| o.column.as_str()).collect();
        transforms.extend(outcome_transforms(spec, observed, &outcomes)?);

        let covariates = effective_covariates(spec);
        let covariate_terms = column_terms(
            covariates
                .iter()
                .map(String::as_str)
                .chain(spec.baseline_outcome_columns())
                .chain(exposure.prior_exposure_column.as_deref()),
        );
        let analyses = spec
            .outcomes
            .iter()
            .map(|o| Analysis {
                label: o.label().to_string(),
                outcome: o.column.clone(),
                exposure: e.to_string(),
                exposure_terms: vec![Term::column(e)],
                covariate_terms: covariate_terms.clone(),
                reported: code.reported_columns(e),
                summary: code.summary_column(e),
            })
            .collect();
        Ok(Plan {
            analyses,
            transforms,
            coding: code.name().to_string(),
            evalues: true,
            shared_design: true,
            warnings: Vec::new(),
        })
    }
}

/// Outcome-wide regressions with a second exposure and their product term.
pub struct Interaction;

impl Named for Interaction {
    fn name(&self) -> &'static str {
        "interaction"
    }
}

impl AnalysisMode for Interaction {
    fn validate(&self, spec: &AnalysisSpec) -> Result<()> {
        let exposure = spec.exposure()?;
        if spec.options.second_exposure.is_none() {
            return Err(Error::Validation(
                "interaction mode requires options.second_exposure".into(),
            ));
        }
        let reg = coding_registry();
        if !coding(&reg, &exposure.coding)?.numeric() {
            return Err(Error::Validation(format!(
                "exposure coding '{}' cannot enter a product term",
                exposure.coding
            )));
        }
        require_outcomes(spec)
    }

    fn plan(&self, spec: &AnalysisSpec, observed: &Dataset) -> Result<Plan> {
        let exposure = spec.exposure()?;
        let a = exposure.column.as_str();
        let x = spec
            .options
            .second_exposure
            .as_deref()
            .ok_or_else(|| Error::Validation("interaction mode requires options.second_exposure".into()))?;
        let reg = coding_registry();
        let code = coding(&reg, &exposure.coding)?;
        let mut transforms = vec![code.fit(observed.column(a)?)?];
        if observed.column(x)?.kind() == ColumnKind::Continuous {
            transforms.push(code.fit(observed.column(x)?)?);
        }
        let outcomes: Vec<&str> = spec.outcomes.iter().map(|o| o.column.as_str()).collect();
        transforms.extend(outcome_transforms(spec, observed, &outcomes)?);

        let covariates = effective_covariates(spec);
        let covariate_terms = column_terms(
            covariates
                .iter()
                .map(String::as_str)
                .chain(spec.baseline_outcome_columns())
                .chain(exposure.prior_exposure_column.as_deref()),
        );
        let product = product_name(a, x);
        let analyses = spec
            .outcomes
            .iter()
            .map(|o| Analysis {
                label: o.label().to_string(),
                outcome: o.column.clone(),
                exposure: product.clone(),
                exposure_terms: vec![Term::column(a), Term::column(x), Term::product(a, x)],
                covariate_terms: covariate_terms.clone(),
                reported: vec![a.to_string(), x.to_string(), product.clone()],
                summary: product.clone(),
            })
            .collect();
        Ok(Plan {
            analyses,
            transforms,
            coding: code.name().to_string(),
            evalues: false,
            shared_design: true,
            warnings: Vec::new(),
        })
    }
}

/// One regression per wave-2 exposure, each adjusting for all wave-1 exposures.
pub struct LaggedExposureWide;

impl Named for LaggedExposureWide {
    fn name(&self) -> &'static str {
        "lagged_exposure_wide"
    }
}

impl AnalysisMode for LaggedExposureWide {
    fn validate(&self, spec: &AnalysisSpec) -> Result<()> {
        let lag = spec
            .lagged
            .as_ref()
            .ok_or_else(|| Error::Validation("lagged mode requires a [lagged] section".into()))?;
        if lag.wave2.is_empty() {
            return Err(Error::Validation("[lagged] wave2 must list at least one exposure".into()));
        }
        coding(&coding_registry(), &lag.coding)?;
        Ok(())
    }

    fn plan(&self, spec: &AnalysisSpec, observed: &Dataset) -> Result<Plan> {
        let lag = spec
            .lagged
            .as_ref()
            .ok_or_else(|| Error::Validation("lagged mode requires a [lagged] section".into()))?;
        let reg = coding_registry();
        let code = coding(&reg, &lag.coding)?;
        let mut transforms = Vec::new();
        for a in &lag.wave2 {
            transforms.push(code.fit(observed.column(a)?)?);
        }
        transforms.extend(outcome_transforms(spec, observed, &[lag.outcome.as_str()])?);

        let mut warnings = Vec::new();
        for a in &lag.wave2 {
            if lag.counterpart(a).is_none() {
                let w = format!("wave-2 exposure '{a}' has no wave-1 counterpart among the controls");
                log::warn!("{w}");
                warnings.push(w);
            }
        }
        let covariates = effective_covariates(spec);
        let covariate_terms = column_terms(
            lag.wave1
                .iter()
                .map(String::as_str)
                .chain(covariates.iter().map(String::as_str)),
        );
        let analyses = lag
            .wave2
            .iter()
            .map(|a| Analysis {
                label: a.clone(),
                outcome: lag.outcome.clone(),
                exposure: a.clone(),
                exposure_terms: vec![Term::column(a.as_str())],
                covariate_terms: covariate_terms.clone(),
                reported: code.reported_columns(a),
                summary: code.summary_column(a),
            })
            .collect();
        Ok(Plan {
            analyses,
            transforms,
            coding: code.name().to_string(),
            evalues: true,
            shared_design: false,
            warnings,
        })
    }
}

pub fn mode_registry() -> Registry<dyn AnalysisMode> {
    let mut reg: Registry<dyn AnalysisMode> = Registry::new("mode");
    reg.register(Box::new(OutcomeWide))
        .register(Box::new(LaggedExposureWide))
        .register(Box::new(Interaction));
    reg
}

/// Accepts the CLI spellings (`outcome-wide`, `lagged`) as well as registry names.
pub fn canonical_mode(name: &str) -> String {
    match name.replace('-', "_").as_str() {
        "lagged" => "lagged_exposure_wide".into(),
        other => other.to_string(),
    }
}
