use std::path::Path;

use rayon::prelude::*;

use super::config::{AnalysisSpec, MissingStrategy};
use super::modes::{canonical_mode, mode_registry, Analysis, AnalysisMode, Interaction, LaggedExposureWide, OutcomeWide, Plan};
use super::result::{OutcomeRow, OutcomeWideResult, RunMetadata, StandardizedSd};
use super::rules::classify_design_level;
use crate::data::{apply_record, column_prevalence, load_table, ColumnKind, Dataset, Transform};
use crate::error::{Error, Result};
use crate::glm::{build_design_matrix, choose_family, family_registry, DesignMatrix, FamilyKind, FitOptions, FitResult};
use crate::imputation::{complete_case_filter, impute_chained, load_imputed_dir, pool_rubin, ImputeOptions, ImputedSet};
use crate::multiplicity::{adjust_bonferroni_holm, null_rejection_interval, romano_wolf, ResidualResampler};
use crate::sensitivity::{evalue_report, OutcomeMeta};

/// The data a run operates on.
#[derive(Debug, Clone)]
pub struct RunInput {
    pub dataset: Dataset,
    /// Externally imputed copies; when absent and the data have missing
    /// cells, the run imputes internally.
    pub imputed: Option<ImputedSet>,
}

impl RunInput {
    pub fn new(dataset: Dataset) -> Self {
        Self {
            dataset,
            imputed: None,
        }
    }

    /// Loads the files named in the spec; relative paths resolve against `base_dir`.
    pub fn load(spec: &AnalysisSpec, base_dir: &Path) -> Result<Self> {
        let path = spec.data.path.as_deref().ok_or_else(|| {
            Error::Config("no data file: set [data].path or pass --data".into())
        })?;
        let opts = spec.data.load_options()?;
        let schema = spec.schema();
        let file = std::fs::File::open(base_dir.join(path))?;
        let dataset = load_table(file, &schema, &opts)?;
        let imputed = match &spec.data.imputed_dir {
            Some(dir) => Some(load_imputed_dir(&base_dir.join(dir), &schema, &opts)?),
            None => None,
        };
        Ok(Self { dataset, imputed })
    }
}

/// Runs the mode named in `spec.options.mode`.
pub fn run(spec: &AnalysisSpec, input: &RunInput) -> Result<OutcomeWideResult> {
    let reg = mode_registry();
    execute(spec, reg.get(&canonical_mode(&spec.options.mode))?, input)
}

pub fn run_outcome_wide(spec: &AnalysisSpec, input: &RunInput) -> Result<OutcomeWideResult> {
    execute(spec, &OutcomeWide, input)
}

pub fn run_lagged_exposure_wide(spec: &AnalysisSpec, input: &RunInput) -> Result<OutcomeWideResult> {
    execute(spec, &LaggedExposureWide, input)
}

pub fn run_interaction(spec: &AnalysisSpec, input: &RunInput) -> Result<OutcomeWideResult> {
    execute(spec, &Interaction, input)
}

fn apply_transforms(ds: &Dataset, plan: &Plan) -> Result<Dataset> {
    let mut out = ds.clone();
    for rec in &plan.transforms {
        let col = apply_record(out.column(&rec.source)?, rec)?;
        out = out.with_column(col)?;
    }
    Ok(out)
}

/// Design matrices of every regression in the battery, on complete data.
pub fn analysis_designs(spec: &AnalysisSpec, dataset: &Dataset) -> Result<Vec<(String, DesignMatrix)>> {
    spec.validate()?;
    let reg = mode_registry();
    let mode = reg.get(&canonical_mode(&spec.options.mode))?;
    mode.validate(spec)?;
    let plan = mode.plan(spec, dataset)?;
    let coded = apply_transforms(dataset, &plan)?;
    plan.analyses
        .iter()
        .map(|a| {
            build_design_matrix(&coded, &a.exposure_terms, &a.covariate_terms)
                .map(|d| (a.label.clone(), d))
                .map_err(|e| e.for_outcome(&a.label))
        })
        .collect()
}

enum Source {
    Complete(Dataset),
    Imputed(Vec<Dataset>),
    CompleteCase(Dataset),
}

struct Fitted {
    terms: Vec<FitResult>,
    converged: bool,
}

fn fit_one(ds: &Dataset, a: &Analysis, family: FamilyKind, opts: &FitOptions, complete_case: bool) -> Result<Fitted> {
    let filtered;
    let ds = if complete_case {
        filtered = complete_case_filter(ds, &a.sources())?;
        &filtered
    } else {
        ds
    };
    let design = build_design_matrix(ds, &a.exposure_terms, &a.covariate_terms)?;
    let y = design.response(ds.column(&a.outcome)?)?;
    let reg = family_registry();
    let model = reg.get(family.name())?.fit(&design, &y, opts)?;
    let terms = a
        .reported
        .iter()
        .map(|name| {
            model.term(name).ok_or_else(|| {
                Error::Validation(format!("design has no column '{name}'"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Fitted {
        terms,
        converged: model.converged,
    })
}

fn fit_battery(
    ds: &Dataset,
    analyses: &[Analysis],
    families: &[FamilyKind],
    opts: &FitOptions,
    complete_case: bool,
) -> Result<Vec<Fitted>> {
    let fitted: Vec<Result<Fitted>> = analyses
        .par_iter()
        .zip(families.par_iter())
        .map(|(a, &f)| fit_one(ds, a, f, opts, complete_case).map_err(|e| e.for_outcome(&a.label)))
        .collect();
    fitted.into_iter().collect()
}

pub(crate) fn execute(spec: &AnalysisSpec, mode: &dyn AnalysisMode, input: &RunInput) -> Result<OutcomeWideResult> {
    spec.validate()?;
    mode.validate(spec)?;
    let observed = &input.dataset;
    let plan = mode.plan(spec, observed)?;
    let options = &spec.options;
    let mut warnings = plan.warnings.clone();

    // Families are fixed on the observed (pre-imputation) sample.
    let mut families = Vec::with_capacity(plan.analyses.len());
    let mut prevalences = Vec::with_capacity(plan.analyses.len());
    for a in &plan.analyses {
        let col = observed.column(&a.outcome)?;
        let prevalence = match col.kind() {
            ColumnKind::Binary => Some(column_prevalence(col).map_err(|e| e.for_outcome(&a.label))?),
            _ => None,
        };
        families.push(choose_family(col.kind(), prevalence, options.family_threshold));
        prevalences.push(prevalence);
    }

    let mut relevant: Vec<&str> = Vec::new();
    for a in &plan.analyses {
        for s in a.sources() {
            if !relevant.contains(&s) {
                relevant.push(s);
            }
        }
    }
    let has_missing = relevant
        .iter()
        .map(|c| observed.column(c).map(|c| c.has_missing()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .any(|m| m);

    let mut provenance = None;
    let source = match (&input.imputed, has_missing, options.missing) {
        (_, true, MissingStrategy::CompleteCase) => Source::CompleteCase(apply_transforms(observed, &plan)?),
        (Some(set), _, MissingStrategy::Impute) => {
            warnings.extend(set.warnings().iter().cloned());
            provenance = Some(set.provenance().clone());
            Source::Imputed(
                set.datasets()
                    .iter()
                    .map(|d| apply_transforms(d, &plan))
                    .collect::<Result<_>>()?,
            )
        }
        (None, true, MissingStrategy::Impute) => {
            let set = impute_chained(
                observed,
                &ImputeOptions::new(options.imputations, options.iterations, options.seed),
            )?;
            warnings.extend(set.warnings().iter().cloned());
            provenance = Some(set.provenance().clone());
            Source::Imputed(
                set.datasets()
                    .iter()
                    .map(|d| apply_transforms(d, &plan))
                    .collect::<Result<_>>()?,
            )
        }
        _ => Source::Complete(apply_transforms(observed, &plan)?),
    };

    let fit_opts = FitOptions {
        ci_level: options.ci_level,
        ..FitOptions::default()
    };
    let mut rows: Vec<OutcomeRow> = Vec::with_capacity(plan.analyses.len());
    let mut pooled_rows = Vec::new();
    match &source {
        Source::Complete(ds) | Source::CompleteCase(ds) => {
            let cc = matches!(source, Source::CompleteCase(_));
            for f in fit_battery(ds, &plan.analyses, &families, &fit_opts, cc)? {
                pooled_rows.push((f.terms, None, f.converged));
            }
        }
        Source::Imputed(sets) => {
            let per_set = sets
                .iter()
                .map(|d| fit_battery(d, &plan.analyses, &families, &fit_opts, false))
                .collect::<Result<Vec<_>>>()?;
            for (i, a) in plan.analyses.iter().enumerate() {
                let converged = per_set.iter().all(|s| s[i].converged);
                let mut terms = Vec::with_capacity(a.reported.len());
                let mut summary_pool = None;
                for (t, name) in a.reported.iter().enumerate() {
                    let results: Vec<FitResult> = per_set.iter().map(|s| s[i].terms[t].clone()).collect();
                    let pooled = pool_rubin(&results).map_err(|e| e.for_outcome(&a.label))?;
                    terms.push(pooled.as_fit_result(converged));
                    if *name == a.summary {
                        summary_pool = Some(pooled);
                    }
                }
                pooled_rows.push((terms, summary_pool, converged));
            }
        }
    }

    for (i, (a, (terms, pooled, _))) in plan.analyses.iter().zip(pooled_rows).enumerate() {
        let fit = a
            .reported
            .iter()
            .position(|r| *r == a.summary)
            .map(|k| terms[k].clone())
            .ok_or_else(|| Error::Validation(format!("summary term '{}' not reported", a.summary)))?;
        let kind = observed.column(&a.outcome)?.kind();
        let standardized = plan
            .transforms
            .iter()
            .any(|t| t.source == a.outcome && matches!(t.transform, Transform::Standardize { .. }));
        let evalue = if plan.evalues {
            let meta = OutcomeMeta {
                prevalence: prevalences[i],
                rare_threshold: options.family_threshold,
                outcome_sd: match kind {
                    ColumnKind::Continuous if standardized => Some(1.0),
                    ColumnKind::Continuous => Some(observed.column(&a.outcome)?.summary().sd),
                    _ => None,
                },
            };
            Some(evalue_report(&fit, &meta).map_err(|e| e.for_outcome(&a.label))?)
        } else {
            None
        };
        let mut exposure_sources: Vec<&str> = Vec::new();
        for t in &a.exposure_terms {
            exposure_sources.extend(t.sources());
        }
        rows.push(OutcomeRow {
            label: a.label.clone(),
            outcome: a.outcome.clone(),
            exposure: a.exposure.clone(),
            kind,
            family: families[i],
            prevalence: prevalences[i],
            n: fit.n_used,
            terms,
            fit,
            pooled,
            evalue,
            transforms: plan
                .transforms
                .iter()
                .filter(|t| t.source == a.outcome || exposure_sources.contains(&t.source.as_str()))
                .cloned()
                .collect(),
        });
    }

    let labels: Vec<String> = rows.iter().map(|r| r.label.clone()).collect();
    let p: Vec<f64> = rows.iter().map(|r| r.fit.p_value).collect();
    let mut multiplicity = adjust_bonferroni_holm(&labels, &p, options.alpha)?;

    let continuous: Vec<usize> = (0..rows.len())
        .filter(|&i| rows[i].kind == ColumnKind::Continuous)
        .collect();
    let mut null_interval = None;
    let mut resampling_dataset = None;
    if plan.shared_design && options.resampling && !continuous.is_empty() {
        let (ds, what) = match &source {
            Source::Complete(ds) => (ds.clone(), "complete data"),
            Source::Imputed(sets) => (sets[0].clone(), "imputation 1"),
            Source::CompleteCase(ds) => {
                let mut cols: Vec<&str> = Vec::new();
                for &i in &continuous {
                    for s in plan.analyses[i].sources() {
                        if !cols.contains(&s) {
                            cols.push(s);
                        }
                    }
                }
                (complete_case_filter(ds, &cols)?, "joint complete cases of the continuous outcomes")
            }
        };
        let first = &plan.analyses[continuous[0]];
        let design = build_design_matrix(&ds, &first.exposure_terms, &first.covariate_terms)?;
        let responses = continuous
            .iter()
            .map(|&i| design.response(ds.column(&plan.analyses[i].outcome)?))
            .collect::<Result<Vec<_>>>()?;
        let index = design
            .column_index(&first.summary)
            .ok_or_else(|| Error::Validation(format!("design has no column '{}'", first.summary)))?;
        let engine = ResidualResampler::new(design.matrix(), index, &responses)?;
        let t: Vec<f64> = continuous.iter().map(|&i| rows[i].fit.z).collect();
        let rw = romano_wolf(&engine, &t, options.resamples, options.seed)?;
        multiplicity = multiplicity.with_romano_wolf(continuous.iter().map(|&i| labels[i].clone()).collect(), rw);
        null_interval = Some(null_rejection_interval(
            &engine,
            &t,
            options.alpha,
            options.null_resamples,
            options.seed,
        )?);
        resampling_dataset = Some(what.to_string());
    }

    let design_level = match spec.design {
        Some(mut flags) => {
            flags.baseline_outcome_controlled |= !spec.baseline_outcome_columns().is_empty();
            flags.prior_exposure_controlled |= spec
                .exposure
                .as_ref()
                .is_some_and(|e| e.prior_exposure_column.is_some());
            let level = classify_design_level(&flags)?;
            if let Some(c) = &level.caution {
                warnings.push(c.clone());
            }
            Some(level)
        }
        None => None,
    };

    let standardized = plan
        .transforms
        .iter()
        .filter_map(|t| match t.transform {
            Transform::Standardize { mean, sd } => Some(StandardizedSd {
                variable: t.source.clone(),
                mean,
                sd,
            }),
            _ => None,
        })
        .collect();

    let (missing_data, pooling) = match source {
        Source::Complete(_) => ("none", "none"),
        Source::Imputed(_) => ("multiple_imputation", "rubin_normal_reference"),
        Source::CompleteCase(_) => ("complete_case", "none"),
    };
    Ok(OutcomeWideResult {
        rows,
        multiplicity,
        null_interval,
        standardized,
        metadata: RunMetadata {
            tool: "outwide".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: options.seed,
            spec_hash: spec.hash(),
            mode: mode.name().into(),
            exposure_coding: plan.coding.clone(),
            p_value_reference: "normal".into(),
            interval_method: "wald".into(),
            missing_data: missing_data.into(),
            pooling: pooling.into(),
            imputation: provenance,
            resampling_dataset,
            n_rows: observed.n_rows(),
            options: options.clone(),
            design_level,
            warnings,
        },
    })
}
