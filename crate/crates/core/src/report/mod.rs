//! Report emission: the main association table, the E-value table, an
//! optional scale-conversion table, and JSON multiplicity and metadata files.

mod format;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use format::{effect_cell, effect_with_p, format_ci, format_p, p_cell, scale_label, stars};

use crate::error::{Error, Result};
use crate::glm::EffectScale;
use crate::multiplicity::{MultiplicityReport, NullIntervalReport};
use crate::pipeline::{OutcomeRow, OutcomeWideResult, RunMetadata, StandardizedSd};
use crate::registry::{Named, Registry};
use format::round2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReportOptions {
    /// Also emit the table converting every estimate to the risk-ratio scale.
    pub conversions: bool,
}

/// One output format.
pub trait ReportEmitter: Named + Send + Sync {
    fn render(&self, result: &OutcomeWideResult, opts: &ReportOptions) -> Result<Vec<ReportFile>>;
}

pub struct Markdown;
pub struct Csv;
pub struct Json;

pub fn emitter_registry() -> Registry<dyn ReportEmitter> {
    let mut reg: Registry<dyn ReportEmitter> = Registry::new("format");
    reg.register(Box::new(Markdown))
        .register(Box::new(Csv))
        .register(Box::new(Json));
    reg
}

#[derive(Serialize)]
struct MultiplicityFile<'a> {
    multiplicity: &'a MultiplicityReport,
    null_interval: &'a Option<NullIntervalReport>,
}

#[derive(Serialize)]
struct MetadataFile<'a> {
    #[serde(flatten)]
    metadata: &'a RunMetadata,
    standardized: &'a [StandardizedSd],
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Files written whatever the format.
fn common_files(result: &OutcomeWideResult) -> Result<Vec<ReportFile>> {
    Ok(vec![
        ReportFile {
            name: "multiplicity.json".into(),
            contents: json(&MultiplicityFile {
                multiplicity: &result.multiplicity,
                null_interval: &result.null_interval,
            })?,
        },
        ReportFile {
            name: "metadata.json".into(),
            contents: json(&MetadataFile {
                metadata: &result.metadata,
                standardized: &result.standardized,
            })?,
        },
        ReportFile {
            name: "result.json".into(),
            contents: json(result)?,
        },
    ])
}

fn single_term(result: &OutcomeWideResult) -> bool {
    result.rows.iter().all(|r| r.terms.len() == 1)
}

/// Short column heading for a reported term, e.g. "top vs bottom".
fn term_heading(row: &OutcomeRow, index: usize) -> String {
    let name = &row.terms[index].term;
    match (name.find('['), name.rfind(']')) {
        (Some(a), Some(b)) if a < b => name[a + 1..b].to_string(),
        _ => name.clone(),
    }
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

fn markdown_main(result: &OutcomeWideResult) -> String {
    let alpha = result.multiplicity.alpha;
    let k = result.multiplicity.k;
    let meta = &result.metadata;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# Associations of {} with each outcome\n",
        result.rows.first().map_or("", |r| r.exposure.as_str())
    );
    if single_term(result) {
        s.push_str("| Outcome | n | B [95% CI] | p | RR/OR [95% CI] | p |\n");
        s.push_str("|---|---:|---|---|---|---|\n");
        for row in &result.rows {
            let cell = effect_cell(&row.fit);
            let p = p_cell(row.fit.p_value, alpha, k);
            let (b, bp, r, rp) = match row.fit.scale {
                EffectScale::MeanDifference => (cell, p, String::new(), String::new()),
                _ => (String::new(), String::new(), cell, p),
            };
            let _ = writeln!(s, "| {} | {} | {b} | {bp} | {r} | {rp} |", md_escape(&row.label), row.n);
        }
    } else {
        let first = &result.rows[0];
        let heads: Vec<String> = (0..first.terms.len()).map(|i| term_heading(first, i)).collect();
        s.push_str("| Outcome | n | Scale |");
        for h in &heads {
            let _ = write!(s, " {} [95% CI] | p |", md_escape(h));
        }
        s.push('\n');
        s.push_str("|---|---:|---|");
        for _ in &heads {
            s.push_str("---|---|");
        }
        s.push('\n');
        for row in &result.rows {
            let _ = write!(
                s,
                "| {} | {} | {} |",
                md_escape(&row.label),
                row.n,
                scale_label(row.fit.scale)
            );
            for t in &row.terms {
                let _ = write!(s, " {} | {} |", effect_cell(t), p_cell(t.p_value, alpha, k));
            }
            s.push('\n');
        }
    }
    let b_note = if meta.options.standardize_outcomes {
        "B: difference in the outcome in standard-deviation units"
    } else {
        "B: mean difference"
    };
    let _ = writeln!(
        s,
        "\n{b_note}; RR: risk ratio (modified Poisson, prevalence > {}); OR: odds ratio (logistic).",
        meta.options.family_threshold
    );
    let _ = writeln!(
        s,
        "\\* p < {alpha}; \\*\\* p < 0.01; \\*\\*\\* p < {:.6} (Bonferroni, {k} tests).",
        result.multiplicity.bonferroni_threshold
    );
    let m = &result.multiplicity;
    let _ = write!(
        s,
        "\nRejections at α = {alpha}: nominal {}, Bonferroni {}, Holm {}",
        m.rejected_nominal, m.rejected_bonferroni, m.rejected_holm
    );
    if let (Some(rw), Some(labels)) = (m.rejected_rw, &m.rw_labels) {
        let _ = write!(s, ", Romano–Wolf {rw} of {} continuous", labels.len());
    }
    s.push_str(".\n");
    if let Some(ni) = &result.null_interval {
        let _ = writeln!(
            s,
            "Global null: expected {} rejections, 95% null interval [{}, {}], observed {}, excess hits {}.",
            round2(ni.expected_rejections),
            ni.interval.0,
            ni.interval.1,
            ni.observed_rejections,
            round2(ni.excess_hits)
        );
    }
    if !result.standardized.is_empty() {
        s.push_str("\nStandardized variables (per-sd units):\n\n");
        for v in &result.standardized {
            let _ = writeln!(s, "- {}: mean {:.4}, sd {:.4}", v.variable, v.mean, v.sd);
        }
    }
    let _ = writeln!(
        s,
        "\nMissing data: {}; pooling: {}; seed {}; spec {}.",
        meta.missing_data,
        meta.pooling,
        meta.seed,
        &meta.spec_hash[..12.min(meta.spec_hash.len())]
    );
    for w in &meta.warnings {
        let _ = writeln!(s, "\nWarning: {w}");
    }
    s
}

fn markdown_evalues(result: &OutcomeWideResult) -> String {
    let mut s = String::from("# Robustness to unmeasured confounding\n\n");
    s.push_str("| Outcome | E-value (estimate) | E-value (CI limit) |\n|---|---:|---:|\n");
    for row in &result.rows {
        match &row.evalue {
            Some(e) => {
                let _ = writeln!(
                    s,
                    "| {} | {} | {} |",
                    md_escape(&row.label),
                    round2(e.evalue_point),
                    round2(e.evalue_ci)
                );
            }
            None => {
                let _ = writeln!(s, "| {} | n/a | n/a |", md_escape(&row.label));
            }
        }
    }
    s.push_str(
        "\nThe E-value is the minimum strength of association, on the risk-ratio scale, that an \
         unmeasured confounder would need with both exposure and outcome, conditional on the \
         measured covariates, to explain away the association. The CI column applies the same \
         formula to the confidence limit closest to the null (1 if the interval contains it).\n",
    );
    s
}

fn markdown_conversions(result: &OutcomeWideResult) -> String {
    let mut s = String::from("# Estimates on the risk-ratio scale\n\n");
    s.push_str("| Outcome | Estimate [95% CI] | RR [95% CI] | Conversion |\n|---|---|---|---|\n");
    for row in &result.rows {
        if let Some(e) = &row.evalue {
            let _ = writeln!(
                s,
                "| {} | {} {} | {} {} | {} |",
                md_escape(&row.label),
                scale_label(row.fit.scale),
                effect_cell(&row.fit),
                round2(e.rr_used),
                format_ci(e.rr_ci_used.0, e.rr_ci_used.1),
                md_escape(&e.conversion.join("; "))
            );
        }
    }
    s
}

impl Named for Markdown {
    fn name(&self) -> &'static str {
        "markdown"
    }
}

impl ReportEmitter for Markdown {
    fn render(&self, result: &OutcomeWideResult, opts: &ReportOptions) -> Result<Vec<ReportFile>> {
        let mut files = vec![
            ReportFile {
                name: "main_table.md".into(),
                contents: markdown_main(result),
            },
            ReportFile {
                name: "evalues.md".into(),
                contents: markdown_evalues(result),
            },
        ];
        if opts.conversions {
            files.push(ReportFile {
                name: "conversions.md".into(),
                contents: markdown_conversions(result),
            });
        }
        files.extend(common_files(result)?);
        Ok(files)
    }
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_main(result: &OutcomeWideResult) -> Result<String> {
    let m = &result.multiplicity;
    let rw_for = |label: &str| -> Option<f64> {
        let labels = m.rw_labels.as_ref()?;
        let i = labels.iter().position(|l| l == label)?;
        m.rw_adjusted.as_ref().map(|v| v[i])
    };
    let mut rows = Vec::new();
    for (i, row) in result.rows.iter().enumerate() {
        for t in &row.terms {
            let (est, (lo, hi)) = t.natural_scale();
            let summary = t.term == row.fit.term;
            rows.push(vec![
                row.label.clone(),
                row.outcome.clone(),
                t.term.clone(),
                row.family.name().to_string(),
                scale_label(t.scale).to_string(),
                row.n.to_string(),
                t.estimate.to_string(),
                t.se.to_string(),
                t.ci.0.to_string(),
                t.ci.1.to_string(),
                est.to_string(),
                lo.to_string(),
                hi.to_string(),
                t.p_value.to_string(),
                format_p(t.p_value),
                stars(t.p_value, m.alpha, m.k).to_string(),
                if summary { m.holm_adjusted[i].to_string() } else { String::new() },
                if summary { opt(rw_for(&row.label)) } else { String::new() },
                opt(row.prevalence),
            ]);
        }
    }
    csv_string(
        &[
            "label", "outcome", "term", "family", "scale", "n", "estimate", "se", "ci_lower",
            "ci_upper", "natural_estimate", "natural_ci_lower", "natural_ci_upper", "p_value",
            "p_display", "stars", "holm_p", "romano_wolf_p", "prevalence",
        ],
        rows,
    )
}

fn csv_evalues(result: &OutcomeWideResult) -> Result<String> {
    let rows = result
        .rows
        .iter()
        .filter_map(|row| {
            row.evalue.as_ref().map(|e| {
                vec![
                    row.label.clone(),
                    e.evalue_point.to_string(),
                    e.evalue_ci.to_string(),
                    round2(e.evalue_point),
                    round2(e.evalue_ci),
                    e.rr_used.to_string(),
                    e.rr_ci_used.0.to_string(),
                    e.rr_ci_used.1.to_string(),
                    e.conversion.join("; "),
                ]
            })
        })
        .collect();
    csv_string(
        &[
            "label", "evalue_point", "evalue_ci", "evalue_point_2dp", "evalue_ci_2dp", "rr_used",
            "rr_ci_lower", "rr_ci_upper", "conversion",
        ],
        rows,
    )
}

fn csv_standardized(result: &OutcomeWideResult) -> Result<String> {
    csv_string(
        &["variable", "mean", "sd"],
        result
            .standardized
            .iter()
            .map(|v| vec![v.variable.clone(), v.mean.to_string(), v.sd.to_string()])
            .collect(),
    )
}

impl Named for Csv {
    fn name(&self) -> &'static str {
        "csv"
    }
}

impl ReportEmitter for Csv {
    fn render(&self, result: &OutcomeWideResult, opts: &ReportOptions) -> Result<Vec<ReportFile>> {
        let mut files = vec![
            ReportFile {
                name: "main_table.csv".into(),
                contents: csv_main(result)?,
            },
            ReportFile {
                name: "evalues.csv".into(),
                contents: csv_evalues(result)?,
            },
            ReportFile {
                name: "standardized_sds.csv".into(),
                contents: csv_standardized(result)?,
            },
        ];
        if opts.conversions {
            let rows = result
                .rows
                .iter()
                .filter_map(|row| {
                    row.evalue.as_ref().map(|e| {
                        let (est, (lo, hi)) = row.fit.natural_scale();
                        vec![
                            row.label.clone(),
                            scale_label(row.fit.scale).to_string(),
                            est.to_string(),
                            lo.to_string(),
                            hi.to_string(),
                            e.rr_used.to_string(),
                            e.rr_ci_used.0.to_string(),
                            e.rr_ci_used.1.to_string(),
                            e.conversion.join("; "),
                        ]
                    })
                })
                .collect();
            files.push(ReportFile {
                name: "conversions.csv".into(),
                contents: csv_string(
                    &[
                        "label", "scale", "estimate", "ci_lower", "ci_upper", "rr", "rr_ci_lower",
                        "rr_ci_upper", "conversion",
                    ],
                    rows,
                )?,
            });
        }
        files.extend(common_files(result)?);
        Ok(files)
    }
}

impl Named for Json {
    fn name(&self) -> &'static str {
        "json"
    }
}

impl ReportEmitter for Json {
    fn render(&self, result: &OutcomeWideResult, _opts: &ReportOptions) -> Result<Vec<ReportFile>> {
        common_files(result)
    }
}

/// Renders `result` in the named format without touching the filesystem.
pub fn render_report(result: &OutcomeWideResult, format: &str, opts: &ReportOptions) -> Result<Vec<ReportFile>> {
    let reg = emitter_registry();
    let emitter = reg.get(format)?;
    if result.rows.is_empty() {
        return Err(Error::Empty("result has no rows to report".into()));
    }
    emitter.render(result, opts)
}

/// Renders and writes the report files into `out_dir`, creating it if needed.
pub fn emit_report(
    result: &OutcomeWideResult,
    format: &str,
    out_dir: &Path,
    opts: &ReportOptions,
) -> Result<Vec<PathBuf>> {
    let files = render_report(result, format, opts)?;
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::with_capacity(files.len());
    for f in files {
        let path = out_dir.join(&f.name);
        std::fs::write(&path, f.contents)?;
        written.push(path);
    }
    Ok(written)
}
