use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use outwide::data::write_table;
use outwide::pipeline::{
    canonical_mode, classify_design_level, run, select_covariates, AnalysisSpec, CovariateTag,
    DesignFlags, MissingStrategy, OutcomeWideResult, RunInput,
};
use outwide::report::{emit_report, ReportOptions};
use outwide::sensitivity::{evalue_for_estimate, EffectEstimate, EffectMeasure};
use outwide::simulate::{synthetic_cohort, synthetic_spec};

#[derive(Parser)]
#[command(name = "outwide", version, about = "Outcome-wide longitudinal analyses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the battery described by a config file and write the report.
    Run(RunArgs),
    /// E-value for one published estimate and confidence interval.
    Evalue(EvalueArgs),
    /// Apply the covariate selection rule to the tags in a config file.
    SelectCovariates {
        #[arg(long)]
        config: PathBuf,
    },
    /// Place a design in the evidence hierarchy.
    ClassifyDesign(DesignArgs),
    /// Re-render a saved result.json in another format.
    Report(ReportArgs),
    /// Write a synthetic cohort and a spec that analyses it.
    Simulate {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Markdown,
    Csv,
    Json,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Markdown => "markdown",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    OutcomeWide,
    Lagged,
    Interaction,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::OutcomeWide => "outcome-wide",
            Mode::Lagged => "lagged",
            Mode::Interaction => "interaction",
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Data file; overrides [data].path.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Drop incomplete rows instead of imputing.
    #[arg(long)]
    complete_case: bool,
    /// Also write the risk-ratio conversion table.
    #[arg(long)]
    conversions: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    Rr,
    OrRare,
    OrCommon,
    Smd,
}

#[derive(Args)]
struct EvalueArgs {
    #[arg(long, allow_negative_numbers = true)]
    estimate: f64,
    #[arg(long, allow_negative_numbers = true)]
    lower: f64,
    #[arg(long, allow_negative_numbers = true)]
    upper: f64,
    #[arg(long, value_enum, default_value = "rr")]
    measure: Measure,
    /// Standard error, used for standardized mean differences.
    #[arg(long)]
    se: Option<f64>,
}

#[derive(Args)]
struct DesignArgs {
    /// Read flags from the [design] section of a config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    longitudinal: bool,
    #[arg(long)]
    baseline_covariates: bool,
    #[arg(long)]
    baseline_outcome: bool,
    #[arg(long)]
    prior_exposure: bool,
    #[arg(long)]
    randomized: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// A result.json written by `run`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
    #[arg(long)]
    conversions: bool,
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut spec = AnalysisSpec::from_file(&args.config)?;
    if let Some(data) = &args.data {
        let abs = std::path::absolute(data).with_context(|| format!("resolving {}", data.display()))?;
        spec.data.path = Some(abs.to_string_lossy().into_owned());
    }
    if let Some(seed) = args.seed {
        spec.options.seed = seed;
    }
    if let Some(mode) = args.mode {
        spec.options.mode = canonical_mode(mode.name());
    }
    if args.complete_case {
        spec.options.missing = MissingStrategy::CompleteCase;
    }
    spec.validate()?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let input = RunInput::load(&spec, base)?;
    let result = run(&spec, &input)?;
    for w in &result.metadata.warnings {
        log::warn!("{w}");
    }
    write_report(&result, args.format, &args.out, args.conversions)
}

fn write_report(result: &OutcomeWideResult, format: Format, out: &Path, conversions: bool) -> Result<()> {
    let files = emit_report(result, format.name(), out, &ReportOptions { conversions })?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn cmd_evalue(args: EvalueArgs) -> Result<()> {
    let measure = match args.measure {
        Measure::Rr => EffectMeasure::RiskRatio,
        Measure::OrRare => EffectMeasure::OddsRatioRare,
        Measure::OrCommon => EffectMeasure::OddsRatioCommon,
        Measure::Smd => EffectMeasure::MeanDifferenceStandardized,
    };
    let mut est = EffectEstimate::new(args.estimate, args.lower, args.upper, measure);
    if let Some(se) = args.se {
        est = est.with_se(se);
    }
    print_json(&evalue_for_estimate(&est)?)
}

#[derive(Deserialize)]
struct TagFile {
    #[serde(default)]
    covariate_tags: Vec<CovariateTag>,
    design: Option<DesignFlags>,
}

fn read_tag_file(path: &Path) -> Result<TagFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_select(config: &Path) -> Result<()> {
    let file = read_tag_file(config)?;
    if file.covariate_tags.is_empty() {
        bail!("{} has no [[covariate_tags]] entries", config.display());
    }
    print_json(&select_covariates(&file.covariate_tags))
}

fn cmd_classify(args: DesignArgs) -> Result<()> {
    let flags = match &args.config {
        Some(path) => read_tag_file(path)?
            .design
            .with_context(|| format!("{} has no [design] section", path.display()))?,
        None => DesignFlags {
            longitudinal: args.longitudinal,
            baseline_covariates: args.baseline_covariates,
            baseline_outcome_controlled: args.baseline_outcome,
            prior_exposure_controlled: args.prior_exposure,
            randomized: args.randomized,
        },
    };
    print_json(&classify_design_level(&flags)?)
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let result: OutcomeWideResult = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.input.display()))?;
    write_report(&result, args.format, &args.out, args.conversions)
}

fn cmd_simulate(n: usize, seed: u64, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let ds = synthetic_cohort(n, seed)?;
    let data = out.join("cohort.csv");
    write_table(&ds, std::fs::File::create(&data)?, b',', "NA")?;
    let spec = synthetic_spec(Some("cohort.csv"), seed);
    let config = out.join("spec.toml");
    std::fs::write(&config, spec.to_toml()?)?;
    println!("{}\n{}", data.display(), config.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Evalue(args) => cmd_evalue(args),
        Command::SelectCovariates { config } => cmd_select(&config),
        Command::ClassifyDesign(args) => cmd_classify(args),
        Command::Report(args) => cmd_report(args),
        Command::Simulate { n, seed, out } => cmd_simulate(n, seed, &out),
    }
}

/// 2 for numerical failures, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<outwide::Error>() {
        Some(e) if e.is_numerical() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
