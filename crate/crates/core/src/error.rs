use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the analysis pipeline.
///
/// Variants fall into two groups: validation problems with the inputs
/// (schema, config, domain of arguments) and numerical failures during
/// fitting or resampling. [`Error::is_numerical`] separates them so the CLI
/// can map them onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ingestion error at row {row}, column '{column}': {message}")]
    Ingestion {
        row: usize,
        column: String,
        message: String,
    },

    #[error("duplicate header '{0}'")]
    DuplicateHeader(String),

    #[error("column '{0}' not found")]
    MissingColumn(String),

    #[error("column '{column}' has kind {actual}, expected {expected}")]
    WrongKind {
        column: String,
        expected: &'static str,
        actual: &'static str,
    },

    #[error("column '{0}' is degenerate (zero standard deviation)")]
    DegenerateColumn(String),

    #[error("column '{column}' has {found} distinct non-missing values, need at least {needed}")]
    TooFewDistinct {
        column: String,
        found: usize,
        needed: usize,
    },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("design matrix is rank deficient; collinear columns: {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("too few observations: n = {n}, p = {p}")]
    TooFewObservations { n: usize, p: usize },

    #[error("response is constant")]
    ConstantResponse,

    #[error("separation detected: coefficient '{term}' = {value:.3} exceeds the separation threshold")]
    Separation { term: String, value: f64 },

    #[error("IRLS did not converge after {iterations} iterations (max |score| = {max_score:.3e}, deviance = {deviance:.6})")]
    NonConvergence {
        iterations: usize,
        max_score: f64,
        deviance: f64,
    },

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("inverted interval: lower {lo} > upper {hi} (or estimate outside)")]
    InvertedInterval { lo: f64, hi: f64 },

    #[error("unsupported effect scale: {0}")]
    UnsupportedScale(String),

    #[error("standard error required for {0}")]
    MissingStandardError(&'static str),

    #[error("{needed} resamples required at minimum, got {got}")]
    TooFewResamples { needed: usize, got: usize },

    #[error("resample {index} failed: {source}")]
    Resample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("column '{column}' has only {observed} observed values, need at least {needed} to impute")]
    TooFewObserved {
        column: String,
        observed: usize,
        needed: usize,
    },

    #[error("cannot pool results with mixed families or scales")]
    MixedScales,

    #[error("outcome sets differ: {0}")]
    OutcomeMismatch(String),

    #[error("outcome '{outcome}' failed: {source}")]
    OutcomeFit {
        outcome: String,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid analysis spec: {0}")]
    Validation(String),

    #[error("inconsistent design flags: {0}")]
    InconsistentDesign(String),

    #[error("unknown {kind} '{name}' (available: {})", .available.join(", "))]
    Unknown {
        kind: &'static str,
        name: String,
        available: Vec<String>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::RankDeficient { .. }
            | Error::TooFewObservations { .. }
            | Error::ConstantResponse
            | Error::Separation { .. }
            | Error::NonConvergence { .. }
            | Error::Singular(_)
            | Error::DegenerateColumn(_) => true,
            Error::Resample { source, .. } | Error::OutcomeFit { source, .. } => {
                source.is_numerical()
            }
            _ => false,
        }
    }

    pub(crate) fn for_outcome(self, outcome: &str) -> Error {
        Error::OutcomeFit {
            outcome: outcome.to_string(),
            source: Box::new(self),
        }
    }
}
