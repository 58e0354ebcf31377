use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("linear system is singular")]
    SingularSystem,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("no {0} columns clear the independence tolerance")]
    NoIndependentSet(usize),

    #[error("arm {arm} out of range for {n_arms} arms")]
    ArmOutOfRange { arm: usize, n_arms: usize },

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inconsistent parameters: {0}")]
    InconsistentParameters(String),

    #[error("invalid ordering: {0}")]
    InvalidOrdering(String),

    #[error("need at least {need} arms, have {have}")]
    TooFewArms { need: usize, have: usize },

    #[error("every sampled subset was singular ({0} skipped)")]
    AllSubsetsSingular(usize),

    #[error("decision requested before the sampling phase completed")]
    DecisionBeforeSamplingComplete,

    #[error("empty sample")]
    EmptySample,

    #[error("k = {0} is too small; boosting needs k > e (k >= 3)")]
    KTooSmall(usize),

    #[error(
        "separation too small: l1 = {l1} does not exceed sqrt(ln k)(r_p + r_s) = {boundary}; \
         increase k so that k/ln k > b/l1^2"
    )]
    SeparationTooSmall { l1: f64, boundary: f64 },

    #[error("no k <= {k_max} satisfies k/ln k > {target}")]
    NoFeasibleK { target: f64, k_max: usize },

    #[error("empty file: {0}")]
    EmptyFile(String),

    #[error("requested {requested} rows but only {available} records are available")]
    TooFewRecords { requested: usize, available: usize },

    #[error("fewer than {k} distinct points")]
    DegeneratePoints { k: usize },

    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    #[error("nothing to export")]
    NothingToExport,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
