use thiserror::Error;

/// Errors produced by group arithmetic, system evaluation and the entropy pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("chart violation in {group}: {detail}")]
    ChartViolation { group: String, detail: String },

    #[error("point has no canonical logarithm in {group}: {detail}")]
    OutsideChart { group: String, detail: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("control {control:?} lies outside the control box")]
    ControlOutOfRange { control: Vec<f64> },

    #[error("control word has length {len}, need at least {needed}")]
    WordTooShort { len: usize, needed: usize },

    #[error("differential at identity is singular (|det| = {det:e})")]
    SingularDifferential { det: f64 },

    #[error("eigenvalue computation failed: {0}")]
    ConvergenceFailure(String),

    #[error("eigenvalue {re}+{im}i has modulus within {eta:e} of 1 but is not unit-modulus")]
    AmbiguousClassification { re: f64, im: f64, eta: f64 },

    #[error("growth constant fit failed: {0}")]
    FitFailure(String),

    #[error("no density witness found for target {target:?} up to time {t_max}")]
    WitnessNotFound { target: Vec<f64>, t_max: f64 },

    #[error("stable subgroup is not closed; quotient G/G- is unavailable")]
    StableSubgroupNotClosed,

    #[error("quotient construction not supported: {0}")]
    UnsupportedQuotient(String),

    #[error("complement subspace is not invariant (residual {residual:e})")]
    InvarianceViolated { residual: f64 },

    #[error("projected K has zero measure")]
    ZeroMeasureK,

    #[error("{failed} of {total} grid points admit no word of length {horizon} over the alphabet")]
    NotAdmissibleAtResolution {
        failed: usize,
        total: usize,
        horizon: usize,
        points: Vec<usize>,
    },

    #[error("evaluation budget of {budget} exceeded")]
    BudgetExceeded { budget: u64 },

    #[error("grid point {point} is covered by no candidate word at horizon {n}")]
    InfeasibleCover { point: usize, n: usize },

    #[error("need at least {needed} data points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping `Stage` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
