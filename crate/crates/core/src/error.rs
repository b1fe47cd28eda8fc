use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("dimension mismatch at `{path}`: expected {expected}, found {found}")]
    DimensionMismatch {
        path: String,
        expected: usize,
        found: usize,
    },

    #[error("non-stochastic row at `{path}`: entries sum to {sum}")]
    NonStochasticRow { path: String, sum: f64 },

    #[error("value out of range at `{path}`: {value} ({message})")]
    OutOfRange {
        path: String,
        value: f64,
        message: String,
    },

    #[error("infeasible communication constraints: {0}")]
    InfeasibleConstraints(String),

    #[error("{what} enumeration has {count} elements, above the cap of {cap}")]
    EnumerationCap {
        what: &'static str,
        count: u128,
        cap: u128,
    },

    /// Conditioning on an event of probability zero.
    #[error("belief update has a zero normalizer (probability-zero branch)")]
    ZeroNormalizer,

    #[error("belief mass drifted by {0:e} before renormalization")]
    BeliefDrift(f64),

    #[error("illegal observation: {0}")]
    IllegalOutcome(String),

    #[error("constraints demand communication but the budget is exhausted (s_a={since_last}, s_b={count})")]
    ForcedCommunicationOverBudget { since_last: u32, count: u32 },

    #[error("reachable belief set exceeded {cap} keys; use the grid solver instead")]
    ReachableSetCap { cap: usize },

    #[error("value iteration did not converge in {iterations} sweeps (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("no policy entry for {0}")]
    UnsolvedKey(String),

    #[error("unsupported scenario feature: {0}")]
    Unsupported(String),

    #[error("history has probability zero under the model")]
    ZeroProbabilityHistory,

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
