use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {x} lies outside the admissible domain {context}")]
    Domain { x: f64, context: String },

    #[error("|Df({x})| = {deriv:e} is below the derivative floor")]
    CriticalPoint { x: f64, deriv: f64 },

    #[error("budget exceeded: {requested} {what} requested, limit is {limit}")]
    Budget {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    #[error("periodic point for word {word:?} did not converge (residual {residual:e})")]
    Convergence { word: Vec<u8>, residual: f64 },

    #[error("non-finite weight encountered ({context})")]
    NonFiniteWeight { context: String },

    #[error("power iteration stalled after {iterations} iterations (gap {gap:e})")]
    PowerIterationStall { iterations: usize, gap: f64 },

    #[error("base interval [{lo}, {hi}] is not a union of cylinders admitting full first-return branches")]
    NotMarkovBase { lo: f64, hi: f64 },

    #[error("countable sum failed the tail test (ratio per unit time {ratio})")]
    DivergentSum { ratio: f64 },

    #[error("bracket error: {0}")]
    Bracket(String),

    #[error("potential is not normalized: P(phi) = {pressure:e}")]
    NotNormalized { pressure: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("cylinders cannot resolve radius {radius:e} (depth limit {depth})")]
    Depth { radius: f64, depth: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("at grid point {param} = {value}: {source}")]
    AtGridPoint {
        param: &'static str,
        value: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, param: &'static str, value: f64) -> Self {
        Error::AtGridPoint {
            param,
            value,
            source: Box::new(self),
        }
    }

    /// The innermost error, unwrapping grid-point tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtGridPoint { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
