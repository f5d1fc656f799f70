use thiserror::Error;

/// Library-wide error type.
///
/// Capacity failures carry the name of the module that refused the work so
/// callers (and the CLI exit code) can tell them apart from contract
/// violations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("group family mismatch: {0}")]
    FamilyMismatch(String),

    #[error("invalid group element: {0}")]
    InvalidElement(String),

    #[error("invalid generating set: {0}")]
    InvalidGenerators(String),

    #[error("no word of length <= {max_radius} represents {element}")]
    NotFound { element: String, max_radius: u32 },

    #[error("{module}: capacity exceeded ({what}: {requested} > budget {budget})")]
    Capacity {
        module: &'static str,
        what: String,
        requested: u128,
        budget: u128,
    },

    #[error("domain exhausted: {0}")]
    DomainExhausted(String),

    #[error("radius mismatch: {left} vs {right}")]
    RadiusMismatch { left: u32, right: u32 },

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("pseudo-orbit condition violated: {0}")]
    PseudoOrbitViolation(String),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("relation check failed: {0}")]
    Relation(String),

    #[error("not hyperbolic: {0}")]
    NotHyperbolic(String),

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity { .. })
    }

    pub(crate) fn capacity(
        module: &'static str,
        what: impl Into<String>,
        requested: impl TryInto<u128>,
        budget: impl TryInto<u128>,
    ) -> Self {
        Error::Capacity {
            module,
            what: what.into(),
            requested: requested.try_into().unwrap_or(u128::MAX),
            budget: budget.try_into().unwrap_or(u128::MAX),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
