use thiserror::Error;

/// Errors raised by the permutation-testing library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("cannot compose {left} with {right}")]
    InvalidComposition { left: String, right: String },

    #[error("invalid group element: {0}")]
    InvalidElement(String),

    #[error(
        "group has {cardinality} elements, above the enumeration cap of {cap}; use random sampling"
    )]
    GroupTooLarge { cardinality: String, cap: u128 },

    #[error("{classes} equivalence classes exceed the cap of {cap}")]
    TooManyClasses { classes: String, cap: u128 },

    #[error("unsupported design: {0}")]
    UnsupportedDesign(String),

    #[error("infeasible sampling plan: {0}")]
    PlanInfeasible(String),

    #[error("draw does not contain the identity; naive plans must be explicitly allowed")]
    RefusedNaivePlan,

    #[error("alpha must lie in [0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("null sampler failed: {0}")]
    Sampler(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Runtime infeasibility, as opposed to bad input.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            Error::GroupTooLarge { .. } | Error::TooManyClasses { .. } | Error::PlanInfeasible(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
