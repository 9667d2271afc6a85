use std::fmt;

use thiserror::Error;

/// Names of the standing assumptions a model must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Assumption {
    SA2,
    SA3,
    SA4,
    SA5,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Assumption::SA2 => "SA2",
            Assumption::SA3 => "SA3",
            Assumption::SA4 => "SA4",
            Assumption::SA5 => "SA5",
        };
        f.write_str(s)
    }
}

/// A single reason a parameter set was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// A probability vector does not sum to one.
    Normalization {
        what: String,
        total: f64,
    },
    /// A probability is negative, NaN or infinite.
    InvalidProbability {
        what: String,
        value: f64,
    },
    /// The same (x0, x1) pair appears twice in a joint law.
    DuplicateSupport {
        law: String,
        x0: u32,
        x1: u32,
    },
    /// A joint law has no support points.
    EmptyLaw {
        law: String,
    },
    Assumption {
        name: Assumption,
        detail: String,
    },
}

impl Violation {
    pub fn is_normalization(&self) -> bool {
        matches!(self, Violation::Normalization { .. })
    }

    pub fn assumption(&self) -> Option<Assumption> {
        match self {
            Violation::Assumption { name, .. } => Some(*name),
            _ => None,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Normalization { what, total } => {
                write!(f, "NormalizationError: {what} sums to {total}, expected 1")
            }
            Violation::InvalidProbability { what, value } => {
                write!(f, "invalid probability {value} in {what}")
            }
            Violation::DuplicateSupport { law, x0, x1 } => {
                write!(f, "duplicate support point ({x0}, {x1}) in {law}")
            }
            Violation::EmptyLaw { law } => write!(f, "{law} has no support points"),
            Violation::Assumption { name, detail } => {
                write!(f, "AssumptionViolated({name}): {detail}")
            }
        }
    }
}

/// All violations found while validating a parameter set.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl ValidationError {
    pub fn has_assumption(&self, a: Assumption) -> bool {
        self.violations.iter().any(|v| v.assumption() == Some(a))
    }

    pub fn has_normalization(&self) -> bool {
        self.violations.iter().any(Violation::is_normalization)
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid model")?;
        for (i, v) in self.violations.iter().enumerate() {
            let sep = if i == 0 { ": " } else { "; " };
            write!(f, "{sep}{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Invalid(#[from] ValidationError),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("enumeration budget exceeded: {attempted} outcomes attempted, budget {budget}")]
    BudgetExceeded { attempted: u64, budget: u64 },

    #[error("all {attempted} replicates rejected by the conditioning event (observed survival frequency {survival_frequency})")]
    AllRejected {
        attempted: u64,
        survival_frequency: f64,
    },

    #[error("no contaminated {what} cells at generation {n} in any replicate")]
    NoContaminatedCells { what: String, n: u32 },

    #[error("parse error in {source_name} at line {line}, column {column}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("thread pool error: {0}")]
    ThreadPool(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
