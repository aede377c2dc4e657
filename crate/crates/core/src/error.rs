use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the library.
///
/// Numerical outcomes that are part of normal operation (a trajectory that
/// blows up, a closure that exceeds its dimension cap) are reported through
/// result values, not through this type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("variable lists differ: {left:?} vs {right:?}")]
    VariableMismatch { left: Vec<String>, right: Vec<String> },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch { what: &'static str, left: usize, right: usize },

    #[error("degree {degree} exceeds the input limit of {limit}")]
    DegreeTooHigh { degree: u32, limit: u32 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalog(String),

    #[error("domain error at t = {t}: {what}")]
    Domain { t: f64, what: String },

    #[error("symbol `{0}` has no value; bind it before evaluating")]
    UnboundSymbol(String),

    #[error("constraint `{relation}` violated at t = {t}")]
    Constraint { relation: String, t: f64 },

    #[error("{0} is not contained in the required span")]
    NotInSpan(String),

    #[error("trajectory blows up at t = {t}")]
    BlowUp { t: f64 },

    #[error("integration failed at t = {t}: {why}")]
    StepFailure { t: f64, why: String },

    #[error("t = {t} lies outside the covered range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("non-generic particular solutions: {0}")]
    NonGeneric(String),

    #[error("superposed solution has a pole near t = {t}")]
    SuperposedPole { t: f64 },

    #[error("csv: {0}")]
    Csv(String),
}

impl Error {
    /// Stable machine-readable code for this error.
    pub fn code(&self) -> &'static str {
        match self {
            Error::VariableMismatch { .. } => "variable_mismatch",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::DegreeTooHigh { .. } => "degree_too_high",
            Error::Invalid(_) => "invalid_input",
            Error::UnknownCatalog(_) => "unknown_catalog",
            Error::Domain { .. } => "domain_error",
            Error::UnboundSymbol(_) => "unbound_symbol",
            Error::Constraint { .. } => "constraint_violation",
            Error::NotInSpan(_) => "not_in_span",
            Error::BlowUp { .. } => "blow_up",
            Error::StepFailure { .. } => "step_failure",
            Error::OutOfRange { .. } => "out_of_range",
            Error::NonGeneric(_) => "non_generic",
            Error::SuperposedPole { .. } => "superposed_pole",
            Error::Csv(_) => "csv_error",
        }
    }

    /// True for failures of numerical machinery rather than malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::BlowUp { .. }
                | Error::StepFailure { .. }
                | Error::NonGeneric(_)
                | Error::SuperposedPole { .. }
                | Error::OutOfRange { .. }
        )
    }
}
