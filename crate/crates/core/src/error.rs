use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Two measures (or a measure and an involution) live on different outcome sets.
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid involution: {0}")]
    InvalidInvolution(String),

    /// An enumeration or atom count exceeded its configured cap.
    #[error("capacity exceeded: {what} requires {required}, cap is {cap}{hint}")]
    Capacity {
        what: &'static str,
        required: u128,
        cap: u128,
        hint: &'static str,
    },

    #[error("unknown column {0}")]
    UnknownColumn(String),

    #[error("label {0} has zero probability; cannot condition on it")]
    ZeroLabelMarginal(u8),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("degenerate labels: {0}")]
    DegenerateLabel(String),

    #[error("empty input: {0}")]
    Empty(String),

    /// A hypothesis of a lemma or a check was not satisfied by the inputs.
    #[error("precondition violated: {0}")]
    Contract(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn capacity(what: &'static str, required: u128, cap: u128) -> Self {
        Error::Capacity {
            what,
            required,
            cap,
            hint: "",
        }
    }

    /// True for errors caused by enumeration limits rather than bad input.
    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
