use core::fmt;

/// Errors reported by the samplers, codecs and statistical tests.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A numeric argument lies outside its domain.
    InvalidParameter { name: &'static str, value: f64 },
    /// The operation needs more extant species than the input has.
    TooFewExtant { required: usize, found: usize },
    /// A contour path is not a valid excursion.
    NotAnExcursion { index: usize, reason: &'static str },
    /// A tree violates one of its structural invariants.
    InvalidTree { node: usize, reason: &'static str },
    /// A rejection sampler ran out of attempts.
    BudgetExhausted { attempts: u64 },
    /// A goodness-of-fit test received no data.
    EmptySample,
    /// A goodness-of-fit test received too little data to be meaningful.
    TooFewSamples { required: usize, found: usize },
    /// Fewer than two cells remain after merging sparse chi-square cells.
    DegenerateBinning { cells: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, value } => {
                write!(f, "invalid value {value} for parameter `{name}`")
            }
            Error::TooFewExtant { required, found } => {
                write!(f, "need at least {required} extant species, found {found}")
            }
            Error::NotAnExcursion { index, reason } => {
                write!(f, "contour vertex {index}: {reason}")
            }
            Error::InvalidTree { node, reason } => write!(f, "species {node}: {reason}"),
            Error::BudgetExhausted { attempts } => {
                write!(f, "rejection budget exhausted after {attempts} attempts")
            }
            Error::EmptySample => f.write_str("empty sample"),
            Error::TooFewSamples { required, found } => {
                write!(f, "need at least {required} samples, found {found}")
            }
            Error::DegenerateBinning { cells } => {
                write!(f, "only {cells} cell(s) left after merging sparse cells")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter { name, value })
    }
}
