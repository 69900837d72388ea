use std::fmt;

/// Errors produced by channel parsing, solvers and bound evaluators.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Channel spec text could not be parsed; `line` is 1-based.
    Parse { line: usize, message: String },
    /// A channel failed validation (stochasticity, dimensions, support).
    InvalidChannel(String),
    /// An argument is outside its domain (s <= 0, epsilon outside (0,1), ...).
    InvalidArgument(String),
    /// The (Q, W) pair is singular; the saddlepoint machinery needs c3 > 0.
    SingularChannel,
    /// Zero-dispersion or otherwise degenerate channel for the requested operation.
    DegenerateChannel(String),
    /// An iterative solver failed to converge.
    NoConvergence(String),
    /// Rate inversion found no sign change in the bracket.
    BracketFailure(String),
    /// An exact oracle was asked for an instance beyond its configured size.
    TooLarge(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            Error::InvalidChannel(m) => write!(f, "invalid channel: {m}"),
            Error::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            Error::SingularChannel => write!(f, "singular (Q, W) pair: saddlepoint quantities are undefined"),
            Error::DegenerateChannel(m) => write!(f, "degenerate channel: {m}"),
            Error::NoConvergence(m) => write!(f, "no convergence: {m}"),
            Error::BracketFailure(m) => write!(f, "bracket failure: {m}"),
            Error::TooLarge(m) => write!(f, "instance too large: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
