use std::fmt;

/// Errors produced by the graphon laboratory.
#[derive(Debug)]
pub enum Error {
    /// Unknown builtin kernel name.
    UnknownKernel(String),
    /// A parameter violated its precondition (message names it).
    InvalidParam(String),
    /// Array dimensions do not agree.
    DimensionMismatch { expected: String, got: String },
    /// The integrator produced a non-finite state at the reported time.
    NonFiniteState { time: f64 },
    /// Jacobi diagonalization did not converge within the sweep budget.
    JacobiNoConvergence { sweeps: usize },
    /// Perron computation requires a topology that is a disjoint union of
    /// strongly connected components.
    NotDisjointUnion,
    /// A row has zero in-degree inside its component.
    ZeroInDegree { agent: usize },
    /// The Perron solve produced a non-positive entry, which signals
    /// numerically broken connectivity.
    NonPositivePerron { agent: usize },
    /// An operation that assumes a symmetric kernel was handed an
    /// asymmetric one.
    AsymmetricKernel,
    /// Envelope evaluation is missing a required constant.
    MissingConstant(&'static str),
    /// Decay-rate fitting needs at least three tail points.
    TooFewTailPoints { got: usize },
    /// Configuration file error with location.
    Config {
        line: usize,
        field: String,
        message: String,
    },
    /// I/O error with path context.
    Io {
        path: String,
        source: std::io::Error,
    },
    /// Malformed data file (grid kernels, CSV states).
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnknownKernel(name) => write!(f, "unknown kernel name `{name}`"),
            Error::InvalidParam(msg) => write!(f, "invalid parameter: {msg}"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NonFiniteState { time } => {
                write!(f, "non-finite state encountered at t = {time}")
            }
            Error::JacobiNoConvergence { sweeps } => {
                write!(
                    f,
                    "Jacobi diagonalization did not converge after {sweeps} sweeps"
                )
            }
            Error::NotDisjointUnion => {
                write!(
                    f,
                    "topology is not a disjoint union of strongly connected components"
                )
            }
            Error::ZeroInDegree { agent } => {
                write!(f, "agent {agent} has zero in-degree inside its component")
            }
            Error::NonPositivePerron { agent } => {
                write!(
                    f,
                    "Perron solve produced a non-positive weight at agent {agent}"
                )
            }
            Error::AsymmetricKernel => write!(f, "operation requires a symmetric kernel"),
            Error::MissingConstant(name) => write!(f, "missing required constant `{name}`"),
            Error::TooFewTailPoints { got } => {
                write!(f, "decay-rate fit needs at least 3 tail points, got {got}")
            }
            Error::Config {
                line,
                field,
                message,
            } => {
                write!(f, "config error at line {line}, field `{field}`: {message}")
            }
            Error::Io { path, source } => write!(f, "io error on `{path}`: {source}"),
            Error::Parse {
                path,
                line,
                message,
            } => {
                write!(f, "parse error in `{path}` at line {line}: {message}")
            }
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}
