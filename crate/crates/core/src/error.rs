//! Error type shared across the crate.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the pipeline, from geometry validation to
/// linear solves and curve identification.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid plate or hole-layout geometry.
    Geometry(String),
    /// The film mesh cannot be built for the requested element size.
    Mesh(String),
    /// An argument lies outside an operation's domain.
    Domain(String),
    /// Inconsistent inputs at system assembly.
    Assembly(String),
    /// The linear system could not be factorized or solved accurately.
    Solve(String),
    /// The least-squares fit is singular or under-determined.
    Fit(String),
    /// No interior maximum exists in the fitted window.
    Peak(String),
    /// A half-power crossing lies outside the fitted window.
    Bandwidth(String),
    /// Index out of range.
    Index(String),
    /// A config document was rejected; carries line and field context.
    Config {
        line: usize,
        field: String,
        message: String,
    },
    /// An input file could not be parsed; carries the offending line.
    Parse { line: usize, message: String },
    /// I/O failure, stringified to keep the error type cloneable.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Geometry(m) => write!(f, "geometry error: {m}"),
            Error::Mesh(m) => write!(f, "mesh error: {m}"),
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Assembly(m) => write!(f, "assembly error: {m}"),
            Error::Solve(m) => write!(f, "solve error: {m}"),
            Error::Fit(m) => write!(f, "fit error: {m}"),
            Error::Peak(m) => write!(f, "peak error: {m}"),
            Error::Bandwidth(m) => write!(f, "bandwidth error: {m}"),
            Error::Index(m) => write!(f, "index error: {m}"),
            Error::Config {
                line,
                field,
                message,
            } => write!(f, "config error at line {line}, field `{field}`: {message}"),
            Error::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            Error::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
