//! Shared error type. Constructors, simulators, and fitters all return
//! [`Result`]; variants are grouped by origin so callers can map them to
//! coarse exit codes without string matching.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A circuit failed structural validation (arity, qubit bounds,
    /// parameter count, or an unsupported width).
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    /// A gate outside the native set (or malformed within it) was found.
    /// Reports the first offending gate.
    #[error("gate {index} is not a valid native gate: {reason}")]
    NonNativeGate { index: usize, reason: String },

    /// Circuit text or CSV input could not be parsed.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// A configuration value is out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A noise-model parameter is out of range.
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),

    /// A folding request cannot be satisfied (for example lambda < 1, or a
    /// plan replayed against a different circuit).
    #[error("folding error: {0}")]
    Folding(String),

    /// Twirling was requested for a gate without a known conjugation rule.
    #[error("cannot twirl gate {index}: {reason}")]
    Twirl { index: usize, reason: String },

    /// Readout confusion matrix is singular or malformed.
    #[error("readout model error: {0}")]
    Readout(String),

    /// An extrapolation fit could not be performed on the given points.
    #[error("fit error: {0}")]
    Fit(String),

    /// A numerical invariant was violated at run time (trace drift,
    /// non-finite intermediate, empty sample).
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that indicate bad inputs rather than a numerical
    /// failure mid-computation. The CLI maps these to exit code 2 and the
    /// rest to exit code 3.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidCircuit(_)
                | Error::NonNativeGate { .. }
                | Error::Parse { .. }
                | Error::InvalidConfig(_)
                | Error::InvalidNoise(_)
                | Error::Io(_)
        )
    }
}
