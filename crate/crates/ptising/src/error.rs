//! Error type shared across the crate.
//!
//! Every failure is classified into one of three broad categories so that the
//! command-line front end can map it onto a stable process exit code:
//! configuration / validation problems (exit 1), numerical failures (exit 2)
//! and storage / IO failures (exit 3).

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building chains, diagonalizing them or
/// shuttling results to disk.
#[derive(Debug, Error)]
pub enum Error {
    /// `n_sites` outside the supported range.
    #[error("invalid chain length n_sites = {0}; need 1 <= n_sites <= 30")]
    BadLength(usize),

    /// Periodic rings must have an even number of sites so the staggered
    /// imaginary field closes consistently around the loop.
    #[error("periodic boundary requires an even number of sites, got n_sites = {0}")]
    OddPeriodic(usize),

    /// The transverse field must be strictly positive; it sets the unit of
    /// energy for every dimensionless ratio in the crate.
    #[error("transverse field delta must be > 0, got {0}")]
    BadDelta(f64),

    /// The gain/loss amplitude is a magnitude and cannot be negative.
    #[error("gain amplitude must be >= 0, got {0}")]
    BadGain(f64),

    /// A parameter that must be finite was NaN or infinite.
    #[error("parameter {name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },

    /// Dense matrix construction refused because the dimension is too large.
    #[error("dense matrix for n_sites = {n_sites} (dim = {dim}) exceeds the dense limit of {limit} sites; use the matrix-free path")]
    DenseTooLarge {
        n_sites: usize,
        dim: usize,
        limit: usize,
    },

    /// A state vector had the wrong length for the chain it was applied to.
    #[error("state vector length {got} does not match Hilbert-space dimension {expect}")]
    DimensionMismatch { got: usize, expect: usize },

    /// A site index outside `1..=n_sites`.
    #[error("site index {site} out of range for a chain of {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    /// The dense LAPACK eigensolver reported a failure.
    #[error("dense eigensolver failed: {0}")]
    Eigensolver(String),

    /// The iterative eigensolver ran out of iterations before reaching the
    /// requested residual tolerance.
    #[error("iterative eigensolver did not converge within {iterations} iterations (worst residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// Bracketing search was asked to refine an interval whose endpoints do
    /// not straddle the feature being located.
    #[error("bracket [{lo}, {hi}] does not straddle a {what}")]
    BadBracket { lo: f64, hi: f64, what: &'static str },

    /// A quantity that is only defined for specific chain shapes was
    /// requested for an unsupported one.
    #[error("{0}")]
    Unsupported(String),

    /// Structure factor at the probe momentum was non-positive, so the
    /// correlation length is undefined.
    #[error("structure factor S(q1) = {0:.6e} is not positive; correlation length undefined")]
    BadStructureFactor(f64),

    /// Scaling curves never intersect in the swept window.
    #[error("no curve crossing found: {0}")]
    NoCrossing(String),

    /// Self-consistency iteration for the cluster mean field failed.
    #[error("mean-field self-consistency did not settle: {0}")]
    SelfConsistency(String),

    /// Malformed run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Checkpoint data did not match the sweep that produced it.
    #[error("checkpoint mismatch: {0}")]
    CheckpointMismatch(String),

    /// Wrapper for filesystem problems, tagged with the path involved.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Serialization to JSON failed (corrupt checkpoint line, etc.).
    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    /// Stable process exit code for the CLI: 1 = configuration, 2 =
    /// numerical, 3 = storage.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BadLength(_)
            | Error::OddPeriodic(_)
            | Error::BadDelta(_)
            | Error::BadGain(_)
            | Error::NonFinite { .. }
            | Error::DenseTooLarge { .. }
            | Error::DimensionMismatch { .. }
            | Error::SiteOutOfRange { .. }
            | Error::Unsupported(_)
            | Error::Config(_) => 1,
            Error::Eigensolver(_)
            | Error::NoConvergence { .. }
            | Error::BadBracket { .. }
            | Error::BadStructureFactor(_)
            | Error::NoCrossing(_)
            | Error::SelfConsistency(_) => 2,
            Error::CheckpointMismatch(_) | Error::Io { .. } | Error::Serde(_) => 3,
        }
    }

    /// Attach a path to a raw IO error.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
