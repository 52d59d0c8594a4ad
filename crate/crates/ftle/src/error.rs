//! Error type shared across the crate.
//!
//! Variants are grouped by how the CLI maps them to exit codes: configuration
//! and argument problems (exit 2), numeric failures (exit 3), and file i/o or
//! format problems (exit 4).

use thiserror::Error;

pub type Result<T> = std::result::Result<T, FtleError>;

#[derive(Debug, Error)]
pub enum FtleError {
    /// A position left the field's domain further than the extrapolation
    /// margin allows. `axis` is 0 for x, 1 for y.
    #[error("position component {axis} = {value} outside [{lo}, {hi}] (domain plus margin)")]
    OutOfDomain {
        axis: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// A sample time outside the field's time span.
    #[error("time {t} outside field time span [{t_min}, {t_max}]")]
    OutOfTimeSpan { t: f64, t_min: f64, t_max: f64 },

    /// Inconsistent or out-of-range arguments to a library call.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Bad configuration file or CLI parameter set.
    #[error("configuration error: {0}")]
    Config(String),

    /// Trajectory integration failed (step exhaustion, non-finite state,
    /// diverging flow-map gradient). `trajectory` indexes into the batch.
    #[error("integration failed for trajectory {trajectory}: {reason}")]
    Integration { trajectory: usize, reason: String },

    /// A numeric postcondition could not be met (empty comparison region,
    /// singular closed-form window, degenerate tensor where one is required).
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// File does not start with the expected magic bytes.
    #[error("unrecognized file format{}", fmt_path(.path))]
    BadMagic { path: String },

    /// File carries an unsupported format version.
    #[error("unsupported format version {found} (expected {expected}){}", fmt_path(.path))]
    VersionMismatch {
        found: u32,
        expected: u32,
        path: String,
    },

    /// File ends before the declared payload does.
    #[error("truncated file{}", fmt_path(.path))]
    Truncated { path: String },

    /// Stored checksum does not match the payload.
    #[error("checksum mismatch{}", fmt_path(.path))]
    ChecksumMismatch { path: String },

    /// Structurally invalid file content.
    #[error("malformed file{}: {reason}", fmt_path(.path))]
    Malformed { path: String, reason: String },
}

fn fmt_path(path: &str) -> String {
    if path.is_empty() {
        String::new()
    } else {
        format!(" ({path})")
    }
}

impl FtleError {
    /// Process exit code the CLI uses for this error.
    pub fn exit_code(&self) -> i32 {
        use FtleError::*;
        match self {
            InvalidArgument(_) | Config(_) => 2,
            OutOfDomain { .. } | OutOfTimeSpan { .. } | Integration { .. } | Numeric(_) => 3,
            Io(_) | BadMagic { .. } | VersionMismatch { .. } | Truncated { .. }
            | ChecksumMismatch { .. } | Malformed { .. } => 4,
        }
    }
}
