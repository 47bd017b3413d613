//! Error classification for the exit-code contract: 1 usage, 2 data,
//! 3 numerical failure.

use spheregp::fit::FitError;
use spheregp::gp::GpError;
use spheregp::kernels::KernelError;
use spheregp::diagnostics::DiagnosticsError;

#[derive(Debug)]
pub enum CliError {
    /// Malformed invocation (exit 1); mostly produced by clap itself.
    Usage(String),
    /// Unreadable or invalid inputs: files, CSV rows, JSON configs (exit 2).
    Data(String),
    /// The math gave up: non-positive-definite covariances, failed fits,
    /// poles under the separable kernel (exit 3).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::UndefinedAtPole => CliError::Numerical(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<GpError> for CliError {
    fn from(e: GpError) -> Self {
        match e {
            GpError::NotPositiveDefinite { .. } => CliError::Numerical(e.to_string()),
            GpError::Kernel(k) => k.into(),
            GpError::KernelAt { ref source, .. } => match source {
                KernelError::UndefinedAtPole => CliError::Numerical(e.to_string()),
                _ => CliError::Data(e.to_string()),
            },
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::AllRestartsFailed => CliError::Numerical(e.to_string()),
            FitError::Gp(g) => g.into(),
            FitError::Kernel(k) => k.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<DiagnosticsError> for CliError {
    fn from(e: DiagnosticsError) -> Self {
        match e {
            DiagnosticsError::Kernel(k) => k.into(),
            DiagnosticsError::Gp(g) => g.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}
