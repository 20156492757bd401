use thiserror::Error;

/// Pipeline stage that produced a numerical failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    FieldCore,
    Phantom,
    Forward,
    Faddeev,
    ScatterFromDtn,
    DbarSolve,
    StabilityLab,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::FieldCore => "field-core",
            Stage::Phantom => "phantom",
            Stage::Forward => "forward",
            Stage::Faddeev => "faddeev",
            Stage::ScatterFromDtn => "scatter-from-dtn",
            Stage::DbarSolve => "dbar-solve",
            Stage::StabilityLab => "stability-lab",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// Bad user input: grids, shapes, parameters. Maps to CLI exit code 2.
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Numerical failure inside a stage. Maps to CLI exit code 3.
    #[error("[{stage}] {what}")]
    Numerical { stage: Stage, what: String },

    #[error("[{stage}] Krylov solver did not converge: residual {residual:.3e} after {iterations} iterations ({context})")]
    NoConvergence {
        stage: Stage,
        iterations: usize,
        residual: f64,
        context: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn numerical(stage: Stage, msg: impl Into<String>) -> Self {
        Error::Numerical {
            stage,
            what: msg.into(),
        }
    }

    /// True for failures caused by the caller's input rather than the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid(_)
                | Error::GridMismatch(_)
                | Error::Dimension { .. }
                | Error::Format(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
