use thiserror::Error;

use crate::multi_index::VarId;

/// Errors raised by the algebra, solvers and I/O layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChaosError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("missing values for variables {0:?}")]
    MissingVariables(Vec<VarId>),

    #[error("argument `{argument}` is not homogeneous (degrees {degrees:?})")]
    NotHomogeneous {
        argument: &'static str,
        degrees: Vec<u32>,
    },

    #[error("basis dimension {dimension} exceeds the configured cap {cap}")]
    BasisTooLarge { dimension: usize, cap: usize },

    #[error("matrix is not orthogonal (max deviation {max_deviation:e})")]
    NotOrthogonal { max_deviation: f64 },

    #[error("vector is not of unit norm (squared norm {norm_sq})")]
    NotUnit { norm_sq: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("variance is zero")]
    ZeroVariance,

    #[error("empty sample set")]
    EmptySample,

    #[error("invalid input law: {0}")]
    InvalidLaw(String),

    #[error("ensemble level {level} for variable {var} exceeds available degree {max}")]
    LevelOutOfRange { var: VarId, level: u32, max: u32 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl ChaosError {
    /// The message without the variant prefix.
    pub fn detail(&self) -> String {
        match self {
            ChaosError::Parse(m) | ChaosError::Precondition(m) | ChaosError::InvalidLaw(m) | ChaosError::Io(m) => m.clone(),
            other => other.to_string(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            ChaosError::BasisTooLarge { .. } => 3,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for ChaosError {
    fn from(err: std::io::Error) -> Self {
        ChaosError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ChaosError>;
