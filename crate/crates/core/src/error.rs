use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Jacobian undefined at this configuration (gimbal lock, degenerate pitch).
    #[error("singular configuration: {0}")]
    SingularConfiguration(String),

    /// Valid input for which the chosen formula is numerically unusable (rotation near π).
    #[error("out of range: {0}")]
    Range(String),

    #[error("point is behind the camera (depth {depth:e})")]
    BehindCamera { depth: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("normal equations are rank deficient: component {component:?} has no fixed vertex")]
    RankDeficient { component: Vec<usize> },

    #[error("linear solver failed: {0}")]
    SolverFailure(String),

    #[error("function evaluation failed while differencing column {column}: {source}")]
    Differencing {
        column: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
