use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("profile did not converge: {0}")]
    Nonconverged(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The right-hand side is not orthogonal to θ₀'.
    #[error("solvability condition violated: ∫hθ₀' = {integral:e} exceeds tolerance {tolerance:e}")]
    Solvability { integral: f64, tolerance: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("tubular chart folds: factor 1 + rκ = {factor} at r = {r}")]
    ChartFold { r: f64, factor: f64 },

    #[error("front self-intersects (segments {first} and {second})")]
    SelfIntersect { first: usize, second: usize },

    #[error("time step {dt:e} exceeds stability bound {limit:e}")]
    StepSize { dt: f64, limit: f64 },

    #[error("linear solve failed after {iterations} iterations (relative residual {residual:e})")]
    Solve { iterations: usize, residual: f64 },

    #[error("no zero level set: field does not change sign")]
    EmptyContour,

    #[error("eigen-iteration did not converge: {0}")]
    Convergence(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

impl Error {
    /// Whether the failure comes from bad caller input rather than the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::EmptyInput(_) | Error::ShapeMismatch(_)
        )
    }
}
