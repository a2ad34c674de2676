use thiserror::Error;

/// Everything that can go wrong inside the engine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Operands live in different variable contexts, or a variable is not
    /// part of the context it is used in.
    #[error("context error: {0}")]
    Context(String),

    /// Operands were built with different truncations, or a bound was hit.
    #[error("truncation error: {0}")]
    Truncation(String),

    /// A bigrade violates `j >= -m`.
    #[error("bigrade ({m}, {j}) violates the pole bound j >= -m")]
    Bigrade { m: u32, j: i32 },

    /// exp/log called outside their domain.
    #[error("valuation error: {0}")]
    Valuation(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("composition error: {0}")]
    Composition(String),

    #[error("matrix error: {0}")]
    Matrix(String),

    /// An internal invariant failed (e.g. fixed-point iteration did not settle).
    #[error("internal consistency error: {0}")]
    Consistency(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
