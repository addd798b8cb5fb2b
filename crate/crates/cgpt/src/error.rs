use thiserror::Error;

/// Errors produced by tensor evaluation, conversions and the design solvers.
#[derive(Debug, Error)]
pub enum CgptError {
    /// Invalid geometry, contrast or configuration data.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A matrix-formula route was requested at a contrast of exactly zero,
    /// where its diagonal 1/eta_k is undefined.
    #[error("contrast eta_{index} is zero; the matrix route is singular there (use the transfer route)")]
    ZeroContrast { index: usize },

    /// The transfer denominator is vanishingly small relative to its term
    /// magnitudes; the tensor value would be pure rounding noise.
    #[error("near-resonant structure: |t22| = {t22:.3e} below {threshold:.3e}")]
    NearResonance { t22: f64, threshold: f64 },

    /// A dense linear solve failed.
    #[error("singular linear system in {0}")]
    Singular(String),

    /// Subset enumeration is capped to keep runtime bounded.
    #[error("structure has {layers} layers; subset enumeration is limited to {max}")]
    EnumerationCap { layers: usize, max: usize },

    /// Operation not defined for the structure's dimension.
    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, CgptError>;
