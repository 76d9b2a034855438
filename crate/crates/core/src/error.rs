use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum LltError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("chain is not irreducible")]
    NotIrreducible,
    #[error("degenerate: {0}")]
    Degenerate(String),
    #[error("accuracy target {target:e} not reached (achieved {achieved:e})")]
    AccuracyError { achieved: f64, target: f64 },
    #[error("dominant eigenvalue not isolated: spectral gap {gap:e} below floor {floor:e}")]
    PerturbationRegimeExceeded { gap: f64, floor: f64 },
    #[error("numerical failure: {0}")]
    NumericalError(String),
    #[error("grid too small: tail mass {tail_mass:e} beyond y_max, try y_max = {suggested_y_max}")]
    GridTooSmall { tail_mass: f64, suggested_y_max: f64 },
    #[error("Fourier inversion mass mismatch {mismatch:e} exceeds {tol:e}")]
    ResolutionError { mismatch: f64, tol: f64 },
    #[error("uniformization rate {rate} must exceed max |G(j,j)| = {min_rate}")]
    InvalidRate { rate: f64, min_rate: f64 },
    #[error("visit-count lattice exceeds memory budget; at most {max_steps} steps for this state count")]
    BudgetExceeded { max_steps: usize },
    #[error("point lies outside the closed simplex")]
    OutOfSimplex,
    #[error("point is off the hyperplane <y,1> = 0 (residual {residual:e})")]
    NotInHyperplane { residual: f64 },
    #[error("covariance matrix is degenerate: {0}")]
    DegenerateCovariance(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LltError>;
