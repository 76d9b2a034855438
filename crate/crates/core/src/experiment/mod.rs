//! Local limit experiments: configs, the convergence run, assumption
//! diagnostics and family sweeps.

pub mod config;
pub mod diagnostics;
pub mod llt;
pub mod report;
pub mod sweep;

use nalgebra::{DMatrix, DVector};

use crate::error::{LltError, Result};

pub use config::{DensitySource, ExperimentConfig, ExperimentSettings, FamilyConfig, FamilySpec, ModelRef};
pub use diagnostics::{run_diagnostics, DiagnosticsBlock};
pub use llt::run_llt_experiment;
pub use report::{ConvergencePoint, ConvergenceReport, FamilyReport, McPoint, RateFit, SCHEMA_VERSION};
pub use sweep::run_uniform_sweep;

/// Density `η_Σ` of the centered Gaussian `𝒩(0, Σ)`.
#[derive(Debug, Clone)]
pub struct GaussianDensity {
    inverse: DMatrix<f64>,
    norm: f64,
}

impl GaussianDensity {
    pub fn new(sigma: &DMatrix<f64>) -> Result<Self> {
        let d = sigma.nrows();
        let chol = sigma
            .clone()
            .cholesky()
            .ok_or_else(|| LltError::DegenerateCovariance("Σ is not positive definite".into()))?;
        let det = chol.determinant();
        if !(det > 0.0) || !det.is_finite() {
            return Err(LltError::DegenerateCovariance(format!("det Σ = {det:e}")));
        }
        let norm = (2.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0) / det.sqrt();
        Ok(Self { inverse: chol.inverse(), norm })
    }

    /// `uᵀΣ⁻¹u`.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        let v = DVector::from_column_slice(u);
        (v.transpose() * &self.inverse * &v)[(0, 0)]
    }

    pub fn at_zero(&self) -> f64 {
        self.norm
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        self.norm * (-0.5 * self.quadratic_form(u)).exp()
    }

    /// Density at the point of Mahalanobis radius² `q`.
    pub fn at_radius2(&self, q: f64) -> f64 {
        self.norm * (-0.5 * q).exp()
    }
}

pub fn gaussian_density(sigma: &DMatrix<f64>, u: &[f64]) -> Result<f64> {
    Ok(GaussianDensity::new(sigma)?.eval(u))
}
