//! Mass of `Y_t` on the boundary of the simplex, where some state is never visited.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::geometry::SimplexGeometry;
use super::{DensitySeries, LocalTimeModel};
use crate::chain::{expm, norm0};
use crate::error::{LltError, Result};
use crate::linalg::CMatrix;
use crate::stats::{linear_fit, LinearFit};

#[derive(Debug, Clone, Serialize)]
pub struct SingularMass {
    pub t: f64,
    /// `face[(k, i)] = P_k{L_t(i) = 0}`.
    pub face: Vec<Vec<f64>>,
    /// `bound[(k, ℓ)] = Σ_i P_k{L_t(i) = 0, X_t = ℓ}`.
    pub bound: Vec<Vec<f64>>,
    /// `exact[(k, ℓ)] = P_k{some L_t(i) = 0, X_t = ℓ}` by inclusion–exclusion.
    pub exact: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularDecayFit {
    /// `(t, max_k Σ_ℓ bound[(k, ℓ)])`
    pub points: Vec<(f64, f64)>,
    pub fit: LinearFit,
    /// Fitted `c` and `ρ` in `total ≤ c ρ^t`.
    pub c: f64,
    pub rho: f64,
    /// `r = min_i r_i`.
    pub r_min: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryDecayReport {
    /// `(t, max over sampled boundary points of ‖Ψ_t(y)‖₀)`
    pub points: Vec<(f64, f64)>,
    /// Fit of `log(value / (1 + at))` against `t`.
    pub fit: LinearFit,
    /// `a(ρ̂ - 1)`.
    pub predicted_rate: f64,
}

/// Exponential of `G` restricted to the states in `keep`, embedded back into `N × N`.
fn restricted_exp(g: &DMatrix<f64>, keep: &[usize], t: f64) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let sub = DMatrix::from_fn(keep.len(), keep.len(), |i, j| g[(keep[i], keep[j])]);
    let e = expm(&sub, t)?;
    let mut out = DMatrix::zeros(n, n);
    for (i, &ki) in keep.iter().enumerate() {
        for (j, &kj) in keep.iter().enumerate() {
            out[(ki, kj)] = e[(i, j)].max(0.0);
        }
    }
    Ok(out)
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    crate::linalg::matrix_to_rows(m)
}

impl LocalTimeModel {
    /// `P_k{L_t(i) = 0, X_t = ℓ}` for every `i`, as `N` matrices indexed `(k, ℓ)`.
    pub fn face_masses(&self, t: f64) -> Result<Vec<DMatrix<f64>>> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                restricted_exp(self.generator().matrix(), &keep, t)
            })
            .collect()
    }

    pub fn singular_mass(&self, t: f64) -> Result<SingularMass> {
        if !(t > 0.0) {
            return Err(LltError::InvalidInput("t must be positive".into()));
        }
        let n = self.n();
        let g = self.generator().matrix();
        let faces = self.face_masses(t)?;
        let face = DMatrix::from_fn(n, n, |k, i| faces[i].row(k).sum());
        let bound = faces.iter().fold(DMatrix::zeros(n, n), |acc, f| acc + f);
        // P_k{every state visited, X_t = ℓ} = Σ_S (-1)^{|S|} e^{tG_{S^c S^c}}(k, ℓ)
        let mut visited_all = DMatrix::zeros(n, n);
        for mask in 0u32..(1 << n) - 1 {
            let keep: Vec<usize> = (0..n).filter(|&j| mask & (1 << j) == 0).collect();
            let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            visited_all += restricted_exp(g, &keep, t)? * sign;
        }
        let full = expm(g, t)?;
        let exact = (full - visited_all).map(|x| x.max(0.0));
        Ok(SingularMass { t, face: to_rows(&face), bound: to_rows(&bound), exact: to_rows(&exact) })
    }

    /// Mass of the absolutely continuous part, `e^{tG} - singular`.
    pub fn absolutely_continuous_mass(&self, t: f64) -> Result<DMatrix<f64>> {
        let s = self.singular_mass(t)?;
        let full = expm(self.generator().matrix(), t)?;
        Ok(DMatrix::from_fn(self.n(), self.n(), |k, l| full[(k, l)] - s.exact[k][l]))
    }

    /// Exponential fit of the total singular bound over the horizons `ts`.
    pub fn fit_singular_decay(&self, ts: &[f64]) -> Result<SingularDecayFit> {
        let points = ts
            .iter()
            .map(|&t| {
                let s = self.singular_mass(t)?;
                let total = s.bound.iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max);
                Ok((t, total))
            })
            .collect::<Result<Vec<_>>>()?;
        let logs: Vec<(f64, f64)> = points.iter().map(|&(t, v)| (t, v.ln())).collect();
        let fit = linear_fit(&logs)?;
        Ok(SingularDecayFit { points, c: fit.intercept.exp(), rho: fit.slope.exp(), fit, r_min: self.min_decay_rate() })
    }

    /// `Ŷ_t(ζ)` for two states from the quadrature of `ψ` plus the two exact
    /// atoms at `y = 0` and `y = t`. Cross-check of the Feynman–Kac route.
    pub fn fourier_by_quadrature(&self, series: &DensitySeries, t: f64, zeta: &[f64], centered: bool) -> Result<CMatrix> {
        if self.n() != 2 {
            return Err(LltError::InvalidInput("the atom decomposition is implemented for two states".into()));
        }
        let mut f = series.fourier(t, zeta)?;
        let faces = self.face_masses(t)?;
        // state 0 never visited: Y_t = 0; state 1 never visited: Y_t = t
        f += faces[0].map(|x| Complex64::new(x, 0.0));
        f += faces[1].map(|x| Complex64::new(x, 0.0)) * Complex64::from_polar(1.0, zeta[0] * t);
        if centered {
            f *= Complex64::from_polar(1.0, -zeta[0] * self.drift()[0] * t);
        }
        Ok(f)
    }

    /// Maximum of `‖Ψ_t‖₀` over Halton samples of each face of `𝒞_t`, fitted
    /// against `a(ρ̂ - 1)` after removing the `(1 + at)` prefactor.
    pub fn boundary_decay(&self, series: &DensitySeries, ts: &[f64], per_face: usize) -> Result<BoundaryDecayReport> {
        let a = self.rate();
        let points = ts
            .iter()
            .map(|&t| {
                let geom = SimplexGeometry::new(t, self.drift());
                let mut sup: f64 = 0.0;
                for (_, y) in geom.boundary_points(per_face) {
                    sup = sup.max(norm0(&series.evaluate(t, &y)?.0));
                }
                Ok((t, sup))
            })
            .collect::<Result<Vec<_>>>()?;
        let logs: Vec<(f64, f64)> = points.iter().map(|&(t, v)| (t, (v / (1.0 + a * t)).ln())).collect();
        let fit = linear_fit(&logs)?;
        Ok(BoundaryDecayReport { points, fit, predicted_rate: a * (self.max_rho() - 1.0) })
    }
}
