//! Joint local times `L_t = (L_t(1), …, L_t(N))` of a finite CTMC, with the
//! additive component `Y_t = (L_t(1), …, L_t(N-1))` (the last coordinate is
//! `t - ⟨Y_t, 1⟩`).

mod density;
mod geometry;
mod singular;
mod visits;

pub use density::{multinomial_coefficient, DensitySeries, JointDensityEval, SERIES_TOL};
pub use geometry::{halton, lift_map, project_map, SimplexGeometry};
pub use singular::{BoundaryDecayReport, SingularDecayFit, SingularMass};
pub use visits::{enumerate_visit_counts, VisitCountTable, DP_MEMORY_BUDGET};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::chain::{expm, GeneratorMatrix, ProbabilityVector, StochasticMatrix};
use crate::error::{LltError, Result};
use crate::linalg::{self, CMatrix};

/// Factor applied to `max |G(j,j)|` when the uniformization rate is chosen automatically.
pub const AUTO_RATE_FACTOR: f64 = 1.2;

/// Perron–Frobenius data of the chain with state `i` removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubChainDecay {
    pub state: usize,
    /// Decay rate `r_i` of `e^{tG_{i^c i^c}}`.
    pub r: f64,
    /// `ρ_i = 1 - r_i/a`, spectral radius of `P̃_{i^c i^c}`.
    pub rho: f64,
}

#[derive(Debug, Clone)]
pub struct LocalTimeModel {
    g: GeneratorMatrix,
    a: f64,
    p_tilde: StochasticMatrix,
    m: ProbabilityVector,
    sub_pf: Vec<SubChainDecay>,
}

impl LocalTimeModel {
    /// Uniformizes `g` at rate `a`, or at `1.2 max |G(j,j)|` when `a` is `None`.
    pub fn uniformize(g: GeneratorMatrix, a: Option<f64>) -> Result<Self> {
        let n = g.n();
        if n < 2 {
            return Err(LltError::InvalidModel("local times need at least two states".into()));
        }
        if !g.is_irreducible() {
            return Err(LltError::NotIrreducible);
        }
        let max_rate = g.max_exit_rate();
        let a = a.unwrap_or(AUTO_RATE_FACTOR * max_rate);
        if !(a > max_rate) || !a.is_finite() {
            return Err(LltError::InvalidRate { rate: a, min_rate: max_rate });
        }
        let p_tilde = StochasticMatrix::from_computed(DMatrix::identity(n, n) + g.matrix() / a, 1e-12)?;
        let m = g.stationary_distribution()?;
        let sub_pf = (0..n)
            .map(|i| {
                let sub = g.subgenerator(i)?;
                Ok(SubChainDecay { state: i, r: sub.decay_rate, rho: 1.0 - sub.decay_rate / a })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { g, a, p_tilde, m, sub_pf })
    }

    pub fn from_rows(g: &[Vec<f64>], a: Option<f64>) -> Result<Self> {
        Self::uniformize(GeneratorMatrix::from_rows(g)?, a)
    }

    pub fn n(&self) -> usize {
        self.g.n()
    }

    /// Dimension of the additive component, `N - 1`.
    pub fn dim(&self) -> usize {
        self.n() - 1
    }

    pub fn generator(&self) -> &GeneratorMatrix {
        &self.g
    }

    pub fn rate(&self) -> f64 {
        self.a
    }

    pub fn p_tilde(&self) -> &StochasticMatrix {
        &self.p_tilde
    }

    /// Stationary law `π`, equal to `E_π[L₁]`.
    pub fn stationary(&self) -> &ProbabilityVector {
        &self.m
    }

    /// Drift `m′ = (π₁, …, π_{N-1})` of `Y_t`.
    pub fn drift(&self) -> Vec<f64> {
        self.m.weights()[..self.dim()].to_vec()
    }

    pub fn sub_chain_decay(&self) -> &[SubChainDecay] {
        &self.sub_pf
    }

    /// `r = min_i r_i`.
    pub fn min_decay_rate(&self) -> f64 {
        self.sub_pf.iter().map(|s| s.r).fold(f64::INFINITY, f64::min)
    }

    /// `ρ̂ = max_i ρ_i`.
    pub fn max_rho(&self) -> f64 {
        self.sub_pf.iter().map(|s| s.rho).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Additive rate vector of `Y_t` (optionally centered) against frequency `ζ`.
    fn phase_rates(&self, zeta: &[f64], centered: bool) -> Result<Vec<f64>> {
        if zeta.len() != self.dim() {
            return Err(LltError::InvalidInput(format!("ζ must have {} components", self.dim())));
        }
        let shift = if centered { self.drift().iter().zip(zeta).map(|(m, z)| m * z).sum() } else { 0.0 };
        let mut w: Vec<f64> = zeta.iter().map(|z| z - shift).collect();
        w.push(-shift);
        Ok(w)
    }

    /// `Ŷ_t(ζ)_{kℓ} = E_k[1{X_t=ℓ} e^{i⟨ζ,Y_t⟩}] = exp(t(G + i diag(w)))`
    /// by the Feynman–Kac formula, with `Y_t` centered when asked.
    pub fn fourier(&self, t: f64, zeta: &[f64], centered: bool) -> Result<CMatrix> {
        let w = self.phase_rates(zeta, centered)?;
        let mut a = linalg::to_complex(self.g.matrix());
        for (j, wj) in w.iter().enumerate() {
            a[(j, j)] += Complex64::new(0.0, *wj);
        }
        expm(&a, t)
    }

    /// Precomputes the coefficient tables of the density series for horizons up to `t_max`.
    pub fn density_series(&self, t_max: f64) -> Result<DensitySeries> {
        DensitySeries::new(self, t_max)
    }
}
