//! The Markov additive models handled by the toolkit and their JSON form.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chain::{expm, StochasticMatrix};
use crate::error::{LltError, Result};
use crate::linalg::{self, CMatrix};
use crate::local_time::LocalTimeModel;
use crate::marp::{matrix_power, MarpModel};

/// A discrete-time chain whose transition `k → ℓ` adds the fixed real
/// increment `c_{kℓ}`. Integer increments make it a lattice model.
#[derive(Debug, Clone)]
pub struct LatticeChain {
    p: StochasticMatrix,
    increments: DMatrix<f64>,
    phi: Vec<f64>,
    mean: f64,
}

impl LatticeChain {
    pub fn new(p: StochasticMatrix, increments: DMatrix<f64>) -> Result<Self> {
        if increments.shape() != (p.n(), p.n()) || increments.iter().any(|x| !x.is_finite()) {
            return Err(LltError::InvalidModel("increments must be a finite N×N matrix".into()));
        }
        let phi = p.stationary_distribution()?.weights().to_vec();
        let pm = p.matrix();
        let mean = (0..p.n())
            .map(|k| phi[k] * (0..p.n()).map(|l| pm[(k, l)] * increments[(k, l)]).sum::<f64>())
            .sum();
        Ok(Self { p, increments, phi, mean })
    }

    /// The deterministic chain on one state with unit increments.
    pub fn unit_increment() -> Self {
        Self::new(StochasticMatrix::from_rows(&[vec![1.0]]).expect("valid"), DMatrix::from_element(1, 1, 1.0))
            .expect("valid")
    }

    pub fn transition(&self) -> &StochasticMatrix {
        &self.p
    }

    pub fn increments(&self) -> &DMatrix<f64> {
        &self.increments
    }

    pub fn mean_increment(&self) -> f64 {
        self.mean
    }

    pub fn fourier_kernel(&self, zeta: f64) -> CMatrix {
        let pm = self.p.matrix();
        CMatrix::from_fn(self.p.n(), self.p.n(), |k, l| Complex64::from_polar(pm[(k, l)], zeta * self.increments[(k, l)]))
    }
}

/// JSON description of a model, tagged by `"type"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelSpec {
    Marp {
        d0: Vec<Vec<f64>>,
        d1: Vec<Vec<f64>>,
    },
    LocalTime {
        g: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<f64>,
    },
    Lattice {
        p: Vec<Vec<f64>>,
        increments: Vec<Vec<f64>>,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<MapModel> {
        Ok(match self {
            ModelSpec::Marp { d0, d1 } => MapModel::Marp(MarpModel::from_rows(d0, d1)?),
            ModelSpec::LocalTime { g, a } => MapModel::LocalTime(LocalTimeModel::from_rows(g, *a)?),
            ModelSpec::Lattice { p, increments } => MapModel::Lattice(LatticeChain::new(
                StochasticMatrix::from_rows(p)?,
                linalg::matrix_from_rows(increments)?,
            )?),
        })
    }

    /// Componentwise `(1-θ)·self + θ·other`; both must be of the same kind and size.
    pub fn interpolate(&self, other: &ModelSpec, theta: f64) -> Result<ModelSpec> {
        let mix = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| -> Result<Vec<Vec<f64>>> {
            if a.len() != b.len() || a.iter().zip(b).any(|(r, s)| r.len() != s.len()) {
                return Err(LltError::InvalidInput("interpolated models must have equal shapes".into()));
            }
            Ok(a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| (1.0 - theta) * x + theta * y).collect()).collect())
        };
        match (self, other) {
            (ModelSpec::Marp { d0, d1 }, ModelSpec::Marp { d0: e0, d1: e1 }) => {
                Ok(ModelSpec::Marp { d0: mix(d0, e0)?, d1: mix(d1, e1)? })
            }
            (ModelSpec::LocalTime { g, .. }, ModelSpec::LocalTime { g: h, .. }) => {
                Ok(ModelSpec::LocalTime { g: mix(g, h)?, a: None })
            }
            (ModelSpec::Lattice { p, increments }, ModelSpec::Lattice { p: q, increments: c }) => {
                Ok(ModelSpec::Lattice { p: mix(p, q)?, increments: mix(increments, c)? })
            }
            _ => Err(LltError::InvalidInput("interpolated models must be of the same type".into())),
        }
    }

    /// Multiplies the rate matrices (`D0`, `D1` or `G`) by `theta`.
    pub fn scale(&self, theta: f64) -> Result<ModelSpec> {
        let s = |a: &Vec<Vec<f64>>| -> Vec<Vec<f64>> { a.iter().map(|r| r.iter().map(|x| x * theta).collect()).collect() };
        match self {
            ModelSpec::Marp { d0, d1 } => Ok(ModelSpec::Marp { d0: s(d0), d1: s(d1) }),
            ModelSpec::LocalTime { g, a } => Ok(ModelSpec::LocalTime { g: s(g), a: a.map(|x| x * theta) }),
            ModelSpec::Lattice { .. } => Err(LltError::InvalidInput("lattice chains have no rates to scale".into())),
        }
    }
}

/// A Markov additive process `(X_t, Y_t)` with centered additive part.
#[derive(Debug, Clone)]
pub enum MapModel {
    /// Embedded Markov renewal process of a MArP; integer time.
    Marp(MarpModel),
    /// Joint local times of a CTMC; continuous time.
    LocalTime(LocalTimeModel),
    /// Discrete-time chain with deterministic per-transition increments.
    Lattice(LatticeChain),
}

impl MapModel {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<ModelSpec>(text)?.build()
    }

    pub fn kind(&self) -> &'static str {
        match self {
            MapModel::Marp(_) => "marp",
            MapModel::LocalTime(_) => "local_time",
            MapModel::Lattice(_) => "lattice",
        }
    }

    pub fn n_states(&self) -> usize {
        match self {
            MapModel::Marp(m) => m.n(),
            MapModel::LocalTime(m) => m.n(),
            MapModel::Lattice(m) => m.transition().n(),
        }
    }

    /// Dimension `d` of `Y_t`.
    pub fn dim(&self) -> usize {
        match self {
            MapModel::LocalTime(m) => m.dim(),
            _ => 1,
        }
    }

    pub fn is_discrete_time(&self) -> bool {
        !matches!(self, MapModel::LocalTime(_))
    }

    /// Centering vector `m = E_π[Y₁]`.
    pub fn mean(&self) -> Vec<f64> {
        match self {
            MapModel::Marp(m) => vec![m.mean_increment()],
            MapModel::LocalTime(m) => m.drift(),
            MapModel::Lattice(m) => vec![m.mean_increment()],
        }
    }

    /// Invariant law of the driving chain (`P` in discrete time, `G` otherwise).
    pub fn stationary(&self) -> Vec<f64> {
        match self {
            MapModel::Marp(m) => m.embedded_stationary().to_vec(),
            MapModel::LocalTime(m) => m.stationary().weights().to_vec(),
            MapModel::Lattice(m) => m.phi.clone(),
        }
    }

    /// One-step matrix of the driving chain (`P` or `e^{G}`).
    pub fn driving_matrix(&self) -> Result<DMatrix<f64>> {
        Ok(match self {
            MapModel::Marp(m) => m.embedded_chain().matrix().clone(),
            MapModel::LocalTime(m) => expm(m.generator().matrix(), 1.0)?,
            MapModel::Lattice(m) => m.transition().matrix().clone(),
        })
    }

    /// Assumption I-P: the driving chain is irreducible and aperiodic
    /// (always aperiodic in continuous time).
    pub fn irreducible_aperiodic(&self) -> bool {
        match self {
            MapModel::Marp(m) => m.embedded_chain().is_irreducible_aperiodic(),
            MapModel::LocalTime(m) => m.generator().is_irreducible(),
            MapModel::Lattice(m) => m.transition().is_irreducible_aperiodic(),
        }
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(LltError::InvalidInput(format!("time must be finite and ≥ 0, got {t}")));
        }
        if self.is_discrete_time() && t.fract() != 0.0 {
            return Err(LltError::InvalidInput(format!("{} models run in integer time, got {t}", self.kind())));
        }
        Ok(())
    }

    pub(crate) fn check_zeta(&self, zeta: &[f64]) -> Result<()> {
        if zeta.len() != self.dim() || zeta.iter().any(|z| !z.is_finite()) {
            return Err(LltError::InvalidInput(format!("ζ must be a finite vector of length {}", self.dim())));
        }
        Ok(())
    }

    /// `Ŷ_t(ζ)` of the centered process `Y_t - tm`.
    pub fn fourier(&self, t: f64, zeta: &[f64]) -> Result<CMatrix> {
        self.check_time(t)?;
        self.check_zeta(zeta)?;
        Ok(match self {
            MapModel::Marp(m) => matrix_power(&m.centered_fourier_kernel(zeta[0]), t as usize),
            MapModel::LocalTime(m) => m.fourier(t, zeta, true)?,
            MapModel::Lattice(m) => {
                let k = m.fourier_kernel(zeta[0]) * Complex64::from_polar(1.0, -zeta[0] * m.mean_increment());
                matrix_power(&k, t as usize)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::norm0;

    #[test]
    fn json_round_trip() {
        let text = r#"{"type":"marp","d0":[[-2,1],[0,-3]],"d1":[[1,0],[1,2]]}"#;
        let spec: ModelSpec = serde_json::from_str(text).unwrap();
        let again: ModelSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, again);
        let m = spec.build().unwrap();
        assert_eq!(m.kind(), "marp");
        assert_eq!(m.n_states(), 2);
        let lt = MapModel::from_json(r#"{"type":"local_time","g":[[-1,1],[1,-1]]}"#).unwrap();
        assert_eq!(lt.dim(), 1);
        assert!(MapModel::from_json(r#"{"type":"local_time","g":[[-1,1],[1,-1]],"a":0.5}"#).is_err());
        assert!(MapModel::from_json(r#"{"type":"other"}"#).is_err());
    }

    #[test]
    fn fourier_at_zero_is_driving_chain() {
        for text in [
            r#"{"type":"marp","d0":[[-2,1],[0,-3]],"d1":[[1,0],[1,2]]}"#,
            r#"{"type":"local_time","g":[[-2,1,1],[1,-3,2],[2,2,-4]]}"#,
        ] {
            let m = MapModel::from_json(text).unwrap();
            let z = vec![0.0; m.dim()];
            let f = m.fourier(1.0, &z).unwrap();
            assert!(norm0(&(linalg::real_part(&f) - m.driving_matrix().unwrap())) < 1e-12);
        }
    }

    #[test]
    fn discrete_models_reject_fractional_time() {
        let m = MapModel::Lattice(LatticeChain::unit_increment());
        assert!(m.fourier(0.5, &[1.0]).is_err());
        assert!(m.fourier(2.0, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn interpolation_and_scaling() {
        let a: ModelSpec = serde_json::from_str(r#"{"type":"local_time","g":[[-1,1],[1,-1]]}"#).unwrap();
        let b = a.scale(2.0).unwrap();
        let mid = a.interpolate(&b, 0.5).unwrap();
        assert_eq!(mid, ModelSpec::LocalTime { g: vec![vec![-1.5, 1.5], vec![1.5, -1.5]], a: None });
    }
}
