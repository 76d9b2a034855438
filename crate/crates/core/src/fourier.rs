//! Fourier matrices `Ŷ_t(ζ)`, the dominant eigenvalue `λ(ζ)` of `Ŷ₁(ζ)` and
//! what is derived from it: the covariance `Σ`, the main/remainder split of
//! the characteristic function, and spectral-radius scans.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::chain::{norm0, norm_inf};
use crate::error::{LltError, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::local_time::halton;
use crate::model::MapModel;

pub const DEFAULT_GAP_FLOOR: f64 = 1e-6;
pub const DEFAULT_RADIUS_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct FourierMatrix {
    pub zeta: Vec<f64>,
    pub t: f64,
    pub entries: CMatrix,
}

impl FourierMatrix {
    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.entries)
    }

    pub fn max_modulus(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn fourier_matrix(model: &MapModel, t: f64, zeta: &[f64]) -> Result<FourierMatrix> {
    Ok(FourierMatrix { zeta: zeta.to_vec(), t, entries: model.fourier(t, zeta)? })
}

/// `‖Ŷ_{t+s}(ζ) - Ŷ_t(ζ)Ŷ_s(ζ)‖₀`.
pub fn semigroup_check(model: &MapModel, t: f64, s: f64, zeta: &[f64]) -> Result<f64> {
    let ts = model.fourier(t + s, zeta)?;
    let prod = model.fourier(t, zeta)? * model.fourier(s, zeta)?;
    Ok(norm0(&(ts - prod)))
}

/// `φ_{k,t}(ζ) = e_k Ŷ_t(ζ) 1`.
pub fn characteristic_function(model: &MapModel, k: usize, t: f64, zeta: &[f64]) -> Result<Complex64> {
    if k >= model.n_states() {
        return Err(LltError::InvalidInput(format!("state {k} out of range")));
    }
    Ok(model.fourier(t, zeta)?.row(k).sum())
}

#[derive(Debug, Clone)]
pub struct EigenPerturbation {
    pub zeta: Vec<f64>,
    pub lambda: Complex64,
    /// Normalized so that `π·right = 1`.
    pub right: CVector,
    /// Normalized so that `left·right = 1`.
    pub left: CVector,
    /// Modulus of the second eigenvalue (0 for a single state).
    pub second_modulus: f64,
    pub spectral_gap: f64,
}

impl EigenPerturbation {
    /// Spectral projector `Π = right ⊗ left`.
    pub fn projector(&self) -> CMatrix {
        &self.right * self.left.transpose()
    }
}

pub fn eigen_perturbation(model: &MapModel, zeta: &[f64], gap_floor: f64) -> Result<EigenPerturbation> {
    let m = model.fourier(1.0, zeta)?;
    let eig = linalg::sorted_eigenvalues(&m)?;
    let lambda = eig[0];
    let second_modulus = eig.get(1).map_or(0.0, |z| z.norm());
    let spectral_gap = lambda.norm() - second_modulus;
    if spectral_gap < gap_floor {
        return Err(LltError::PerturbationRegimeExceeded { gap: spectral_gap, floor: gap_floor });
    }
    let (mut right, mut left) = linalg::eigenvectors(&m, lambda)?;
    let pi = model.stationary();
    let pr: Complex64 = pi.iter().zip(right.iter()).map(|(p, r)| r * *p).sum();
    if pr.norm() < 1e-14 {
        return Err(LltError::NumericalError("right eigenvector orthogonal to π".into()));
    }
    right /= pr;
    let lr: Complex64 = left.iter().zip(right.iter()).map(|(l, r)| l * r).sum();
    if lr.norm() < 1e-14 {
        return Err(LltError::NumericalError("defective dominant eigenvalue".into()));
    }
    left /= lr;
    Ok(EigenPerturbation { zeta: zeta.to_vec(), lambda, right, left, second_modulus, spectral_gap })
}

/// `(main, remainder)` with `main = λ^{⌊t⌋} e_k Π Ŷ_{t-⌊t⌋}(ζ) 1` and
/// `remainder = φ_{k,t}(ζ) - main`.
pub fn decomposition_residual(model: &MapModel, k: usize, t: f64, zeta: &[f64]) -> Result<(Complex64, Complex64)> {
    let ep = eigen_perturbation(model, zeta, DEFAULT_GAP_FLOOR)?;
    let whole = t.floor();
    let frac = model.fourier(t - whole, zeta)?;
    let ones = CVector::from_element(model.n_states(), Complex64::new(1.0, 0.0));
    let v = ep.projector() * frac * ones;
    let main = ep.lambda.powi(whole as i32) * v[k];
    let phi = characteristic_function(model, k, t, zeta)?;
    Ok((main, phi - main))
}

/// A covariance matrix with its centering vector and, for estimates, standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct CovarianceMatrix {
    pub sigma: Vec<Vec<f64>>,
    pub m: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standard_errors: Option<Vec<Vec<f64>>>,
    pub method: String,
}

impl CovarianceMatrix {
    pub fn matrix(&self) -> DMatrix<f64> {
        linalg::matrix_from_rows(&self.sigma).expect("square covariance")
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::symmetric_eigenvalues(&self.matrix())
    }
}

fn neg_log_lambda(model: &MapModel, zeta: &[f64]) -> Result<f64> {
    let ep = eigen_perturbation(model, zeta, DEFAULT_GAP_FLOOR)?;
    Ok(-ep.lambda.ln().re)
}

fn hessian(model: &MapModel, h: f64) -> Result<DMatrix<f64>> {
    let d = model.dim();
    let f = |z: &[f64]| neg_log_lambda(model, z);
    let f0 = f(&vec![0.0; d])?;
    let mut hm = DMatrix::zeros(d, d);
    for i in 0..d {
        let mut p = vec![0.0; d];
        p[i] = h;
        let mut m = vec![0.0; d];
        m[i] = -h;
        hm[(i, i)] = (f(&p)? - 2.0 * f0 + f(&m)?) / (h * h);
        for j in 0..i {
            let at = |si: f64, sj: f64| {
                let mut z = vec![0.0; d];
                z[i] = si * h;
                z[j] = sj * h;
                f(&z)
            };
            let v = (at(1.0, 1.0)? - at(1.0, -1.0)? - at(-1.0, 1.0)? + at(-1.0, -1.0)?) / (4.0 * h * h);
            hm[(i, j)] = v;
            hm[(j, i)] = v;
        }
    }
    Ok(hm)
}

/// `Σ = -∇²log λ(0)` by central differences with one Richardson step.
pub fn covariance_hessian(model: &MapModel) -> Result<CovarianceMatrix> {
    let guess = hessian(model, 1e-3)?;
    let h = 1e-3 * (1.0 + guess.norm()).sqrt();
    let coarse = hessian(model, h)?;
    let fine = hessian(model, h / 2.0)?;
    let mut sigma = (fine * 4.0 - coarse) / 3.0;
    sigma = (&sigma + sigma.transpose()) / 2.0;
    let min_eig = linalg::symmetric_eigenvalues(&sigma).into_iter().fold(f64::INFINITY, f64::min);
    if min_eig < -1e-7 * (1.0 + sigma.norm()) {
        return Err(LltError::NumericalError(format!("Hessian is indefinite (eigenvalue {min_eig:e})")));
    }
    Ok(CovarianceMatrix { sigma: linalg::matrix_to_rows(&sigma), m: model.mean(), standard_errors: None, method: "hessian".into() })
}

/// Gradient of `λ` at 0 by central differences; `≈ 0` for a centered model.
pub fn eigenvalue_gradient_at_zero(model: &MapModel, h: f64) -> Result<Vec<Complex64>> {
    let d = model.dim();
    (0..d)
        .map(|i| {
            let mut p = vec![0.0; d];
            p[i] = h;
            let mut m = vec![0.0; d];
            m[i] = -h;
            let lp = eigen_perturbation(model, &p, DEFAULT_GAP_FLOOR)?.lambda;
            let lm = eigen_perturbation(model, &m, DEFAULT_GAP_FLOOR)?.lambda;
            Ok((lp - lm) / (2.0 * h))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussianBoundCheck {
    pub t: f64,
    pub max_violation: f64,
    /// Grid points outside `‖t^{-1/2}ζ‖ < δ` or outside the perturbation regime.
    pub skipped: usize,
    pub evaluated: usize,
}

/// Max over the grid of
/// `|λ_W(t^{-1/2}ζ)^{⌊t⌋} - e^{-‖ζ‖²/2}| √t / ((1+‖ζ‖³) e^{-‖ζ‖²/8})`,
/// where `λ_W(ζ) = λ(L^{-T}ζ)` is the eigenvalue after whitening by the
/// Cholesky factor `Σ = LLᵀ`.
pub fn gaussian_eigen_bound_check(
    model: &MapModel,
    sigma: &CovarianceMatrix,
    t: f64,
    zeta_grid: &[Vec<f64>],
    delta: f64,
) -> Result<GaussianBoundCheck> {
    if t < 2.0 {
        return Err(LltError::InvalidInput("t must be at least 2".into()));
    }
    let l = linalg::cholesky(&sigma.matrix())?;
    let l_inv_t = l
        .transpose()
        .try_inverse()
        .ok_or_else(|| LltError::DegenerateCovariance("Cholesky factor is singular".into()))?;
    let whole = t.floor() as i32;
    let results: Vec<Option<f64>> = zeta_grid
        .par_iter()
        .map(|zeta| {
            let scaled: Vec<f64> = zeta.iter().map(|z| z / t.sqrt()).collect();
            let norm_scaled = scaled.iter().map(|z| z * z).sum::<f64>().sqrt();
            if norm_scaled >= delta {
                return None;
            }
            let w = &l_inv_t * DVector::from_column_slice(&scaled);
            let ep = eigen_perturbation(model, w.as_slice(), DEFAULT_GAP_FLOOR).ok()?;
            let r2: f64 = zeta.iter().map(|z| z * z).sum();
            let r = r2.sqrt();
            let diff = (ep.lambda.powi(whole) - Complex64::new((-r2 / 2.0).exp(), 0.0)).norm();
            Some(diff * t.sqrt() / ((1.0 + r.powi(3)) * (-r2 / 8.0).exp()))
        })
        .collect();
    let evaluated = results.iter().filter(|r| r.is_some()).count();
    let max_violation = results.iter().flatten().fold(0.0f64, |m, v| m.max(*v));
    Ok(GaussianBoundCheck { t, max_violation, skipped: results.len() - evaluated, evaluated })
}

/// Unit directions for grids in `ℝ^d`: `±1` for `d = 1`, equally spaced
/// angles for `d = 2`, Halton points pushed onto the sphere otherwise.
pub fn directions(d: usize, count: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let normal = Normal::standard();
            let primes = [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];
            (0..count)
                .map(|i| {
                    let v: Vec<f64> = (0..d).map(|j| normal.inverse_cdf(halton(i as u64 + 1, primes[j % primes.len()]))).collect();
                    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.into_iter().map(|x| x / n).collect()
                })
                .collect()
        }
    }
}

/// Radial grid of `resolution` radii in `[delta, a]` along [`directions`].
pub fn annulus_grid(d: usize, delta: f64, a: f64, resolution: usize) -> Vec<Vec<f64>> {
    let resolution = resolution.max(2);
    let dirs = directions(d, resolution);
    let mut grid = Vec::new();
    for i in 0..resolution {
        let r = delta + (a - delta) * i as f64 / (resolution - 1) as f64;
        for u in &dirs {
            grid.push(u.iter().map(|x| x * r).collect());
        }
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeVerdict {
    Nonlattice,
    SuspectedLattice,
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeDiagnostic {
    pub grid: Vec<(Vec<f64>, f64)>,
    pub max_radius_off_zero: f64,
    pub argmax: Vec<f64>,
    pub verdict: LatticeVerdict,
}

/// `r(Ŷ₁(ζ))` over the annulus `δ ≤ ‖ζ‖ ≤ A`. The verdict is a grid heuristic.
pub fn lattice_scan(model: &MapModel, delta: f64, a: f64, resolution: usize, radius_margin: f64) -> Result<LatticeDiagnostic> {
    if !(delta > 0.0 && delta < a) {
        return Err(LltError::InvalidInput("need 0 < δ < A".into()));
    }
    let zetas = annulus_grid(model.dim(), delta, a, resolution);
    let grid = zetas
        .into_par_iter()
        .map(|z| {
            let r = linalg::spectral_radius(&model.fourier(1.0, &z)?)?;
            Ok((z, r.min(1.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (argmax, max) = grid
        .iter()
        .fold((Vec::new(), f64::NEG_INFINITY), |(az, m), (z, r)| if *r > m { (z.clone(), *r) } else { (az, m) });
    let verdict = if max < 1.0 - radius_margin { LatticeVerdict::Nonlattice } else { LatticeVerdict::SuspectedLattice };
    Ok(LatticeDiagnostic { grid, max_radius_off_zero: max, argmax, verdict })
}

#[derive(Debug, Clone, Serialize)]
pub struct RadiusSweep {
    pub per_model: Vec<f64>,
    pub supremum: f64,
    /// Largest `|r_{i+1} - r_i|` between adjacent family members.
    pub max_adjacent_jump: f64,
}

pub fn uniform_radius_sweep(family: &[MapModel], delta: f64, a: f64, resolution: usize) -> Result<RadiusSweep> {
    if family.is_empty() {
        return Err(LltError::InvalidInput("empty family".into()));
    }
    let per_model = family
        .iter()
        .map(|m| Ok(lattice_scan(m, delta, a, resolution, DEFAULT_RADIUS_MARGIN)?.max_radius_off_zero))
        .collect::<Result<Vec<f64>>>()?;
    let supremum = per_model.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_adjacent_jump = per_model.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    Ok(RadiusSweep { per_model, supremum, max_adjacent_jump })
}
