//! Markovian arrival processes seen through their embedded Markov renewal
//! process: `X_n` is the phase just after the n-th arrival and `Y_n` the
//! n-th arrival epoch. The semi-Markov kernel has density `e^{yD₀}D₁` on
//! `(0, ∞)`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::chain::{expm, norm0, GeneratorMatrix, StochasticMatrix};
use crate::error::{LltError, Result};
use crate::linalg::{self, CMatrix};

pub const DEFAULT_TAIL_TOL: f64 = 1e-8;
pub const DEFAULT_CROSS_TOL: f64 = 1e-5;
/// Frequencies where `‖Ĝ₁(ζ)^n‖₀` falls below this are dropped by the inversion.
pub const FREQUENCY_CUTOFF: f64 = 1e-12;
const MAX_FFT_LEN: usize = 1 << 22;

#[derive(Debug, Clone)]
pub struct MarpModel {
    d0: DMatrix<f64>,
    d1: DMatrix<f64>,
    embedded: StochasticMatrix,
    /// Invariant law of the embedded chain.
    phi: Vec<f64>,
    /// `(-D₀)^{-1}`
    neg_d0_inv: DMatrix<f64>,
    mean: f64,
}

impl MarpModel {
    pub fn new(d0: DMatrix<f64>, d1: DMatrix<f64>) -> Result<Self> {
        let n = d0.nrows();
        if n == 0 || !d0.is_square() || d1.shape() != d0.shape() {
            return Err(LltError::InvalidModel("D0 and D1 must be square of equal size".into()));
        }
        for i in 0..n {
            if !(d0[(i, i)] < 0.0) {
                return Err(LltError::InvalidModel(format!("D0[{i},{i}] must be strictly negative")));
            }
            for j in 0..n {
                if i != j && d0[(i, j)] < 0.0 {
                    return Err(LltError::InvalidModel(format!("D0[{i},{j}] is negative")));
                }
                if d1[(i, j)] < 0.0 {
                    return Err(LltError::InvalidModel(format!("D1[{i},{j}] is negative")));
                }
            }
        }
        let generator = GeneratorMatrix::new(&d0 + &d1)
            .map_err(|e| LltError::InvalidModel(format!("D0 + D1 is not a generator: {e}")))?;
        if !generator.is_irreducible() {
            return Err(LltError::InvalidModel("D0 + D1 must be irreducible".into()));
        }
        let max_re = d0.clone().complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        if max_re >= 0.0 {
            return Err(LltError::InvalidModel("D0 is not stable".into()));
        }
        let neg_d0_inv = (-&d0)
            .try_inverse()
            .ok_or_else(|| LltError::InvalidModel("D0 is singular".into()))?;
        let embedded = StochasticMatrix::from_computed(&neg_d0_inv * &d1, 1e-10)?;
        let phi = embedded
            .stationary_distribution()
            .map_err(|_| LltError::InvalidModel("embedded chain is reducible".into()))?
            .weights()
            .to_vec();
        let means = &neg_d0_inv * DVector::from_element(n, 1.0);
        let mean = phi.iter().zip(means.iter()).map(|(p, m)| p * m).sum();
        Ok(Self { d0, d1, embedded, phi, neg_d0_inv, mean })
    }

    pub fn from_rows(d0: &[Vec<f64>], d1: &[Vec<f64>]) -> Result<Self> {
        Self::new(linalg::matrix_from_rows(d0)?, linalg::matrix_from_rows(d1)?)
    }

    pub fn n(&self) -> usize {
        self.d0.nrows()
    }

    pub fn d0(&self) -> &DMatrix<f64> {
        &self.d0
    }

    pub fn d1(&self) -> &DMatrix<f64> {
        &self.d1
    }

    /// `P = (-D₀)^{-1} D₁`.
    pub fn embedded_chain(&self) -> &StochasticMatrix {
        &self.embedded
    }

    pub fn embedded_stationary(&self) -> &[f64] {
        &self.phi
    }

    /// Centering constant `m = E_φ[Y₁]`.
    pub fn mean_increment(&self) -> f64 {
        self.mean
    }

    /// `E_k[Y₁] = e_k (-D₀)^{-1} 1`.
    pub fn first_moment(&self, k: usize) -> f64 {
        self.neg_d0_inv.row(k).sum()
    }

    /// `E_k[Y₁³] = 3! e_k (-D₀)^{-3} 1`.
    pub fn third_moment(&self, k: usize) -> f64 {
        let cube = &self.neg_d0_inv * &self.neg_d0_inv * &self.neg_d0_inv;
        6.0 * cube.row(k).sum()
    }

    /// `G₁(y) = e^{yD₀}D₁` for `y > 0`, zero otherwise. At `y = 0` the
    /// right limit `D₁` is returned.
    pub fn kernel_density_g1(&self, y: f64) -> DMatrix<f64> {
        if y < 0.0 {
            return DMatrix::zeros(self.n(), self.n());
        }
        let e = expm(&self.d0, y).expect("finite kernel");
        (e * &self.d1).map(|x| x.max(0.0))
    }

    /// `dG₁/dy = D₀ e^{yD₀} D₁`.
    pub fn kernel_derivative_g1(&self, y: f64) -> DMatrix<f64> {
        let e = expm(&self.d0, y.max(0.0)).expect("finite kernel");
        &self.d0 * e * &self.d1
    }

    /// `Ĝ₁(ζ) = -(D₀ + iζI)^{-1} D₁`.
    pub fn fourier_kernel(&self, zeta: f64) -> CMatrix {
        let n = self.n();
        let a = linalg::to_complex(&self.d0) + CMatrix::identity(n, n) * Complex64::new(0.0, zeta);
        let rhs = linalg::to_complex(&self.d1);
        -a.lu().solve(&rhs).expect("D0 + iζI is invertible for stable D0")
    }

    /// Fourier kernel of the centered increment `Y₁ - m`.
    pub fn centered_fourier_kernel(&self, zeta: f64) -> CMatrix {
        self.fourier_kernel(zeta) * Complex64::from_polar(1.0, -zeta * self.mean)
    }

    /// Exact tail `P_k{Y_n > y}` via the phase-type representation of the
    /// n-th arrival epoch (block bidiagonal generator).
    pub fn tail_probability(&self, n_steps: usize, y: f64) -> Result<Vec<f64>> {
        let n = self.n();
        let size = n * n_steps;
        let mut b = DMatrix::zeros(size, size);
        for blk in 0..n_steps {
            let o = blk * n;
            b.view_mut((o, o), (n, n)).copy_from(&self.d0);
            if blk + 1 < n_steps {
                b.view_mut((o, o + n), (n, n)).copy_from(&self.d1);
            }
        }
        let e = expm(&b, y)?;
        Ok((0..n).map(|k| e.row(k).sum().clamp(0.0, 1.0)).collect())
    }

    fn max_tail(&self, n_steps: usize, y: f64) -> Result<f64> {
        Ok(self.tail_probability(n_steps, y)?.into_iter().fold(0.0, f64::max))
    }

    /// Smallest `y_max` (on a geometric ladder) whose tail mass is below `tail_tol`.
    pub fn suggest_y_max(&self, n_steps: usize, tail_tol: f64) -> Result<f64> {
        // single-step tail bound from stability: ‖e^{yD₀}‖₀ < 1e-10
        let mut y = 1.0;
        while norm0(&expm(&self.d0, y)?) >= 1e-10 {
            y *= 1.5;
        }
        let mean_max = (0..self.n()).map(|k| self.first_moment(k)).fold(0.0, f64::max);
        y = y.max(n_steps as f64 * mean_max);
        while self.max_tail(n_steps, y)? > tail_tol {
            y *= 1.25;
        }
        Ok(y)
    }

    fn resolve_grid(&self, n_steps: usize, grid: &GridSpec) -> Result<(f64, usize)> {
        if n_steps == 0 {
            return Err(LltError::InvalidInput("n_steps must be at least 1".into()));
        }
        if !(grid.h > 0.0) {
            return Err(LltError::InvalidInput("grid step must be positive".into()));
        }
        let y_max = match grid.y_max {
            Some(y) => {
                let tail = self.max_tail(n_steps, y)?;
                if tail > grid.tail_tol {
                    return Err(LltError::GridTooSmall {
                        tail_mass: tail,
                        suggested_y_max: self.suggest_y_max(n_steps, grid.tail_tol)?,
                    });
                }
                y
            }
            None => self.suggest_y_max(n_steps, grid.tail_tol)?,
        };
        let len = (y_max / grid.h).ceil() as usize + 1;
        Ok((grid.h, len))
    }

    /// Samples `G₁` on the grid `y_j = j h`, using the right limit at 0.
    fn sample_g1(&self, h: f64, len: usize) -> Vec<DMatrix<f64>> {
        let step = expm(&self.d0, h).expect("finite kernel");
        let mut e = DMatrix::identity(self.n(), self.n());
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push((&e * &self.d1).map(|x| x.max(0.0)));
            e = &e * &step;
        }
        out
    }

    /// `G_n = G_{n-1} ⋆ G₁` by iterated trapezoid convolution on a uniform grid.
    pub fn convolve_density(&self, n_steps: usize, grid: &GridSpec) -> Result<KernelDensity> {
        let (h, len) = self.resolve_grid(n_steps, grid)?;
        let g1 = KernelDensity { n_steps: 1, h, values: self.sample_g1(h, len) };
        let mut acc = g1.clone();
        for _ in 1..n_steps {
            acc = g1.convolve(&acc)?;
        }
        Ok(acc)
    }

    /// Recovers `G_n` by discrete Fourier inversion of `Ĝ₁(ζ)^n`.
    pub fn invert_density_fft(&self, n_steps: usize, grid: &GridSpec) -> Result<KernelDensity> {
        let (h, len) = self.resolve_grid(n_steps, grid)?;
        let n = self.n();
        let y_max = h * (len - 1) as f64;
        // period: power-of-two multiple of h, at least twice the support window
        let mut period_cells = 1usize;
        while (period_cells as f64) * h < 2.0 * y_max {
            period_cells *= 2;
        }
        let period = period_cells as f64 * h;
        let cutoff_norm = |z: f64| -> f64 {
            let p = matrix_power(&self.fourier_kernel(z), n_steps);
            norm0(&p)
        };
        let mut zeta_c = 1.0;
        while cutoff_norm(zeta_c) >= FREQUENCY_CUTOFF && zeta_c * period / std::f64::consts::PI < MAX_FFT_LEN as f64 {
            zeta_c *= 2.0;
        }
        let needed = ((zeta_c * period / std::f64::consts::PI).ceil() as usize).max(period_cells);
        let fft_len = needed.next_power_of_two().min(MAX_FFT_LEN).max(period_cells);
        let refine = fft_len / period_cells;

        let mut buffers = vec![vec![Complex64::new(0.0, 0.0); fft_len]; n * n];
        for idx in 0..fft_len {
            let k = if idx < fft_len / 2 { idx as f64 } else { idx as f64 - fft_len as f64 };
            let zeta = 2.0 * std::f64::consts::PI * k / period;
            let m = matrix_power(&self.fourier_kernel(zeta), n_steps);
            for r in 0..n {
                for c in 0..n {
                    buffers[r * n + c][idx] = m[(r, c)];
                }
            }
        }
        let fft = FftPlanner::new().plan_fft_forward(fft_len);
        for buf in buffers.iter_mut() {
            fft.process(buf);
        }
        let values: Vec<DMatrix<f64>> = (0..len)
            .map(|j| DMatrix::from_fn(n, n, |r, c| buffers[r * n + c][j * refine].re / period))
            .collect();
        let density = KernelDensity { n_steps, h, values };
        let expected = self.embedded.power(n_steps);
        let mismatch = norm0(&(density.mass() - expected));
        if mismatch > grid.mass_tol {
            return Err(LltError::ResolutionError { mismatch, tol: grid.mass_tol });
        }
        Ok(density)
    }

    /// Checks of the absolute-continuity conditions for the embedded renewal process.
    pub fn ac_diagnostics(&self, t0: usize) -> Result<MarpAcReport> {
        if t0 == 0 {
            return Err(LltError::InvalidInput("t0 must be a positive integer".into()));
        }
        let nf = self.n() as f64;
        let d1n = norm0(&self.d1);
        let probes = [10.0, 100.0, 1000.0];
        let fourier_decay = probes
            .iter()
            .map(|&z| {
                let measured = [z, -z]
                    .iter()
                    .map(|&s| norm0(&matrix_power(&self.fourier_kernel(s), t0)))
                    .fold(0.0, f64::max);
                let single = [z, -z].iter().map(|&s| norm0(&self.fourier_kernel(s))).fold(0.0, f64::max);
                FourierDecayProbe {
                    zeta: z,
                    measured,
                    bound: (2.0 * nf * d1n).powi(t0 as i32) / z.powi(t0 as i32),
                    single_step: single,
                    single_step_bound: 2.0 * d1n / z,
                }
            })
            .collect();
        let y_max = self.suggest_y_max(1, 1e-12)?;
        let samples = 2000;
        let derivative_sup = (0..=samples)
            .map(|i| norm0(&self.kernel_derivative_g1(y_max * i as f64 / samples as f64)))
            .fold(0.0, f64::max);
        let derivative_bound = (nf * norm0(&self.d0).max(d1n)).powi(2);
        let step = 1e-5;
        let fd = (self.kernel_density_g1(1.0 + step) - self.kernel_density_g1(1.0 - step)) / (2.0 * step);
        let derivative_fd_residual = norm0(&(fd - self.kernel_derivative_g1(1.0)));
        let density_sup = (0..=samples)
            .map(|i| norm0(&self.kernel_density_g1(y_max * i as f64 / samples as f64)))
            .fold(0.0, f64::max);
        Ok(MarpAcReport {
            t0,
            singular_mass: 0.0,
            fourier_decay,
            density_sup,
            density_bound: nf * d1n,
            derivative_sup,
            derivative_bound,
            derivative_fd_residual,
            boundary_value_n1: norm0(&self.kernel_density_g1(0.0)),
        })
    }
}

pub(crate) fn matrix_power(m: &CMatrix, n: usize) -> CMatrix {
    let mut result = CMatrix::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Uniform grid `y_j = j·h` on `[0, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub h: f64,
    /// Upper end of the grid; chosen from the exact tail when absent.
    #[serde(default)]
    pub y_max: Option<f64>,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    /// Tolerated deviation of the inverted density's mass from `P^n`.
    #[serde(default = "default_mass_tol")]
    pub mass_tol: f64,
}

fn default_tail_tol() -> f64 {
    DEFAULT_TAIL_TOL
}

fn default_mass_tol() -> f64 {
    DEFAULT_CROSS_TOL
}

impl GridSpec {
    pub fn new(h: f64) -> Self {
        Self { h, y_max: None, tail_tol: DEFAULT_TAIL_TOL, mass_tol: DEFAULT_CROSS_TOL }
    }

    pub fn with_y_max(mut self, y_max: f64) -> Self {
        self.y_max = Some(y_max);
        self
    }
}

/// Matrix-valued density `G_n(y)` sampled on `y_j = j·h`.
#[derive(Debug, Clone)]
pub struct KernelDensity {
    pub n_steps: usize,
    pub h: f64,
    pub values: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FourierDecayProbe {
    pub zeta: f64,
    /// `max_{±ζ} ‖Ĝ₁(ζ)^{t0}‖₀`
    pub measured: f64,
    /// `(2N‖D₁‖₀)^{t0} / |ζ|^{t0}`
    pub bound: f64,
    pub single_step: f64,
    /// `2‖D₁‖₀ / |ζ|`
    pub single_step_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MarpAcReport {
    pub t0: usize,
    /// The kernel has a density, so there is no singular part.
    pub singular_mass: f64,
    pub fourier_decay: Vec<FourierDecayProbe>,
    pub density_sup: f64,
    /// `N‖D₁‖₀`
    pub density_bound: f64,
    pub derivative_sup: f64,
    /// `(N max(‖D₀‖₀, ‖D₁‖₀))²`
    pub derivative_bound: f64,
    pub derivative_fd_residual: f64,
    /// `‖G₁(0)‖₀ = ‖D₁‖₀`; `G_n(0) = 0` for `n ≥ 2`.
    pub boundary_value_n1: f64,
}

impl KernelDensity {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    pub fn n_phases(&self) -> usize {
        self.values.first().map_or(0, |m| m.nrows())
    }

    /// Trapezoid integral `∫ G_n(y) dy` over the grid.
    pub fn mass(&self) -> DMatrix<f64> {
        let n = self.n_phases();
        let mut acc = DMatrix::zeros(n, n);
        for (j, v) in self.values.iter().enumerate() {
            let w = if j == 0 || j + 1 == self.len() { 0.5 } else { 1.0 };
            acc += v * (w * self.h);
        }
        acc
    }

    pub fn sup_norm0(&self) -> f64 {
        self.values.iter().map(norm0).fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.values.iter().flat_map(|m| m.iter().copied()).fold(f64::INFINITY, f64::min)
    }

    /// Trapezoid Fourier transform `∫ e^{iζy} G_n(y) dy`.
    pub fn fourier(&self, zeta: f64) -> CMatrix {
        let n = self.n_phases();
        let mut acc = CMatrix::zeros(n, n);
        for (j, v) in self.values.iter().enumerate() {
            let w = if j == 0 || j + 1 == self.len() { 0.5 } else { 1.0 };
            let phase = Complex64::from_polar(w * self.h, zeta * self.y(j));
            acc += linalg::to_complex(v) * phase;
        }
        acc
    }

    /// Trapezoid convolution `(self ⋆ other)(y) = ∫₀^y self(u) other(y-u) du`
    /// (matrix product, `self` first), evaluated with FFTs.
    pub fn convolve(&self, other: &KernelDensity) -> Result<KernelDensity> {
        if (self.h - other.h).abs() > 1e-15 * self.h || self.len() != other.len() {
            return Err(LltError::InvalidInput("convolution needs identical grids".into()));
        }
        let n = self.n_phases();
        let len = self.len();
        let fft_len = (2 * len).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(fft_len);
        let inv = planner.plan_fft_inverse(fft_len);
        let transform = |kd: &KernelDensity| -> Vec<Vec<Complex64>> {
            (0..n * n)
                .map(|e| {
                    let (r, c) = (e / n, e % n);
                    let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
                    for (j, v) in kd.values.iter().enumerate() {
                        buf[j] = Complex64::new(v[(r, c)], 0.0);
                    }
                    fwd.process(&mut buf);
                    buf
                })
                .collect()
        };
        let a = transform(self);
        let b = transform(other);
        let mut values = vec![DMatrix::zeros(n, n); len];
        for r in 0..n {
            for c in 0..n {
                let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
                for j in 0..n {
                    for (f, slot) in buf.iter_mut().enumerate() {
                        *slot += a[r * n + j][f] * b[j * n + c][f];
                    }
                }
                inv.process(&mut buf);
                for (i, v) in values.iter_mut().enumerate() {
                    v[(r, c)] = buf[i].re / fft_len as f64;
                }
            }
        }
        for (i, v) in values.iter_mut().enumerate() {
            // trapezoid end corrections and the exact zero at y = 0
            let end = &self.values[0] * &other.values[i] + &self.values[i] * &other.values[0];
            *v = (&*v - end * 0.5) * self.h;
            if i == 0 {
                v.fill(0.0);
            }
            v.apply(|x| *x = x.max(0.0));
        }
        Ok(KernelDensity { n_steps: self.n_steps + other.n_steps, h: self.h, values })
    }

    /// CSV: `y`, then the N² entries in row-major `(k, ℓ)` order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.n_phases();
        let mut header = vec!["y".to_string()];
        for k in 0..n {
            for l in 0..n {
                header.push(format!("g_{k}_{l}"));
            }
        }
        writeln!(w, "{}", header.join(","))?;
        for (j, v) in self.values.iter().enumerate() {
            let mut row = vec![format!("{}", self.y(j))];
            for k in 0..n {
                for l in 0..n {
                    row.push(format!("{:e}", v[(k, l)]));
                }
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_phase() -> MarpModel {
        MarpModel::from_rows(&[vec![-2.0, 1.0], vec![0.0, -3.0]], &[vec![1.0, 0.0], vec![1.0, 2.0]]).unwrap()
    }

    fn poisson(rate: f64) -> MarpModel {
        MarpModel::from_rows(&[vec![-rate]], &[vec![rate]]).unwrap()
    }

    fn gamma_pdf(shape: usize, y: f64) -> f64 {
        let fact: f64 = (1..shape).map(|i| i as f64).product();
        y.powi(shape as i32 - 1) * (-y).exp() / fact
    }

    #[test]
    fn embedded_chain_examples() {
        let p = two_phase().embedded_chain().matrix().clone();
        let want = DMatrix::from_row_slice(2, 2, &[2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0]);
        assert!(norm0(&(p - want)) < 1e-14);
        assert_eq!(poisson(3.0).embedded_chain().matrix()[(0, 0)], 1.0);
    }

    #[test]
    fn rejects_invalid_models() {
        assert!(MarpModel::from_rows(&[vec![-1.0]], &[vec![2.0]]).is_err());
        assert!(MarpModel::from_rows(&[vec![-1.0, 1.0], vec![0.0, -1.0]], &[vec![0.0, 0.0], vec![0.0, 1.0]]).is_err());
        assert!(MarpModel::from_rows(&[vec![1.0]], &[vec![-1.0]]).is_err());
    }

    #[test]
    fn g1_examples() {
        let m = poisson(1.0);
        assert_eq!(m.kernel_density_g1(-1.0)[(0, 0)], 0.0);
        assert!((m.kernel_density_g1(2.0)[(0, 0)] - (-2.0f64).exp()).abs() < 1e-15);
        let tp = two_phase();
        assert!(norm0(&(tp.kernel_density_g1(1e-12) - tp.d1())) < 1e-10);
    }

    #[test]
    fn third_moment_examples() {
        assert!((poisson(1.0).third_moment(0) - 6.0).abs() < 1e-14);
        assert!((poisson(2.0).third_moment(0) - 0.75).abs() < 1e-14);
    }

    #[test]
    fn fourier_kernel_examples() {
        let tp = two_phase();
        let z0 = linalg::real_part(&tp.fourier_kernel(0.0));
        assert!(norm0(&(z0 - tp.embedded_chain().matrix())) < 1e-14);
        let m = poisson(2.0);
        let z = 0.7;
        let want = Complex64::new(1.0, 0.0) / Complex64::new(1.0, -z / 2.0);
        assert!((m.fourier_kernel(z)[(0, 0)] - want).norm() < 1e-14);
        for &z in &[10.0, 100.0, 1000.0] {
            assert!(norm0(&tp.fourier_kernel(z)) * z <= 2.0 * norm0(tp.d1()));
        }
    }

    #[test]
    fn convolution_reproduces_gamma() {
        let m = poisson(1.0);
        let kd = m.convolve_density(3, &GridSpec::new(1e-3)).unwrap();
        let err = (0..kd.len()).map(|j| (kd.values[j][(0, 0)] - gamma_pdf(3, kd.y(j))).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "sup error {err}");
        assert_eq!(kd.values[0][(0, 0)], 0.0);
    }

    #[test]
    fn convolution_mass_support_and_bound() {
        let m = two_phase();
        for n in 1..=4 {
            let kd = m.convolve_density(n, &GridSpec::new(2e-3)).unwrap();
            let mass_err = norm0(&(kd.mass() - m.embedded_chain().power(n)));
            assert!(mass_err < 1e-5, "n={n}: {mass_err}");
            assert!(kd.sup_norm0() <= 2.0 * norm0(m.d1()));
            assert!(kd.min_entry() >= 0.0);
            if n >= 2 {
                assert_eq!(norm0(&kd.values[0]), 0.0);
            } else {
                assert!(norm0(&(kd.values[0].clone() - m.d1())) < 1e-14);
            }
        }
    }

    #[test]
    fn convolution_is_associative() {
        let m = two_phase();
        let grid = GridSpec::new(2e-3).with_y_max(30.0);
        let g2 = m.convolve_density(2, &grid).unwrap();
        let g3 = m.convolve_density(3, &grid).unwrap();
        let g5 = m.convolve_density(5, &grid).unwrap();
        let via = g2.convolve(&g3).unwrap();
        let err = via.values.iter().zip(&g5.values).map(|(a, b)| norm0(&(a - b))).fold(0.0, f64::max);
        assert!(err < 2e-5, "{err}");
    }

    #[test]
    fn fft_inversion_agrees_with_convolution() {
        let m = two_phase();
        let grid = GridSpec::new(1e-3).with_y_max(40.0);
        let conv = m.convolve_density(3, &grid).unwrap();
        let inv = m.invert_density_fft(3, &grid).unwrap();
        let err = conv.values.iter().zip(&inv.values).map(|(a, b)| norm0(&(a - b))).fold(0.0, f64::max);
        assert!(err < DEFAULT_CROSS_TOL, "{err}");
        assert!(inv.min_entry() >= -1e-8);
    }

    #[test]
    fn fft_inversion_gamma() {
        let m = poisson(1.0);
        let inv = m.invert_density_fft(3, &GridSpec::new(1e-2)).unwrap();
        let err = (0..inv.len()).map(|j| (inv.values[j][(0, 0)] - gamma_pdf(3, inv.y(j))).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn grid_too_small_suggests_larger() {
        let m = two_phase();
        match m.convolve_density(4, &GridSpec::new(1e-2).with_y_max(2.0)) {
            Err(LltError::GridTooSmall { suggested_y_max, .. }) => assert!(suggested_y_max > 2.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn discrete_transform_matches_kernel_power() {
        let m = two_phase();
        let kd = m.convolve_density(3, &GridSpec::new(1e-3)).unwrap();
        for &z in &[0.0, 0.5, 2.0] {
            let exact = matrix_power(&m.fourier_kernel(z), 3);
            assert!(norm0(&(kd.fourier(z) - exact)) < 1e-5);
        }
    }

    #[test]
    fn ac_diagnostics_bounds() {
        let m = two_phase();
        let rep = m.ac_diagnostics(2).unwrap();
        assert_eq!(rep.singular_mass, 0.0);
        for p in &rep.fourier_decay {
            assert!(p.measured <= p.bound);
            assert!(p.single_step <= p.single_step_bound);
        }
        assert!(rep.derivative_sup <= rep.derivative_bound);
        assert!(rep.density_sup <= rep.density_bound);
        assert!(rep.derivative_fd_residual < 1e-8);
    }

    #[test]
    fn csv_layout() {
        let m = two_phase();
        let kd = m.convolve_density(1, &GridSpec::new(0.5).with_y_max(30.0)).unwrap();
        let mut buf = Vec::new();
        kd.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "y,g_0_0,g_0_1,g_1_0,g_1_1");
        assert_eq!(lines.next().unwrap().split(',').count(), 5);
    }
}
