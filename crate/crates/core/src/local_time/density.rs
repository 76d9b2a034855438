//! The joint density `ψ_{k,ℓ,t}` of `Y_t` on the open simplex
//! `𝒞_t = {y ∈ (0,t)^{N-1} : ⟨y,1⟩ < t}`.
//!
//! Conditionally on `n` uniformization epochs the holding intervals are
//! uniform spacings, so with `y_N = t - ⟨y,1⟩`
//!
//! `ψ_{kℓ}(y) = a^{N-1} Σ_κ Π_j Pois(a y_j; κ_j) · P_k{V^j_m = κ_j + 1 ∀j, Z_m = ℓ}`
//!
//! where `m = Σκ + N - 1`. The sum runs over `κ ∈ ℕ^N`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use super::visits::{dp_table_bytes, max_steps_within, VisitDp, DP_MEMORY_BUDGET};
use super::LocalTimeModel;
use crate::error::{LltError, Result};
use crate::linalg::CMatrix;
use crate::quadrature::simplex_rule;

/// Target for the dropped Poisson tail, relative to `a^{N-1}`.
pub const SERIES_TOL: f64 = 1e-10;
/// Poisson weights below this are skipped term by term.
const PMF_FLOOR: f64 = 1e-17;
const SIMPLEX_TOL: f64 = 1e-12;

/// Truncation order `at + 12√(at) + 30` of the Poisson series.
pub fn series_order(a: f64, t: f64) -> usize {
    let at = a * t;
    (at + 12.0 * at.sqrt() + 30.0).ceil() as usize
}

/// `x = Π(y_j/t)^{κ_j} (1-Σy_j/t)^{n-Σκ} / (κ₁!⋯(n-Σκ)!)`, so that `n!·x` is
/// the multinomial probability and sums to one over all count vectors.
pub fn multinomial_coefficient(n: usize, counts: &[usize], t: f64, y: &[f64]) -> Result<f64> {
    if counts.len() != y.len() {
        return Err(LltError::InvalidInput("counts and y must have equal length".into()));
    }
    let used: usize = counts.iter().sum();
    if used > n {
        return Err(LltError::InvalidInput("counts exceed n".into()));
    }
    let tol = SIMPLEX_TOL * t.max(1.0);
    let rest = t - y.iter().sum::<f64>();
    if y.iter().any(|&v| v < -tol) || rest < -tol {
        return Err(LltError::OutOfSimplex);
    }
    let mut probs: Vec<f64> = y.iter().map(|v| (v / t).max(0.0)).collect();
    probs.push((rest / t).max(0.0));
    let mut all: Vec<usize> = counts.to_vec();
    all.push(n - used);
    let mut log = 0.0;
    for (&k, &p) in all.iter().zip(&probs) {
        if k > 0 {
            if p == 0.0 {
                return Ok(0.0);
            }
            log += k as f64 * p.ln();
        }
        log -= ln_gamma(k as f64 + 1.0);
    }
    Ok(log.exp())
}

/// One entry of `Ψ_t(y)` with the bound on the dropped series tail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDensityEval {
    pub t: f64,
    pub k: usize,
    pub l: usize,
    pub y: Vec<f64>,
    pub value: f64,
    pub truncation_error: f64,
}

/// Coefficients `P_k{V_m = κ + 1, Z_m = ℓ}` for all `κ` with `Σκ ≤ k_store`,
/// laid out as runs over `κ_N` for each `(κ₁, …, κ_{N-1})`.
#[derive(Debug, Clone)]
pub struct DensitySeries {
    n: usize,
    a: f64,
    t_max: f64,
    drift: Vec<f64>,
    k_store: usize,
    radix: usize,
    offsets: Vec<usize>,
    q: Vec<f64>,
}

/// Poisson weights for one coordinate on a window `[lo, lo + w.len())`.
struct PoissonWindow {
    lo: usize,
    w: Vec<f64>,
}

impl PoissonWindow {
    fn new(lambda: f64, k_cap: usize) -> Self {
        if lambda <= 0.0 {
            return Self { lo: 0, w: vec![1.0] };
        }
        let mode = (lambda.floor() as usize).min(k_cap);
        let at_mode = (-lambda + mode as f64 * lambda.ln() - ln_gamma(mode as f64 + 1.0)).exp();
        let mut down = Vec::new();
        let mut p = at_mode;
        let mut k = mode;
        while k > 0 {
            p *= k as f64 / lambda;
            if p < PMF_FLOOR {
                break;
            }
            k -= 1;
            down.push(p);
        }
        let lo = mode - down.len();
        down.reverse();
        down.push(at_mode);
        let mut p = at_mode;
        let mut k = mode;
        while k < k_cap {
            p *= lambda / (k + 1) as f64;
            if p < PMF_FLOOR {
                break;
            }
            k += 1;
            down.push(p);
        }
        Self { lo, w: down }
    }

    fn hi(&self) -> usize {
        self.lo + self.w.len() - 1
    }

    fn get(&self, k: usize) -> f64 {
        if k < self.lo || k > self.hi() {
            0.0
        } else {
            self.w[k - self.lo]
        }
    }
}

/// What to accumulate while walking the series.
#[derive(Clone, Copy, PartialEq)]
enum Target {
    Value,
    Shifted,
}

impl DensitySeries {
    pub fn new(model: &LocalTimeModel, t_max: f64) -> Result<Self> {
        Self::with_budget(model, t_max, DP_MEMORY_BUDGET)
    }

    pub fn with_budget(model: &LocalTimeModel, t_max: f64, budget: usize) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(LltError::InvalidInput("t_max must be positive".into()));
        }
        let n = model.n();
        let a = model.rate();
        let k_max = series_order(a, t_max);
        let k_store = k_max + 1;
        let steps = k_store + n - 1;
        let store_bytes = |s: usize| -> usize {
            let ks = s.saturating_sub(n - 1);
            let runs = binomial(ks + n, n);
            runs.saturating_mul(n * n * 8).saturating_add((ks + 1).saturating_pow(n as u32 - 1) * 8)
        };
        if dp_table_bytes(n, steps).saturating_add(store_bytes(steps)) > budget {
            return Err(LltError::BudgetExceeded { max_steps: max_steps_within(n, budget, store_bytes) });
        }
        let radix = k_store + 1;
        let d = n - 1;
        let mut offsets = vec![usize::MAX; radix.pow(d as u32)];
        let mut total = 0usize;
        for (idx, off) in offsets.iter_mut().enumerate() {
            let s: usize = (0..d).map(|j| (idx / radix.pow(j as u32)) % radix).sum();
            if s <= k_store {
                *off = total;
                total += k_store - s + 1;
            }
        }
        let nn = n * n;
        let mut q = vec![0.0; total * nn];
        let mut dp = VisitDp::new(model.p_tilde().matrix(), steps + 2);
        loop {
            let m = dp.step_index();
            if m + 1 >= n {
                dp.for_each_cell(m + 1, |cell, counts| {
                    let explicit: usize = counts.iter().sum();
                    if counts.iter().any(|&c| c == 0) || explicit >= m + 1 {
                        return;
                    }
                    let k_last = m + 1 - explicit - 1;
                    let idx: usize = counts.iter().enumerate().map(|(j, c)| (c - 1) * radix.pow(j as u32)).sum();
                    let base = (offsets[idx] + k_last) * nn;
                    q[base..base + nn].copy_from_slice(&dp.cur[cell * nn..cell * nn + nn]);
                });
            }
            if m == steps {
                break;
            }
            dp.advance();
        }
        Ok(Self { n, a, t_max, drift: model.drift(), k_store, radix, offsets, q })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rate(&self) -> f64 {
        self.a
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Largest total count `Σκ` summed by the series.
    pub fn k_max(&self) -> usize {
        self.k_store - 1
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if !(t > 0.0) {
            return Err(LltError::InvalidInput("t must be positive".into()));
        }
        Ok(())
    }

    /// Whether `y` lies in the closed simplex `𝒞̄_t`.
    fn in_closed(&self, t: f64, y: &[f64]) -> bool {
        let tol = SIMPLEX_TOL * t.max(1.0);
        y.iter().all(|&v| v >= -tol) && y.iter().sum::<f64>() <= t + tol
    }

    fn windows(&self, t: f64, y: &[f64]) -> Vec<PoissonWindow> {
        let cap = self.k_store - 1;
        let mut lambdas: Vec<f64> = y.iter().map(|v| self.a * v.max(0.0)).collect();
        lambdas.push(self.a * (t - y.iter().sum::<f64>()).max(0.0));
        lambdas.into_iter().map(|l| PoissonWindow::new(l, cap)).collect()
    }

    /// Walks `κ` over the windows with `Σκ ≤ k_max`; returns the included
    /// Poisson weight. `Target::Value` accumulates `q(κ)` into `acc[0]`;
    /// `Target::Shifted` accumulates `q(κ + e_j)` into `acc[j]` for every `j`.
    fn walk(&self, wins: &[PoissonWindow], target: Target, acc: &mut [Vec<f64>]) -> f64 {
        let d = self.n - 1;
        let nn = self.n * self.n;
        let k_max = self.k_store - 1;
        let mut included = 0.0;
        let mut counts = vec![0usize; d];
        for (j, c) in counts.iter_mut().enumerate() {
            *c = wins[j].lo;
        }
        if counts.iter().sum::<usize>() > k_max {
            return 0.0;
        }
        let strides: Vec<usize> = (0..d).map(|j| self.radix.pow(j as u32)).collect();
        let last = &wins[d];
        loop {
            let used: usize = counts.iter().sum();
            if used <= k_max {
                let mut prefix = 1.0;
                for j in 0..d {
                    prefix *= wins[j].get(counts[j]);
                }
                let idx: usize = counts.iter().zip(&strides).map(|(c, s)| c * s).sum();
                let off = self.offsets[idx];
                let hi = last.hi().min(k_max - used);
                if last.lo <= hi {
                    for kl in last.lo..=hi {
                        let w = prefix * last.w[kl - last.lo];
                        included += w;
                        match target {
                            Target::Value => {
                                let base = (off + kl) * nn;
                                for (o, v) in acc[0].iter_mut().zip(&self.q[base..base + nn]) {
                                    *o += w * v;
                                }
                            }
                            Target::Shifted => {
                                for j in 0..d {
                                    let base = (self.offsets[idx + strides[j]] + kl) * nn;
                                    for (o, v) in acc[j].iter_mut().zip(&self.q[base..base + nn]) {
                                        *o += w * v;
                                    }
                                }
                                let base = (off + kl + 1) * nn;
                                for (o, v) in acc[d].iter_mut().zip(&self.q[base..base + nn]) {
                                    *o += w * v;
                                }
                            }
                        }
                    }
                }
            }
            // odometer over the explicit coordinates
            let mut j = 0;
            loop {
                if j == d {
                    return included;
                }
                counts[j] += 1;
                if counts[j] <= wins[j].hi() && counts.iter().sum::<usize>() <= k_max {
                    break;
                }
                counts[j] = wins[j].lo;
                j += 1;
            }
        }
    }

    fn check_accuracy(&self, included: f64) -> Result<f64> {
        let dropped = (1.0 - included).max(0.0);
        if dropped > SERIES_TOL {
            return Err(LltError::AccuracyError { achieved: dropped, target: SERIES_TOL });
        }
        Ok(self.a.powi(self.n as i32 - 1) * dropped)
    }

    /// The matrix `Ψ_t(y)` and a bound on the dropped series tail. Zero
    /// outside the closed simplex; on the boundary the series is the
    /// restriction with the corresponding counts pinned.
    pub fn evaluate(&self, t: f64, y: &[f64]) -> Result<(DMatrix<f64>, f64)> {
        self.check_t(t)?;
        if y.len() != self.n - 1 {
            return Err(LltError::InvalidInput(format!("y must have {} components", self.n - 1)));
        }
        if !self.in_closed(t, y) {
            return Ok((DMatrix::zeros(self.n, self.n), 0.0));
        }
        let wins = self.windows(t, y);
        let mut acc = vec![vec![0.0; self.n * self.n]];
        let included = self.walk(&wins, Target::Value, &mut acc);
        let err = self.check_accuracy(included)?;
        let scale = self.a.powi(self.n as i32 - 1);
        // row-major storage: acc[start * N + end]
        Ok((DMatrix::from_row_slice(self.n, self.n, &acc[0]) * scale, err))
    }

    pub fn joint_density(&self, k: usize, l: usize, t: f64, y: &[f64]) -> Result<JointDensityEval> {
        if k >= self.n || l >= self.n {
            return Err(LltError::InvalidInput("state out of range".into()));
        }
        let (m, err) = self.evaluate(t, y)?;
        Ok(JointDensityEval { t, k, l, y: y.to_vec(), value: m[(k, l)], truncation_error: err })
    }

    /// `y ↦ y + m′t`.
    pub fn uncenter(&self, t: f64, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.drift).map(|(v, m)| v + m * t).collect()
    }

    /// Density of the centered variable `Y_t - m′t`.
    pub fn centered_density(&self, k: usize, l: usize, t: f64, y: &[f64]) -> Result<f64> {
        Ok(self.joint_density(k, l, t, &self.uncenter(t, y))?.value)
    }

    /// `∂Ψ_t/∂y_j` on the open simplex:
    /// `a^N Σ_κ Π Pois · [q(κ + e_j) - q(κ + e_N)]`.
    pub fn gradient(&self, t: f64, y: &[f64], j: usize) -> Result<DMatrix<f64>> {
        self.check_t(t)?;
        let d = self.n - 1;
        if y.len() != d || j >= d {
            return Err(LltError::InvalidInput("bad coordinate".into()));
        }
        if y.iter().any(|&v| v <= 0.0) || y.iter().sum::<f64>() >= t {
            return Err(LltError::OutOfSimplex);
        }
        let wins = self.windows(t, y);
        let mut acc = vec![vec![0.0; self.n * self.n]; self.n];
        let included = self.walk(&wins, Target::Shifted, &mut acc);
        self.check_accuracy(included)?;
        let scale = self.a.powi(self.n as i32);
        let diff: Vec<f64> = acc[j].iter().zip(&acc[d]).map(|(p, q)| (p - q) * scale).collect();
        Ok(DMatrix::from_row_slice(self.n, self.n, &diff))
    }

    pub fn density_gradient(&self, k: usize, l: usize, t: f64, y: &[f64], j: usize) -> Result<f64> {
        Ok(self.gradient(t, y, j)?[(k, l)])
    }

    /// Number of Gauss–Legendre nodes per collapsed coordinate used to
    /// integrate `e^{i⟨ζ,y⟩}Ψ_t(y)` over the simplex. On `𝒞_t` the series is
    /// `e^{-at}` times a polynomial of degree `≤ k_max`, so the rule is exact
    /// for the truncated series when `ζ = 0`.
    pub fn quadrature_nodes(&self, t: f64, zeta_inf: f64) -> usize {
        let deg = series_order(self.a, t).min(self.k_max()) as f64;
        ((deg + zeta_inf * t) / 2.0).ceil() as usize + 16
    }

    /// `∫_{𝒞_t} Ψ_t(y) dy`.
    pub fn integrate(&self, t: f64) -> Result<DMatrix<f64>> {
        let rule = simplex_rule(self.n - 1, t, self.quadrature_nodes(t, 0.0));
        let mut acc = DMatrix::zeros(self.n, self.n);
        for (y, w) in rule {
            acc += self.evaluate(t, &y)?.0 * w;
        }
        Ok(acc)
    }

    /// `Ψ̂_t(ζ) = ∫_{𝒞_t} e^{i⟨ζ,y⟩} Ψ_t(y) dy` (uncentered).
    pub fn fourier(&self, t: f64, zeta: &[f64]) -> Result<CMatrix> {
        if zeta.len() != self.n - 1 {
            return Err(LltError::InvalidInput("ζ has the wrong dimension".into()));
        }
        let zinf = zeta.iter().fold(0.0f64, |m, z| m.max(z.abs()));
        let rule = simplex_rule(self.n - 1, t, self.quadrature_nodes(t, zinf));
        let mut acc = CMatrix::zeros(self.n, self.n);
        for (y, w) in rule {
            let phase = Complex64::from_polar(w, y.iter().zip(zeta).map(|(a, b)| a * b).sum());
            let (m, _) = self.evaluate(t, &y)?;
            acc += m.map(|x| Complex64::new(x, 0.0)) * phase;
        }
        if acc.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LltError::AccuracyError { achieved: f64::NAN, target: SERIES_TOL });
        }
        Ok(acc)
    }

    /// CSV of `Σ_ℓ Ψ_t(y)_{kℓ}` on the tensor grid of `[0, t]^{N-1}` with
    /// `points` nodes per axis, restricted to the closed simplex. Columns
    /// `y_0,…,y_{N-2},value`.
    pub fn write_slice_csv<W: std::io::Write>(&self, k: usize, t: f64, points: usize, mut w: W) -> Result<()> {
        if k >= self.n || points < 2 {
            return Err(LltError::InvalidInput("bad state or grid size".into()));
        }
        let d = self.n - 1;
        let header: Vec<String> = (0..d).map(|j| format!("y_{j}")).chain(std::iter::once("value".into())).collect();
        writeln!(w, "{}", header.join(","))?;
        let mut idx = vec![0usize; d];
        loop {
            let y: Vec<f64> = idx.iter().map(|&i| t * i as f64 / (points - 1) as f64).collect();
            if y.iter().sum::<f64>() <= t * (1.0 + 1e-12) {
                let v = self.evaluate(t, &y)?.0.row(k).sum();
                let cols: Vec<String> = y.iter().map(|x| format!("{x}")).collect();
                writeln!(w, "{},{v:e}", cols.join(","))?;
            }
            let mut j = 0;
            while j < d {
                idx[j] += 1;
                if idx[j] < points {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == d {
                return Ok(());
            }
        }
    }

    /// `Γ_{t₀}(ζ) = sup_{t ∈ [t₀, 2t₀)} ‖Ψ̂_t(ζ)‖₀` over `n_t` equally spaced horizons.
    pub fn fourier_tail_gamma(&self, t0: f64, zeta: &[f64], n_t: usize) -> Result<f64> {
        self.check_t(t0)?;
        let n_t = n_t.max(1);
        let mut sup: f64 = 0.0;
        for i in 0..n_t {
            let t = t0 * (1.0 + i as f64 / n_t as f64);
            sup = sup.max(crate::chain::norm0(&self.fourier(t, zeta)?));
        }
        Ok(sup)
    }

    /// Explicit bound `2a^{N-1}(1+a) max(1, t₀^N) / |ζ_{N-1}|`.
    pub fn gamma_bound(&self, t0: f64, zeta: &[f64]) -> f64 {
        let last = zeta.last().copied().unwrap_or(0.0).abs();
        2.0 * self.a.powi(self.n as i32 - 1) * (1.0 + self.a) * t0.powi(self.n as i32).max(1.0) / last
    }
}

fn binomial(n: usize, k: usize) -> usize {
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
        if r > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    r as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::norm0;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn model_a() -> LocalTimeModel {
        LocalTimeModel::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]], None).unwrap()
    }

    fn model_b() -> LocalTimeModel {
        LocalTimeModel::from_rows(&[vec![-2.0, 1.0, 1.0], vec![1.0, -3.0, 2.0], vec![2.0, 2.0, -4.0]], None).unwrap()
    }

    fn compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
        if parts == 1 {
            return vec![vec![n]];
        }
        let mut out = Vec::new();
        for first in 0..=n {
            for mut rest in compositions(n - first, parts - 1) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
        out
    }

    #[test]
    fn binomial_identity() {
        for dim in 1..=3 {
            let t = 2.0;
            let y: Vec<f64> = (0..dim).map(|j| 0.3 + 0.2 * j as f64).collect();
            for n in 0..=30usize {
                let fact: f64 = (1..=n).map(|i| i as f64).product();
                let total: f64 = compositions(n, dim + 1)
                    .iter()
                    .map(|c| fact * multinomial_coefficient(n, &c[..dim], t, &y).unwrap())
                    .sum();
                assert!((total - 1.0).abs() < 1e-12, "dim={dim} n={n}: {total}");
            }
        }
    }

    #[test]
    fn multinomial_examples() {
        assert_eq!(multinomial_coefficient(4, &[1, 0], 2.0, &[0.0, 1.0]).unwrap(), 0.0);
        let x0 = multinomial_coefficient(1, &[0], 2.0, &[1.0]).unwrap();
        let x1 = multinomial_coefficient(1, &[1], 2.0, &[1.0]).unwrap();
        assert!((x0 - 0.5).abs() < 1e-15 && (x1 - 0.5).abs() < 1e-15);
        assert!(matches!(multinomial_coefficient(1, &[0], 1.0, &[1.5]), Err(LltError::OutOfSimplex)));
    }

    #[test]
    fn support_and_cap() {
        let m = model_b();
        let s = m.density_series(3.0).unwrap();
        assert_eq!(norm0(&s.evaluate(3.0, &[2.0, 1.5]).unwrap().0), 0.0);
        assert_eq!(norm0(&s.evaluate(3.0, &[-0.1, 1.0]).unwrap().0), 0.0);
        let cap = m.rate().powi(2);
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..200 {
            let t = rng.random_range(0.1..3.0);
            let y = [rng.random_range(0.0..t), rng.random_range(0.0..t)];
            let (v, err) = s.evaluate(t, &y).unwrap();
            assert!(v.iter().all(|&x| x >= 0.0 && x <= cap));
            assert!(err <= SERIES_TOL * cap);
        }
    }

    #[test]
    fn beyond_t_max_is_an_accuracy_error() {
        let s = model_a().density_series(1.0).unwrap();
        assert!(matches!(s.evaluate(20.0, &[10.0]), Err(LltError::AccuracyError { .. })));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = model_b();
        let s = m.density_series(2.0).unwrap();
        let a = m.rate();
        let tol = (1e-3 * a.powi(3)).max(1e-5);
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let mut probed = 0;
        while probed < 100 {
            let t = rng.random_range(0.5..2.0);
            let y = [rng.random_range(0.0..t), rng.random_range(0.0..t)];
            let h = 1e-5;
            if y[0] <= 2.0 * h || y[1] <= 2.0 * h || y[0] + y[1] >= t - 2.0 * h {
                continue;
            }
            probed += 1;
            for j in 0..2 {
                let g = s.gradient(t, &y, j).unwrap();
                let mut yp = y;
                let mut ym = y;
                yp[j] += h;
                ym[j] -= h;
                let fd = (s.evaluate(t, &yp).unwrap().0 - s.evaluate(t, &ym).unwrap().0) / (2.0 * h);
                assert!(norm0(&(&g - fd)) / 3.0 < tol);
                assert!(g.iter().all(|x| x.abs() <= 2.0 * a.powi(3)));
            }
        }
    }

    #[test]
    fn symmetric_gradient_vanishes_at_center() {
        let m = model_a();
        let s = m.density_series(4.0).unwrap();
        let g = s.gradient(4.0, &[2.0], 0).unwrap();
        // ψ_{00} and ψ_{11} are mirror images, so their sum is flat at the center
        assert!((g[(0, 0)] + g[(1, 1)]).abs() < 1e-10);
        assert!((g[(0, 1)]).abs() < 1e-10);
        assert!(s.gradient(4.0, &[0.0], 0).is_err());
    }

    #[test]
    fn mass_balance_three_states() {
        let m = model_b();
        for &t in &[1.0, 2.0] {
            let s = m.density_series(t).unwrap();
            let ac = s.integrate(t).unwrap();
            let want = m.absolutely_continuous_mass(t).unwrap();
            assert!(norm0(&(ac - want)) < 1e-6, "t={t}");
        }
    }

    #[test]
    fn gamma_checks() {
        let m = model_b();
        let s = m.density_series(2.0).unwrap();
        let g0 = s.fourier_tail_gamma(1.0, &[0.0, 0.0], 4).unwrap();
        let sup_ac = (0..4)
            .map(|i| norm0(&m.absolutely_continuous_mass(1.0 + i as f64 / 4.0).unwrap()))
            .fold(0.0, f64::max);
        assert!((g0 - sup_ac).abs() < 1e-6);
        assert!(g0 <= 1.0);
        let mut prev = f64::INFINITY;
        for &z in &[10.0, 50.0, 200.0] {
            let zeta = [z, z];
            let g = s.fourier_tail_gamma(1.0, &zeta, 4).unwrap();
            assert!(g <= s.gamma_bound(1.0, &zeta));
            assert!(g < prev);
            prev = g;
        }
    }
}
