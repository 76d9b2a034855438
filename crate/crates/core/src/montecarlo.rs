//! Exact path simulation, used as an independent oracle for the analytic modules.
//!
//! Path `i` draws from `ChaCha20Rng::seed_from_u64(seed)` on stream `i`, so
//! results do not depend on the thread count.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{LltError, Result};
use crate::fourier::CovarianceMatrix;
use crate::linalg;
use crate::marp::MarpModel;
use crate::model::{LatticeChain, MapModel};

pub const GENERATOR_NAME: &str = "ChaCha20Rng(seed_from_u64(seed), stream = path index)";
/// Below this many samples the empirical density is considered unreliable.
pub const RECOMMENDED_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSample {
    pub start: usize,
    pub end: usize,
    pub t: f64,
    /// Uncentered additive value `Z_t` in `ℝ^d`.
    pub y: Vec<f64>,
    /// Local time of the last state (local-time models only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_local_time: Option<f64>,
    /// Some state was never visited, so the sample sits on a face of the simplex.
    pub on_face: bool,
    pub seed: u64,
    pub stream: u64,
}

impl PathSample {
    /// `t^{-1/2}(Z_t - tm)`.
    pub fn normalized(&self, m: &[f64]) -> Vec<f64> {
        let s = self.t.sqrt();
        self.y.iter().zip(m).map(|(y, m)| (y - m * self.t) / s).collect()
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn pick(rng: &mut ChaCha20Rng, weights: impl Iterator<Item = f64> + Clone, total: f64) -> usize {
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
            acc += w;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Records `(end, y, last local time, on_face)` at each horizon.
type Snapshot = (usize, Vec<f64>, Option<f64>, bool);

fn simulate_local_time(g: &DMatrix<f64>, k: usize, horizons: &[f64], rng: &mut ChaCha20Rng) -> Vec<Snapshot> {
    let n = g.nrows();
    let mut l = vec![0.0; n];
    let mut visited = vec![false; n];
    visited[k] = true;
    let mut state = k;
    let mut time = 0.0;
    let mut out = Vec::with_capacity(horizons.len());
    let mut h = 0;
    while h < horizons.len() {
        let rate = -g[(state, state)];
        let hold: f64 = if rate > 0.0 { rng.sample::<f64, _>(Exp1) / rate } else { f64::INFINITY };
        while h < horizons.len() && time + hold >= horizons[h] {
            let mut snap = l.clone();
            snap[state] += horizons[h] - time;
            let last = snap.pop();
            out.push((state, snap, last, visited.iter().any(|v| !v)));
            h += 1;
        }
        if h == horizons.len() {
            break;
        }
        l[state] += hold;
        time += hold;
        let from = state;
        state = pick(rng, (0..n).map(|j| if j == from { 0.0 } else { g[(from, j)] }), rate);
        visited[state] = true;
    }
    out
}

fn simulate_marp(m: &MarpModel, k: usize, horizons: &[usize], rng: &mut ChaCha20Rng) -> Vec<Snapshot> {
    let (d0, d1) = (m.d0(), m.d1());
    let n = m.n();
    let mut phase = k;
    let mut time = 0.0;
    let mut arrivals = 0usize;
    let mut out = Vec::with_capacity(horizons.len());
    for &target in horizons {
        while arrivals < target {
            let rate = -d0[(phase, phase)];
            time += rng.sample::<f64, _>(Exp1) / rate;
            let from = phase;
            // hidden transitions first, then arrivals
            let weights = (0..2 * n).map(|j| if j < n { if j == from { 0.0 } else { d0[(from, j)] } } else { d1[(from, j - n)] });
            let e = pick(rng, weights, rate);
            if e < n {
                phase = e;
            } else {
                phase = e - n;
                arrivals += 1;
            }
        }
        out.push((phase, vec![time], None, false));
    }
    out
}

fn simulate_lattice(m: &LatticeChain, k: usize, horizons: &[usize], rng: &mut ChaCha20Rng) -> Vec<Snapshot> {
    let p = m.transition().matrix();
    let n = p.nrows();
    let mut state = k;
    let mut y = 0.0;
    let mut steps = 0;
    let mut out = Vec::new();
    for &target in horizons {
        while steps < target {
            let from = state;
            state = pick(rng, (0..n).map(|j| p[(from, j)]), 1.0);
            y += m.increments()[(from, state)];
            steps += 1;
        }
        out.push((state, vec![y], None, false));
    }
    out
}

/// One sample per horizon for each of `n_paths` paths started at `k`; every
/// path is observed at all horizons (sorted ascending).
pub fn simulate_paths_multi(model: &MapModel, k: usize, horizons: &[f64], n_paths: usize, seed: u64) -> Result<Vec<Vec<PathSample>>> {
    if n_paths == 0 {
        return Err(LltError::InvalidInput("n_paths must be at least 1".into()));
    }
    if k >= model.n_states() {
        return Err(LltError::InvalidInput(format!("start state {k} out of range")));
    }
    if horizons.is_empty() || horizons.windows(2).any(|w| w[1] < w[0]) {
        return Err(LltError::InvalidInput("horizons must be non-empty and sorted".into()));
    }
    for &t in horizons {
        model.check_time(t)?;
    }
    let int_h: Vec<usize> = horizons.iter().map(|&t| t as usize).collect();
    Ok((0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let snaps = match model {
                MapModel::LocalTime(m) => simulate_local_time(m.generator().matrix(), k, horizons, &mut rng),
                MapModel::Marp(m) => simulate_marp(m, k, &int_h, &mut rng),
                MapModel::Lattice(m) => simulate_lattice(m, k, &int_h, &mut rng),
            };
            snaps
                .into_iter()
                .zip(horizons)
                .map(|((end, y, last, on_face), &t)| PathSample { start: k, end, t, y, last_local_time: last, on_face, seed, stream: i })
                .collect()
        })
        .collect())
}

/// Same samples as [`simulate_paths_multi`], grouped by horizon: `out[h][i]`
/// is path `i` observed at `horizons[h]`.
pub fn simulate_horizons(model: &MapModel, k: usize, horizons: &[f64], n_paths: usize, seed: u64) -> Result<Vec<Vec<PathSample>>> {
    let paths = simulate_paths_multi(model, k, horizons, n_paths, seed)?;
    let mut out: Vec<Vec<PathSample>> = horizons.iter().map(|_| Vec::with_capacity(n_paths)).collect();
    for path in paths {
        for (h, s) in path.into_iter().enumerate() {
            out[h].push(s);
        }
    }
    Ok(out)
}

pub fn simulate_paths(model: &MapModel, k: usize, t: f64, n_paths: usize, seed: u64) -> Result<Vec<PathSample>> {
    Ok(simulate_paths_multi(model, k, &[t], n_paths, seed)?.into_iter().map(|mut v| v.remove(0)).collect())
}

/// Sample mean and standard error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Estimate of `E_k[1{X_t=ℓ} e^{i⟨ζ, Y_t - tm⟩}]` with the standard errors of
/// its real and imaginary parts.
pub fn fourier_estimate(samples: &[PathSample], l: usize, zeta: &[f64], m: &[f64]) -> (Complex64, f64, f64) {
    let (re, im): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .map(|s| {
            if s.end != l {
                return (0.0, 0.0);
            }
            let phase: f64 = s.y.iter().zip(zeta).zip(m).map(|((y, z), m)| z * (y - m * s.t)).sum();
            (phase.cos(), phase.sin())
        })
        .unzip();
    let (mr, sr) = mean_and_se(&re);
    let (mi, si) = mean_and_se(&im);
    (Complex64::new(mr, mi), sr, si)
}

/// Sample covariance of `t^{-1/2}(Y_t - tm)` with per-entry standard errors.
pub fn empirical_covariance(samples: &[PathSample], m: &[f64]) -> Result<CovarianceMatrix> {
    if samples.len() < 2 {
        return Err(LltError::InvalidInput("need at least two samples".into()));
    }
    let xs: Vec<Vec<f64>> = samples.iter().map(|s| s.normalized(m)).collect();
    let (sigma, se) = covariance_with_se(&xs, &xs, 1.0, false);
    Ok(CovarianceMatrix { sigma, m: m.to_vec(), standard_errors: Some(se), method: "montecarlo".into() })
}

fn column_means(xs: &[Vec<f64>]) -> Vec<f64> {
    let d = xs[0].len();
    let n = xs.len() as f64;
    (0..d).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n).collect()
}

/// Covariance of `u` (minus that of `v` when `difference`), divided by
/// `scale`, with standard errors from the per-sample influence values.
fn covariance_with_se(u: &[Vec<f64>], v: &[Vec<f64>], scale: f64, difference: bool) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let d = u[0].len();
    let n = u.len();
    let mu = column_means(u);
    let mv = column_means(v);
    let mut sigma = vec![vec![0.0; d]; d];
    let mut se = vec![vec![0.0; d]; d];
    for j in 0..d {
        for k in 0..=j {
            let infl: Vec<f64> = (0..n)
                .map(|i| {
                    let a = (u[i][j] - mu[j]) * (u[i][k] - mu[k]);
                    let b = if difference { (v[i][j] - mv[j]) * (v[i][k] - mv[k]) } else { 0.0 };
                    (a - b) / scale
                })
                .collect();
            let (mean, err) = mean_and_se(&infl);
            let unbiased = mean * n as f64 / (n as f64 - 1.0);
            sigma[j][k] = unbiased;
            sigma[k][j] = unbiased;
            se[j][k] = err;
            se[k][j] = err;
        }
    }
    (sigma, se)
}

/// Monte Carlo `Σ` from the same paths observed at `T/2` and `T`:
/// `[Cov(Y_T) - Cov(Y_{T/2})] / (T/2)`. The `O(1)` start-up term of
/// `Cov(Y_T)` cancels, which the plain estimator `Cov(Y_T)/T` leaves as an
/// `O(1/T)` bias.
pub fn covariance_montecarlo(model: &MapModel, k: usize, t: f64, n_paths: usize, seed: u64) -> Result<CovarianceMatrix> {
    let half = t / 2.0;
    let paths = simulate_paths_multi(model, k, &[half, t], n_paths, seed)?;
    let m = model.mean();
    let center = |s: &PathSample| -> Vec<f64> { s.y.iter().zip(&m).map(|(y, m)| y - m * s.t).collect() };
    let v: Vec<Vec<f64>> = paths.iter().map(|p| center(&p[0])).collect();
    let u: Vec<Vec<f64>> = paths.iter().map(|p| center(&p[1])).collect();
    let (sigma, se) = covariance_with_se(&u, &v, half, true);
    Ok(CovarianceMatrix { sigma, m, standard_errors: Some(se), method: "montecarlo".into() })
}

/// Monte Carlo `E_k[Y₁³]` for a MArP, with its standard error.
pub fn third_moment_montecarlo(model: &MarpModel, k: usize, n_paths: usize, seed: u64) -> Result<(f64, f64)> {
    let mm = MapModel::Marp(model.clone());
    let samples = simulate_paths(&mm, k, 1.0, n_paths, seed)?;
    let cubes: Vec<f64> = samples.iter().map(|s| s.y[0].powi(3)).collect();
    Ok(mean_and_se(&cubes))
}

#[derive(Debug, Clone, Serialize)]
pub struct HistogramGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub bins: Vec<usize>,
}

impl HistogramGrid {
    pub fn cube(d: usize, half_width: f64, bins: usize) -> Self {
        Self { lo: vec![-half_width; d], hi: vec![half_width; d], bins: vec![bins; d] }
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).zip(&self.bins).map(|((l, h), b)| (h - l) / *b as f64).collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.widths().iter().product()
    }

    pub fn n_cells(&self) -> usize {
        self.bins.iter().product()
    }

    fn index(&self, x: &[f64]) -> Option<usize> {
        let w = self.widths();
        let mut idx = 0;
        let mut stride = 1;
        for j in 0..x.len() {
            let b = ((x[j] - self.lo[j]) / w[j]).floor();
            if !(b >= 0.0 && (b as usize) < self.bins[j]) {
                return None;
            }
            idx += b as usize * stride;
            stride *= self.bins[j];
        }
        Some(idx)
    }

    /// Center of cell `idx`.
    pub fn center(&self, idx: usize) -> Vec<f64> {
        let w = self.widths();
        let mut rest = idx;
        (0..self.bins.len())
            .map(|j| {
                let b = rest % self.bins[j];
                rest /= self.bins[j];
                self.lo[j] + (b as f64 + 0.5) * w[j]
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalDensity {
    pub grid: HistogramGrid,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub n_samples: usize,
    /// Samples on a face of the simplex, tallied apart from the histogram.
    pub singular_count: usize,
    pub out_of_range: usize,
    pub low_sample_warning: bool,
}

impl EmpiricalDensity {
    pub fn singular_fraction(&self) -> f64 {
        self.singular_count as f64 / self.n_samples as f64
    }

    /// `∫` of the histogram density.
    pub fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.grid.cell_volume()
    }
}

/// Histogram of `t^{-1/2}(Y_t - tm)`; face samples go to the singular tally.
pub fn empirical_density(samples: &[PathSample], m: &[f64], grid: &HistogramGrid) -> Result<EmpiricalDensity> {
    if samples.is_empty() {
        return Err(LltError::InvalidInput("empty sample".into()));
    }
    let mut counts = vec![0u64; grid.n_cells()];
    let mut singular_count = 0;
    let mut out_of_range = 0;
    for s in samples {
        if s.on_face {
            singular_count += 1;
            continue;
        }
        match grid.index(&s.normalized(m)) {
            Some(i) => counts[i] += 1,
            None => out_of_range += 1,
        }
    }
    let n = samples.len() as f64;
    let vol = grid.cell_volume();
    let density = counts.iter().map(|&c| c as f64 / (n * vol)).collect();
    let standard_errors = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            (p * (1.0 - p) / n).sqrt() / vol
        })
        .collect();
    Ok(EmpiricalDensity {
        grid: grid.clone(),
        counts,
        density,
        standard_errors,
        n_samples: samples.len(),
        singular_count,
        out_of_range,
        low_sample_warning: samples.len() < RECOMMENDED_SAMPLES,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub level: f64,
    pub passed: bool,
}

/// Goodness of fit of `|z|²` against `χ²(d)` in `n_bins` equiprobable bins,
/// where `z = L^{-1}(x - x̄)`, `Σ̂ = LLᵀ` and `x = t^{-1/2}(Y_t - tm)`.
pub fn clt_chi_square(samples: &[PathSample], m: &[f64], sigma: &CovarianceMatrix, n_bins: usize, level: f64) -> Result<ChiSquareReport> {
    if samples.len() < 5 * n_bins {
        return Err(LltError::InvalidInput("too few samples for the chi-square bins".into()));
    }
    let xs: Vec<Vec<f64>> = samples.iter().map(|s| s.normalized(m)).collect();
    let d = xs[0].len();
    let mean = column_means(&xs);
    let l = linalg::cholesky(&sigma.matrix())?;
    let ref_law = ChiSquared::new(d as f64).map_err(|e| LltError::NumericalError(e.to_string()))?;
    let mut counts = vec![0usize; n_bins];
    for x in &xs {
        let c = DVector::from_iterator(d, x.iter().zip(&mean).map(|(a, b)| a - b));
        let z = l.solve_lower_triangular(&c).ok_or_else(|| LltError::DegenerateCovariance("singular factor".into()))?;
        let u = ref_law.cdf(z.norm_squared());
        counts[((u * n_bins as f64) as usize).min(n_bins - 1)] += 1;
    }
    let expected = xs.len() as f64 / n_bins as f64;
    let statistic: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dof = n_bins - 1;
    let p_value = 1.0 - ChiSquared::new(dof as f64).map_err(|e| LltError::NumericalError(e.to_string()))?.cdf(statistic);
    Ok(ChiSquareReport { statistic, dof, p_value, level, passed: p_value > level })
}

/// CSV with `start,end,y_0,…`; seed and generator in the leading comment lines.
pub fn write_samples_csv<W: Write>(samples: &[PathSample], mut w: W) -> Result<()> {
    let seed = samples.first().map_or(0, |s| s.seed);
    writeln!(w, "# seed={seed}")?;
    writeln!(w, "# generator={GENERATOR_NAME}")?;
    let d = samples.first().map_or(0, |s| s.y.len());
    let mut header = vec!["start".to_string(), "end".to_string()];
    header.extend((0..d).map(|j| format!("y_{j}")));
    writeln!(w, "{}", header.join(","))?;
    for s in samples {
        let mut row = vec![s.start.to_string(), s.end.to_string()];
        row.extend(s.y.iter().map(|v| format!("{v}")));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::covariance_hessian;

    fn model(text: &str) -> MapModel {
        MapModel::from_json(text).unwrap()
    }

    #[test]
    fn local_time_conservation_and_ergodic_mean() {
        let m = model(r#"{"type":"local_time","g":[[-1,1],[1,-1]]}"#);
        let t = 200.0;
        let s = simulate_paths(&m, 0, t, 4000, 1).unwrap();
        for p in &s {
            assert!((p.y[0] + p.last_local_time.unwrap() - t).abs() < 1e-9);
            assert!(p.y[0] >= 0.0 && p.last_local_time.unwrap() >= 0.0);
        }
        let frac: Vec<f64> = s.iter().map(|p| p.y[0] / t).collect();
        let (mean, se) = mean_and_se(&frac);
        assert!((mean - 0.5).abs() < 3.0 * se);
    }

    #[test]
    fn marp_end_states_follow_embedded_chain() {
        let m = model(r#"{"type":"marp","d0":[[-2,1],[0,-3]],"d1":[[1,0],[1,2]]}"#);
        let p3 = match &m {
            MapModel::Marp(mm) => mm.embedded_chain().power(3),
            _ => unreachable!(),
        };
        let s = simulate_paths(&m, 0, 3.0, 20000, 5).unwrap();
        let hits: Vec<f64> = s.iter().map(|p| (p.end == 1) as u8 as f64).collect();
        let (f, se) = mean_and_se(&hits);
        assert!((f - p3[(0, 1)]).abs() < 3.0 * se);
    }

    #[test]
    fn deterministic_given_seed() {
        let m = model(r#"{"type":"local_time","g":[[-2,1,1],[1,-3,2],[2,2,-4]]}"#);
        let a = simulate_paths(&m, 1, 3.0, 100, 42).unwrap();
        let b = simulate_paths(&m, 1, 3.0, 100, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_paths(&m, 1, 3.0, 100, 43).unwrap();
        assert_ne!(a, c);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let d = pool.install(|| simulate_paths(&m, 1, 3.0, 100, 42).unwrap());
        assert_eq!(a, d);
    }

    #[test]
    fn exponential_variance() {
        let m = model(r#"{"type":"marp","d0":[[-1]],"d1":[[1]]}"#);
        let s = simulate_paths(&m, 0, 50.0, 20000, 9).unwrap();
        let c = empirical_covariance(&s, &m.mean()).unwrap();
        let se = c.standard_errors.as_ref().unwrap()[0][0];
        assert!((c.sigma[0][0] - 1.0).abs() < 3.0 * se);
        let xs: Vec<f64> = s.iter().map(|p| p.normalized(&m.mean())[0]).collect();
        let (mean, se) = mean_and_se(&xs);
        assert!(mean.abs() < 3.0 * se);
    }

    #[test]
    fn difference_estimator_matches_hessian() {
        let m = model(r#"{"type":"local_time","g":[[-1,1],[1,-1]]}"#);
        let c = covariance_montecarlo(&m, 0, 40.0, 40000, 3).unwrap();
        let h = covariance_hessian(&m).unwrap();
        let se = c.standard_errors.as_ref().unwrap()[0][0];
        assert!((c.sigma[0][0] - h.sigma[0][0]).abs() < 3.0 * se, "{} vs {} (se {se})", c.sigma[0][0], h.sigma[0][0]);
    }

    #[test]
    fn fourier_matches_simulation() {
        let m = model(r#"{"type":"local_time","g":[[-1,1],[1,-1]]}"#);
        let s = simulate_paths(&m, 0, 1.0, 100_000, 17).unwrap();
        let f = m.fourier(1.0, &[0.3]).unwrap();
        for l in 0..2 {
            let (est, sr, si) = fourier_estimate(&s, l, &[0.3], &m.mean());
            assert!((est.re - f[(0, l)].re).abs() < 3.0 * sr + 1e-12);
            assert!((est.im - f[(0, l)].im).abs() < 3.0 * si + 1e-12);
        }
    }

    #[test]
    fn singular_fraction_matches_face_mass() {
        let lt = crate::local_time::LocalTimeModel::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]], None).unwrap();
        let m = MapModel::LocalTime(lt.clone());
        let t = 1.5;
        let s = simulate_paths(&m, 0, t, 50_000, 23).unwrap();
        let h = empirical_density(&s, &m.mean(), &HistogramGrid::cube(1, 1.0, 40)).unwrap();
        let sm = lt.singular_mass(t).unwrap();
        let want: f64 = sm.exact[0].iter().sum();
        let p = h.singular_fraction();
        let se = (p * (1.0 - p) / s.len() as f64).sqrt();
        assert!((p - want).abs() < 3.0 * se);
        assert!((h.mass() + p + h.out_of_range as f64 / s.len() as f64 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_accepts_gaussian_limit() {
        let m = model(r#"{"type":"local_time","g":[[-2,1,1],[1,-3,2],[2,2,-4]]}"#);
        let s = simulate_paths(&m, 0, 50.0, 10_000, 31).unwrap();
        let sigma = covariance_hessian(&m).unwrap();
        let r = clt_chi_square(&s, &m.mean(), &sigma, 20, 1e-3).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn third_moment_of_exponential() {
        let mm = MarpModel::from_rows(&[vec![-1.0]], &[vec![1.0]]).unwrap();
        let (est, se) = third_moment_montecarlo(&mm, 0, 200_000, 2).unwrap();
        assert!((est - 6.0).abs() < 3.0 * se);
    }

    #[test]
    fn csv_header_records_seed() {
        let m = model(r#"{"type":"marp","d0":[[-1]],"d1":[[1]]}"#);
        let s = simulate_paths(&m, 0, 2.0, 3, 77).unwrap();
        let mut buf = Vec::new();
        write_samples_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# seed=77\n# generator=ChaCha20"));
        assert!(text.contains("start,end,y_0\n"));
        assert_eq!(text.lines().count(), 6);
    }
}
