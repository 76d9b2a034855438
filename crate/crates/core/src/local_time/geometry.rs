//! The simplex `𝒞_t`, its centered copy `𝒟_t = 𝒞_t - m′t`, and the map `Λ`
//! between the hyperplane `H = {⟨y,1⟩ = 0} ⊂ ℝ^N` and `ℝ^{N-1}`.

use serde::Serialize;

use crate::error::{LltError, Result};

const HYPERPLANE_TOL: f64 = 1e-10;
const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `index` in `base`.
pub fn halton(index: u64, base: u32) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    let b = base as u64;
    while i > 0 {
        f /= base as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// `Λ(y) = (y₁, …, y_{N-1})` for `y ∈ H`.
pub fn project_map(y: &[f64]) -> Result<Vec<f64>> {
    if y.is_empty() {
        return Err(LltError::InvalidInput("empty point".into()));
    }
    let residual: f64 = y.iter().sum();
    if residual.abs() > HYPERPLANE_TOL {
        return Err(LltError::NotInHyperplane { residual });
    }
    Ok(y[..y.len() - 1].to_vec())
}

/// Inverse of [`project_map`]: appends `-Σ x`.
pub fn lift_map(x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    y.push(-x.iter().sum::<f64>());
    y
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexGeometry {
    pub t: f64,
    /// `m′ = (π₁, …, π_{N-1})`
    pub drift: Vec<f64>,
}

impl SimplexGeometry {
    pub fn new(t: f64, drift: Vec<f64>) -> Self {
        Self { t, drift }
    }

    pub fn dim(&self) -> usize {
        self.drift.len()
    }

    /// Open simplex `𝒞_t`.
    pub fn contains(&self, y: &[f64]) -> bool {
        y.iter().all(|&v| v > 0.0 && v < self.t) && y.iter().sum::<f64>() < self.t
    }

    pub fn contains_closed(&self, y: &[f64]) -> bool {
        y.iter().all(|&v| v >= 0.0) && y.iter().sum::<f64>() <= self.t
    }

    pub fn uncenter(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.drift).map(|(v, m)| v + m * self.t).collect()
    }

    pub fn center(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.drift).map(|(v, m)| v - m * self.t).collect()
    }

    /// `𝒟_t`: each `y_j ∈ (-m_j t, (1-m_j) t)` and `⟨y,1⟩ < m_N t`.
    pub fn contains_centered(&self, y: &[f64]) -> bool {
        let m_last = 1.0 - self.drift.iter().sum::<f64>();
        y.iter().zip(&self.drift).all(|(&v, &m)| v > -m * self.t && v < (1.0 - m) * self.t)
            && y.iter().sum::<f64>() < m_last * self.t
    }

    /// Halton points on each of the `N` faces of `𝒞_t`: faces `i < N-1` are
    /// `{y_i = 0}`, face `N-1` is the diagonal `{⟨y,1⟩ = t}`. With two states
    /// the faces are the points `0` and `t`.
    pub fn boundary_points(&self, per_face: usize) -> Vec<(usize, Vec<f64>)> {
        let d = self.dim();
        let n = d + 1;
        let count = if d == 1 { 1 } else { per_face };
        let mut out = Vec::with_capacity(n * count);
        for face in 0..n {
            for idx in 0..count {
                // barycentric weights over the N-1 remaining coordinates of L_t
                let mut u: Vec<f64> = (0..d - 1).map(|j| halton(idx as u64 + 1, PRIMES[j % PRIMES.len()])).collect();
                u.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                let mut weights = Vec::with_capacity(d);
                let mut prev = 0.0;
                for &v in &u {
                    weights.push(v - prev);
                    prev = v;
                }
                weights.push(1.0 - prev);
                let mut l = Vec::with_capacity(n);
                let mut w = weights.into_iter();
                for j in 0..n {
                    l.push(if j == face { 0.0 } else { w.next().expect("N-1 weights") * self.t });
                }
                l.pop();
                out.push((face, l));
            }
        }
        out
    }
}
