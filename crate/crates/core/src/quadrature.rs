//! Gauss–Legendre rules on intervals and on the simplex
//! `{y ∈ (0,∞)^d : Σ y < t}` (collapsed, iterated coordinates).

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn interval_rule(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    x.iter().zip(&w).map(|(&xi, &wi)| (a + half * (xi + 1.0), half * wi)).collect()
}

/// Points and weights integrating over the open simplex of side `t` in
/// dimension `d`, using `n` nodes per collapsed coordinate.
pub fn simplex_rule(d: usize, t: f64, n: usize) -> Vec<(Vec<f64>, f64)> {
    let base = interval_rule(n, 0.0, 1.0);
    let mut out = Vec::with_capacity(n.pow(d as u32));
    let mut point = vec![0.0; d];
    fill(&base, d, 0, t, 1.0, &mut point, &mut out);
    out
}

fn fill(
    base: &[(f64, f64)],
    d: usize,
    depth: usize,
    remaining: f64,
    weight: f64,
    point: &mut Vec<f64>,
    out: &mut Vec<(Vec<f64>, f64)>,
) {
    if depth == d {
        out.push((point.clone(), weight));
        return;
    }
    for &(u, w) in base {
        point[depth] = remaining * u;
        fill(base, d, depth + 1, remaining * (1.0 - u), weight * w * remaining, point, out);
    }
}
