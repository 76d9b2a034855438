//! Visit counts `V_n^j = Σ_{m=0}^{n} 1{Z_m = j}` of the uniformized chain `Z`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::LocalTimeModel;
use crate::chain::StochasticMatrix;
use crate::error::{LltError, Result};
use crate::linalg;

/// Memory cap for dense visit-count tables, in bytes.
pub const DP_MEMORY_BUDGET: usize = 2 << 30;

/// Bytes held by the two rolling DP tables for `steps` steps and `n` states.
pub(crate) fn dp_table_bytes(n: usize, steps: usize) -> usize {
    (steps + 2).saturating_pow(n as u32 - 1).saturating_mul(n * n * 8 * 2)
}

pub(crate) fn max_steps_within(n: usize, budget: usize, extra: impl Fn(usize) -> usize) -> usize {
    let (mut lo, mut hi) = (0usize, 1usize << 20);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if dp_table_bytes(n, mid).saturating_add(extra(mid)) <= budget {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Rolling dense table over the count lattice `{0..side-1}^{N-1}`, keyed by
/// `(start, current state)`. The count of the last state is implicit.
pub(crate) struct VisitDp<'a> {
    p: &'a DMatrix<f64>,
    n: usize,
    side: usize,
    strides: Vec<usize>,
    step: usize,
    pub(crate) cur: Vec<f64>,
    next: Vec<f64>,
}

impl<'a> VisitDp<'a> {
    pub(crate) fn new(p: &'a DMatrix<f64>, side: usize) -> Self {
        let n = p.nrows();
        let strides: Vec<usize> = (0..n - 1).map(|j| side.pow(j as u32)).collect();
        let cells = side.pow(n as u32 - 1);
        let nn = n * n;
        let mut cur = vec![0.0; cells * nn];
        for s in 0..n {
            let cell = if s + 1 < n { strides[s] } else { 0 };
            cur[cell * nn + s * n + s] = 1.0;
        }
        Self { p, n, side, strides, step: 0, cur, next: vec![0.0; cells * nn] }
    }

    pub(crate) fn step_index(&self) -> usize {
        self.step
    }

    /// Calls `f(cell, counts)` for every cell whose counts are all `≤ bound`.
    pub(crate) fn for_each_cell(&self, bound: usize, mut f: impl FnMut(usize, &[usize])) {
        let d = self.n - 1;
        let lim = bound.min(self.side - 1);
        let mut counts = vec![0usize; d];
        loop {
            let cell: usize = counts.iter().zip(&self.strides).map(|(c, s)| c * s).sum();
            f(cell, &counts);
            let mut j = 0;
            loop {
                if j == d {
                    return;
                }
                counts[j] += 1;
                if counts[j] <= lim {
                    break;
                }
                counts[j] = 0;
                j += 1;
            }
        }
    }

    pub(crate) fn advance(&mut self) {
        let (n, nn) = (self.n, self.n * self.n);
        self.next.iter_mut().for_each(|x| *x = 0.0);
        let bound = self.step + 1;
        let mut cells = Vec::new();
        self.for_each_cell(bound, |cell, counts| {
            if counts.iter().sum::<usize>() <= bound {
                cells.push(cell);
            }
        });
        for cell in cells {
            for s in 0..n {
                for l in 0..n {
                    let x = self.cur[cell * nn + s * n + l];
                    if x == 0.0 {
                        continue;
                    }
                    for l2 in 0..n {
                        let pr = self.p[(l, l2)];
                        if pr == 0.0 {
                            continue;
                        }
                        let c2 = if l2 + 1 < n { cell + self.strides[l2] } else { cell };
                        self.next[c2 * nn + s * n + l2] += x * pr;
                    }
                }
            }
        }
        std::mem::swap(&mut self.cur, &mut self.next);
        self.step += 1;
    }
}

/// Exact law of `(V_n^1, …, V_n^{N-1}, Z_n)` under each start state.
#[derive(Debug, Clone)]
pub struct VisitCountTable {
    n_steps: usize,
    n_states: usize,
    side: usize,
    /// `table[cell * N² + start * N + end]`
    table: Vec<f64>,
}

impl VisitCountTable {
    pub fn build(p: &StochasticMatrix, n_steps: usize) -> Result<Self> {
        Self::build_with_budget(p, n_steps, DP_MEMORY_BUDGET)
    }

    pub fn build_with_budget(p: &StochasticMatrix, n_steps: usize, budget: usize) -> Result<Self> {
        let n = p.n();
        if n < 2 {
            return Err(LltError::InvalidInput("visit counts need at least two states".into()));
        }
        if dp_table_bytes(n, n_steps) > budget {
            return Err(LltError::BudgetExceeded { max_steps: max_steps_within(n, budget, |_| 0) });
        }
        let side = n_steps + 2;
        let mut dp = VisitDp::new(p.matrix(), side);
        for _ in 0..n_steps {
            dp.advance();
        }
        Ok(Self { n_steps, n_states: n, side, table: dp.cur })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn counts_dim(&self) -> usize {
        self.n_states - 1
    }

    /// `P_start{V_n^j = counts[j] (j < N-1), Z_n = end}`.
    pub fn probability(&self, start: usize, counts: &[usize], end: usize) -> f64 {
        let n = self.n_states;
        if counts.len() != n - 1 || counts.iter().any(|&c| c >= self.side) || start >= n || end >= n {
            return 0.0;
        }
        let cell: usize = counts.iter().enumerate().map(|(j, c)| c * self.side.pow(j as u32)).sum();
        self.table[cell * n * n + start * n + end]
    }

    /// Nonzero entries `(counts, end, probability)` for one start state.
    pub fn entries(&self, start: usize) -> Vec<(Vec<usize>, usize, f64)> {
        let n = self.n_states;
        let mut out = Vec::new();
        for cell in 0..self.table.len() / (n * n) {
            let counts: Vec<usize> = (0..n - 1).map(|j| (cell / self.side.pow(j as u32)) % self.side).collect();
            for end in 0..n {
                let x = self.table[cell * n * n + start * n + end];
                if x != 0.0 {
                    out.push((counts.clone(), end, x));
                }
            }
        }
        out
    }

    pub fn total_mass(&self, start: usize) -> f64 {
        self.entries(start).iter().map(|e| e.2).sum()
    }

    /// `P_start{V_n^i = c}`, including the implicit last state.
    pub fn marginal(&self, start: usize, i: usize, c: usize) -> f64 {
        let n = self.n_states;
        self.entries(start)
            .iter()
            .filter(|(counts, _, _)| {
                let v = if i + 1 < n { counts[i] } else { self.n_steps + 1 - counts.iter().sum::<usize>() };
                v == c
            })
            .map(|e| e.2)
            .sum()
    }
}

/// Brute-force law of the visit counts by enumerating all `N^n` paths.
pub fn enumerate_visit_counts(p: &StochasticMatrix, start: usize, n_steps: usize) -> HashMap<(Vec<usize>, usize), f64> {
    let n = p.n();
    let mut out = HashMap::new();
    let total = n.pow(n_steps as u32);
    for code in 0..total {
        let mut state = start;
        let mut prob = 1.0;
        let mut counts = vec![0usize; n];
        counts[start] += 1;
        let mut c = code;
        for _ in 0..n_steps {
            let next = c % n;
            c /= n;
            prob *= p.matrix()[(state, next)];
            state = next;
            counts[state] += 1;
        }
        if prob > 0.0 {
            counts.pop();
            *out.entry((counts, state)).or_insert(0.0) += prob;
        }
    }
    out
}

impl LocalTimeModel {
    fn sub_chain(&self, i: usize) -> DMatrix<f64> {
        linalg::delete_row_col(self.p_tilde().matrix(), i)
    }

    /// `P_k{V_n^i = 0} = e_k (P̃_{i^c i^c})^n 1` for `k ≠ i`, and 0 for `k = i`.
    pub fn visit_zero_probability(&self, i: usize, k: usize, n: usize) -> f64 {
        if k == i {
            return 0.0;
        }
        let sub = self.sub_chain(i);
        let mut v = DVector::from_element(sub.nrows(), 1.0);
        for _ in 0..n {
            v = &sub * v;
        }
        v[if k < i { k } else { k - 1 }]
    }

    /// `P_k{V_n^i = 1}` by the renewal recursion
    /// `v(n+1) = P̃_{i^c i^c} v(n) + P_i{V_n^i = 1} P̃_{i^c i}` with `v(0) = 0`.
    pub fn visit_one_probability(&self, i: usize, k: usize, n: usize) -> f64 {
        let p = self.p_tilde().matrix();
        let sub = self.sub_chain(i);
        let others: Vec<usize> = (0..self.n()).filter(|&j| j != i).collect();
        let to_i = DVector::from_iterator(others.len(), others.iter().map(|&j| p[(j, i)]));
        let from_i = DVector::from_iterator(others.len(), others.iter().map(|&j| p[(i, j)]));
        // u(m) = P_i{V_m^i = 1}: leave i at once and never come back within m steps
        let mut stay_out = DVector::from_element(others.len(), 1.0);
        let mut u = 1.0;
        let mut v = DVector::zeros(others.len());
        for _ in 0..n {
            v = &sub * v + &to_i * u;
            // advance u from m to m+1: u(m+1) = P_{i,i^c} P_sub^m 1
            u = from_i.dot(&stay_out);
            stay_out = &sub * stay_out;
        }
        if k == i {
            u
        } else {
            v[others.iter().position(|&j| j == k).expect("state in range")]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::linear_fit;

    fn model_b() -> LocalTimeModel {
        LocalTimeModel::from_rows(&[vec![-2.0, 1.0, 1.0], vec![1.0, -3.0, 2.0], vec![2.0, 2.0, -4.0]], None).unwrap()
    }

    #[test]
    fn dp_matches_enumeration() {
        for model in [
            LocalTimeModel::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]], Some(2.0)).unwrap(),
            model_b(),
        ] {
            let p = model.p_tilde();
            for n in 0..=8 {
                let table = VisitCountTable::build(p, n).unwrap();
                for start in 0..p.n() {
                    let brute = enumerate_visit_counts(p, start, n);
                    for ((counts, end), prob) in &brute {
                        assert!((table.probability(start, counts, *end) - prob).abs() < 1e-12);
                    }
                    let listed = table.entries(start);
                    assert_eq!(listed.len(), brute.len());
                    assert!((table.total_mass(start) - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn two_state_two_steps() {
        let p = StochasticMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let t = VisitCountTable::build(&p, 2).unwrap();
        // start 0: paths 000, 001, 010, 011 each 1/4
        assert!((t.probability(0, &[3], 0) - 0.25).abs() < 1e-15);
        assert!((t.probability(0, &[2], 1) - 0.25).abs() < 1e-15);
        assert!((t.probability(0, &[2], 0) - 0.25).abs() < 1e-15);
        assert!((t.probability(0, &[1], 1) - 0.25).abs() < 1e-15);
        assert_eq!(t.marginal(0, 0, 0), 0.0);
    }

    #[test]
    fn visit_zero_examples() {
        let m = LocalTimeModel::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]], Some(2.0)).unwrap();
        assert_eq!(m.visit_zero_probability(0, 0, 5), 0.0);
        for n in 0..10 {
            assert!((m.visit_zero_probability(0, 1, n) - 0.5f64.powi(n as i32)).abs() < 1e-15);
        }
        let b = model_b();
        for n in 0..7 {
            let table = VisitCountTable::build(b.p_tilde(), n).unwrap();
            for i in 0..3 {
                for k in 0..3 {
                    assert!((b.visit_zero_probability(i, k, n) - table.marginal(k, i, 0)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn visit_one_matches_enumeration() {
        let b = model_b();
        assert_eq!(b.visit_one_probability(1, 1, 0), 1.0);
        assert_eq!(b.visit_one_probability(1, 0, 0), 0.0);
        for n in 0..=8 {
            let table = VisitCountTable::build(b.p_tilde(), n).unwrap();
            for i in 0..3 {
                for k in 0..3 {
                    let want = table.marginal(k, i, 1);
                    assert!((b.visit_one_probability(i, k, n) - want).abs() < 1e-12, "i={i} k={k} n={n}");
                }
            }
        }
    }

    #[test]
    fn visit_one_decay_rate() {
        let b = model_b();
        for s in b.sub_chain_decay() {
            let pts: Vec<(f64, f64)> =
                (60..120).map(|n| (n as f64, b.visit_one_probability(s.state, (s.state + 1) % 3, n).ln())).collect();
            let fit = linear_fit(&pts).unwrap();
            assert!(fit.slope <= s.rho.ln() + 0.05, "{} vs {}", fit.slope, s.rho.ln());
        }
    }

    #[test]
    fn budget_is_enforced() {
        let b = model_b();
        match VisitCountTable::build_with_budget(b.p_tilde(), 1000, 1 << 20) {
            Err(LltError::BudgetExceeded { max_steps }) => {
                assert!(max_steps < 1000);
                assert!(VisitCountTable::build_with_budget(b.p_tilde(), max_steps, 1 << 20).is_ok());
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
