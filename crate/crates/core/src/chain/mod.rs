//! Finite Markov chains and generators: validation, stationary laws,
//! structural checks, sub-generators and the matrix norms used throughout.

mod expm;
mod graph;

use nalgebra::{ComplexField, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{LltError, Result};
use crate::linalg;

pub use expm::{expm, norm1};
pub(crate) use graph::strongly_connected;

/// Row-sum tolerance applied at construction.
pub const ROW_SUM_TOL: f64 = 1e-12;

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() == 0 || !m.is_square() {
        return Err(LltError::InvalidInput(format!(
            "expected a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(LltError::InvalidInput("non-finite matrix entry".into()));
    }
    Ok(())
}

/// A row-stochastic matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct StochasticMatrix(DMatrix<f64>);

impl StochasticMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_square(&m)?;
        if m.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(LltError::InvalidInput("stochastic matrix entry outside [0,1]".into()));
        }
        for (i, row) in m.row_iter().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(LltError::InvalidInput(format!("row {i} sums to {s}, not 1")));
            }
        }
        Ok(Self(m))
    }

    /// Builds from an exact computation whose row sums carry rounding error of
    /// order `tol`; rows are checked against `tol`, then tiny negatives clipped.
    pub(crate) fn from_computed(mut m: DMatrix<f64>, tol: f64) -> Result<Self> {
        check_square(&m)?;
        for x in m.iter_mut() {
            if *x < 0.0 && *x > -tol {
                *x = 0.0;
            }
        }
        for (i, row) in m.row_iter().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol || row.iter().any(|&x| x < 0.0) {
                return Err(LltError::NumericalError(format!("computed row {i} is not stochastic (sum {s})")));
            }
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(linalg::matrix_from_rows(rows)?)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn is_irreducible(&self) -> bool {
        strongly_connected(self.n(), |i, j| self.0[(i, j)] > 0.0)
    }

    /// Irreducible with period 1, decided on the graph of positive entries.
    pub fn is_irreducible_aperiodic(&self) -> bool {
        self.is_irreducible() && graph::period(self.n(), |i, j| self.0[(i, j)] > 0.0) == 1
    }

    pub fn stationary_distribution(&self) -> Result<ProbabilityVector> {
        if !self.is_irreducible() {
            return Err(LltError::NotIrreducible);
        }
        let n = self.n();
        let a = self.0.transpose() - DMatrix::identity(n, n);
        solve_stationary(a)
    }

    pub fn power(&self, k: usize) -> DMatrix<f64> {
        let mut out = DMatrix::identity(self.n(), self.n());
        for _ in 0..k {
            out = &out * &self.0;
        }
        out
    }
}

impl TryFrom<Vec<Vec<f64>>> for StochasticMatrix {
    type Error = LltError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<StochasticMatrix> for Vec<Vec<f64>> {
    fn from(m: StochasticMatrix) -> Self {
        linalg::matrix_to_rows(&m.0)
    }
}

/// Solves `a x = 0` with the normalization `sum x = 1` replacing the last row.
fn solve_stationary(mut a: DMatrix<f64>) -> Result<ProbabilityVector> {
    let n = a.nrows();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let x = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| LltError::NumericalError("singular stationary system".into()))?;
    let weights: Vec<f64> = x.iter().map(|&v| if v < 0.0 && v > -1e-13 { 0.0 } else { v }).collect();
    ProbabilityVector::new(weights)
}

/// A CTMC generator: nonnegative off-diagonal entries, zero row sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct GeneratorMatrix(DMatrix<f64>);

impl GeneratorMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_square(&m)?;
        let n = m.nrows();
        for i in 0..n {
            for j in 0..n {
                if i != j && m[(i, j)] < 0.0 {
                    return Err(LltError::InvalidInput(format!("negative off-diagonal rate at ({i},{j})")));
                }
            }
            let s: f64 = m.row(i).iter().sum();
            let scale = m.row(i).iter().map(|x| x.abs()).fold(1.0, f64::max);
            if s.abs() > ROW_SUM_TOL * scale {
                return Err(LltError::InvalidInput(format!("generator row {i} sums to {s}, not 0")));
            }
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(linalg::matrix_from_rows(rows)?)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn max_exit_rate(&self) -> f64 {
        (0..self.n()).map(|i| self.0[(i, i)].abs()).fold(0.0, f64::max)
    }

    pub fn is_irreducible(&self) -> bool {
        strongly_connected(self.n(), |i, j| i != j && self.0[(i, j)] > 0.0) || self.n() == 1
    }

    /// Invariant law `π G = 0`.
    pub fn stationary_distribution(&self) -> Result<ProbabilityVector> {
        if !self.is_irreducible() {
            return Err(LltError::NotIrreducible);
        }
        solve_stationary(self.0.transpose())
    }

    /// Transition matrix `P_t = e^{tG}`.
    pub fn transition(&self, t: f64) -> Result<StochasticMatrix> {
        if t < 0.0 {
            return Err(LltError::InvalidInput("negative time".into()));
        }
        StochasticMatrix::from_computed(expm(&self.0, t)?, 1e-10)
    }

    pub fn subgenerator(&self, excluded: usize) -> Result<SubGenerator> {
        SubGenerator::new(self, excluded)
    }
}

impl TryFrom<Vec<Vec<f64>>> for GeneratorMatrix {
    type Error = LltError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<GeneratorMatrix> for Vec<Vec<f64>> {
    fn from(m: GeneratorMatrix) -> Self {
        linalg::matrix_to_rows(&m.0)
    }
}

/// `G` with row and column `excluded` deleted, with its Perron–Frobenius data.
#[derive(Debug, Clone, PartialEq)]
pub struct SubGenerator {
    pub excluded_state: usize,
    pub entries: DMatrix<f64>,
    /// Eigenvalue of maximal real part, `-r_i`.
    pub pf_eigenvalue: f64,
    /// Decay rate `r_i = -pf_eigenvalue`; zero when some state is absorbing.
    pub decay_rate: f64,
    pub irreducible: bool,
}

impl SubGenerator {
    fn new(g: &GeneratorMatrix, excluded: usize) -> Result<Self> {
        let n = g.n();
        if n < 2 {
            return Err(LltError::Degenerate("sub-generator needs at least two states".into()));
        }
        if excluded >= n {
            return Err(LltError::InvalidInput(format!("state {excluded} out of range")));
        }
        let entries = linalg::delete_row_col(g.matrix(), excluded);
        let m = entries.nrows();
        let pf_eigenvalue = entries
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let irreducible = m == 1 || strongly_connected(m, |i, j| i != j && entries[(i, j)] > 0.0);
        let decay_rate = (-pf_eigenvalue).max(0.0);
        Ok(Self { excluded_state: excluded, entries, pf_eigenvalue, decay_rate, irreducible })
    }

    /// Whether `‖e^{tG_sub}‖₀` decays: irreducible with a strictly negative PF eigenvalue.
    pub fn is_transient(&self) -> bool {
        self.irreducible && self.decay_rate > 1e-12
    }

    pub fn exp(&self, t: f64) -> Result<DMatrix<f64>> {
        expm(&self.entries, t)
    }
}

/// A probability vector (nonnegative, unit sum).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(LltError::InvalidInput("probability weights must be finite and nonnegative".into()));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOL * weights.len() as f64 {
            return Err(LltError::InvalidInput(format!("probability weights sum to {s}")));
        }
        Ok(Self(weights))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn as_row(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, self.0.len(), &self.0)
    }
}

/// `‖A‖₀`: largest entry modulus.
pub fn norm0<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    a.iter().map(|x| x.clone().modulus()).fold(0.0, f64::max)
}

/// `‖A‖_∞`: operator norm induced by the sup-norm (largest absolute row sum).
pub fn norm_inf<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|x| x.clone().modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sm(rows: &[&[f64]]) -> StochasticMatrix {
        StochasticMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn stationary_examples() {
        let p = sm(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert_eq!(p.stationary_distribution().unwrap().weights(), &[0.5, 0.5]);
        let p = sm(&[&[1.0]]);
        assert_eq!(p.stationary_distribution().unwrap().weights(), &[1.0]);
        let p = sm(&[&[2.0 / 3.0, 1.0 / 3.0], &[1.0 / 3.0, 2.0 / 3.0]]);
        let pi = p.stationary_distribution().unwrap();
        assert!((pi.weights()[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn stationary_rejects_reducible() {
        let p = sm(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(matches!(p.stationary_distribution(), Err(LltError::NotIrreducible)));
    }

    #[test]
    fn stationary_of_asymmetric_chain_is_fixed_point() {
        let p = sm(&[&[0.1, 0.6, 0.3], &[0.4, 0.4, 0.2], &[0.0, 0.9, 0.1]]);
        let pi = p.stationary_distribution().unwrap();
        let moved = pi.as_row() * p.matrix();
        for j in 0..3 {
            assert!((moved[(0, j)] - pi.weights()[j]).abs() < 1e-10);
            assert!(pi.weights()[j] > 0.0);
        }
    }

    #[test]
    fn irreducible_aperiodic_examples() {
        assert!(!sm(&[&[0.0, 1.0], &[1.0, 0.0]]).is_irreducible_aperiodic());
        assert!(sm(&[&[0.5, 0.5], &[0.5, 0.5]]).is_irreducible_aperiodic());
        assert!(!sm(&[&[1.0, 0.0], &[0.0, 1.0]]).is_irreducible_aperiodic());
    }

    #[test]
    fn construction_rejects_bad_rows() {
        assert!(StochasticMatrix::from_rows(&[vec![0.5, 0.6], vec![0.5, 0.5]]).is_err());
        assert!(StochasticMatrix::from_rows(&[vec![1.5, -0.5], vec![0.5, 0.5]]).is_err());
        assert!(GeneratorMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -0.9]]).is_err());
        assert!(GeneratorMatrix::from_rows(&[vec![1.0, -1.0], vec![1.0, -1.0]]).is_err());
    }

    #[test]
    fn subgenerator_examples() {
        let g = GeneratorMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let s = g.subgenerator(1).unwrap();
        assert_eq!(s.entries, DMatrix::from_element(1, 1, -1.0));
        assert!((s.decay_rate - 1.0).abs() < 1e-14);
        for &t in &[0.5, 3.0] {
            assert!((s.exp(t).unwrap()[(0, 0)] - (-t).exp()).abs() < 1e-14);
        }

        let g = GeneratorMatrix::from_rows(&[
            vec![-2.0, 1.0, 1.0],
            vec![1.0, -3.0, 2.0],
            vec![2.0, 2.0, -4.0],
        ])
        .unwrap();
        let s = g.subgenerator(0).unwrap();
        assert_eq!(s.entries, DMatrix::from_row_slice(2, 2, &[-3.0, 2.0, 2.0, -4.0]));
        let want = (7.0 - 17f64.sqrt()) / 2.0;
        assert!((s.decay_rate - want).abs() < 1e-12);
        assert!(s.is_transient());

        let one = GeneratorMatrix::from_rows(&[vec![0.0]]).unwrap();
        assert!(matches!(one.subgenerator(0), Err(LltError::Degenerate(_))));
    }

    #[test]
    fn absorbing_subgenerator_is_flagged() {
        let g = GeneratorMatrix::from_rows(&[vec![-1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let s = g.subgenerator(0).unwrap();
        assert_eq!(s.decay_rate, 0.0);
        assert!(!s.is_transient());
    }

    #[test]
    fn subgenerator_exp_decays_at_pf_rate() {
        let g = GeneratorMatrix::from_rows(&[
            vec![-2.0, 1.0, 1.0],
            vec![1.0, -3.0, 2.0],
            vec![2.0, 2.0, -4.0],
        ])
        .unwrap();
        for i in 0..3 {
            let s = g.subgenerator(i).unwrap();
            let pts: Vec<(f64, f64)> = (1..=50)
                .map(|t| (t as f64, norm0(&s.exp(t as f64).unwrap()).ln()))
                .collect();
            let fit = crate::stats::linear_fit(&pts).unwrap();
            assert!(fit.slope <= -s.decay_rate + 0.05, "state {i}: {} vs {}", fit.slope, s.decay_rate);
        }
    }

    #[test]
    fn norm_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!((norm0(&id), norm_inf(&id)), (1.0, 1.0));
        let a = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.0, 3.0]);
        assert_eq!((norm0(&a), norm_inf(&a)), (3.0, 3.0));
        assert_eq!(norm0(&DMatrix::<f64>::zeros(2, 2)), 0.0);
    }

    fn generator_strategy() -> impl Strategy<Value = GeneratorMatrix> {
        (2usize..5).prop_flat_map(|n| {
            proptest::collection::vec(0.01f64..3.0, n * n).prop_map(move |v| {
                let mut m = DMatrix::from_row_slice(n, n, &v);
                for i in 0..n {
                    m[(i, i)] = 0.0;
                    let s: f64 = m.row(i).iter().sum();
                    m[(i, i)] = -s;
                }
                GeneratorMatrix::new(m).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn norm_equivalence(n in 1usize..7, seed in proptest::collection::vec(-10.0f64..10.0, 49)) {
            let a = DMatrix::from_fn(n, n, |i, j| seed[i * 7 + j]);
            let (n0, ni) = (norm0(&a), norm_inf(&a));
            prop_assert!(n0 <= ni + 1e-15);
            prop_assert!(ni <= n as f64 * n0 + 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn transition_semigroup(g in generator_strategy(), t in 0.0f64..5.0, s in 0.0f64..5.0) {
            let lhs = g.transition(t + s).unwrap();
            let rhs = g.transition(t).unwrap().matrix() * g.transition(s).unwrap().matrix();
            prop_assert!(norm0(&(lhs.matrix() - rhs)) < 1e-10);
        }

        #[test]
        fn generator_stationary_is_invariant(g in generator_strategy()) {
            let pi = g.stationary_distribution().unwrap();
            let p = g.transition(1.0).unwrap();
            let moved = pi.as_row() * p.matrix();
            for j in 0..g.n() {
                prop_assert!((moved[(0, j)] - pi.weights()[j]).abs() < 1e-10);
            }
        }
    }
}
