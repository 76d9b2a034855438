//! Dense linear-algebra helpers shared by the model modules.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{LltError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(LltError::InvalidInput("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn delete_row_col<T: nalgebra::Scalar>(m: &DMatrix<T>, idx: usize) -> DMatrix<T> {
    m.clone().remove_row(idx).remove_column(idx)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn real_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.re)
}

/// Eigenvalues sorted by decreasing modulus, ties broken by larger real part.
pub fn sorted_eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let schur = Schur::try_new(m.clone(), 1e-15, 10_000)
        .ok_or_else(|| LltError::NumericalError("Schur decomposition did not converge".into()))?;
    let (_, t) = schur.unpack();
    let mut vals: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    vals.sort_by(|a, b| {
        b.norm()
            .partial_cmp(&a.norm())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(vals)
}

pub fn spectral_radius(m: &CMatrix) -> Result<f64> {
    Ok(sorted_eigenvalues(m)?[0].norm())
}

/// Unit vector spanning (numerically) the kernel of `a`: the right singular
/// vector of the smallest singular value.
pub fn null_vector(a: &CMatrix) -> Result<CVector> {
    let n = a.ncols();
    if n == 1 {
        return Ok(CVector::from_element(1, Complex64::new(1.0, 0.0)));
    }
    let svd = a.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| LltError::NumericalError("SVD did not return V".into()))?;
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    Ok(DVector::from_fn(n, |j, _| v_t[(imin, j)].conj()))
}

/// Right and left eigenvectors of `m` for the eigenvalue `lambda`.
/// Right: `m r = λ r`; left (row) vector: `l m = λ l`.
pub fn eigenvectors(m: &CMatrix, lambda: Complex64) -> Result<(CVector, CVector)> {
    let n = m.nrows();
    let shifted = m - CMatrix::identity(n, n) * lambda;
    let right = null_vector(&shifted)?;
    let left = null_vector(&shifted.adjoint())?.map(|z| z.conj());
    Ok((right, left))
}

/// Cholesky factor `L` with `Σ = L Lᵀ`.
pub fn cholesky(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    sigma
        .clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| LltError::DegenerateCovariance("matrix is not positive definite".into()))
}

/// Symmetric eigenvalues in ascending order.
pub fn symmetric_eigenvalues(sigma: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = sigma.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_diagonal_sorted() {
        let m = to_complex(&DMatrix::from_diagonal(&DVector::from_row_slice(&[0.2, -0.9, 0.5])));
        let ev = sorted_eigenvalues(&m).unwrap();
        assert!((ev[0].re + 0.9).abs() < 1e-14);
        assert!((ev[1].re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn eigenvectors_of_stochastic_matrix() {
        let p = to_complex(&DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.3, 0.7]));
        let (r, l) = eigenvectors(&p, Complex64::new(1.0, 0.0)).unwrap();
        // right ∝ 1, left ∝ π = (0.75, 0.25)
        assert!((r[0] / r[1] - 1.0).norm() < 1e-12);
        assert!((l[0] / l[1] - 3.0).norm() < 1e-12);
    }

    #[test]
    fn ties_broken_by_real_part() {
        let m = to_complex(&DMatrix::from_diagonal(&DVector::from_row_slice(&[-1.0, 1.0])));
        let ev = sorted_eigenvalues(&m).unwrap();
        assert!(ev[0].re > 0.0);
    }
}
