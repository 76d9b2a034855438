//! Matrix exponential by scaling and squaring with diagonal Padé approximants.
//!
//! Degree selection and the θ thresholds follow Higham's 2005 analysis; the
//! code is generic over real and complex dense matrices.

use nalgebra::{ComplexField, DMatrix};

use crate::error::{LltError, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
];
const THETA_13: f64 = 5.371920351148152;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|x| x.clone().modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, c: f64) -> DMatrix<T> {
    a.map(|x| x * T::from_real(c))
}

/// Computes `exp(t * a)`.
pub fn expm<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, t: f64) -> Result<DMatrix<T>> {
    if !a.is_square() {
        return Err(LltError::InvalidInput("matrix exponential needs a square matrix".into()));
    }
    if !t.is_finite() || a.iter().any(|x| !x.clone().modulus().is_finite()) {
        return Err(LltError::InvalidInput("non-finite entry in matrix exponential".into()));
    }
    let n = a.nrows();
    let id = DMatrix::<T>::identity(n, n);
    if t == 0.0 || n == 0 {
        return Ok(id);
    }
    let a = scaled(a, t);
    let norm = norm1(&a);
    for &(m, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &PADE_3,
                5 => &PADE_5,
                7 => &PADE_7,
                _ => &PADE_9,
            };
            return pade_low(&a, coeffs);
        }
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = scaled(&a, 0.5f64.powi(s));
    let mut r = pade_13(&a)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

fn lincomb<T: ComplexField<RealField = f64>>(terms: &[(f64, &DMatrix<T>)]) -> DMatrix<T> {
    let mut out = scaled(terms[0].1, terms[0].0);
    for &(c, m) in &terms[1..] {
        out += scaled(m, c);
    }
    out
}

fn solve_pade<T: ComplexField<RealField = f64>>(u: DMatrix<T>, v: DMatrix<T>) -> Result<DMatrix<T>> {
    let p = &v + &u;
    let q = &v - &u;
    q.lu()
        .solve(&p)
        .ok_or_else(|| LltError::NumericalError("singular Padé denominator".into()))
}

fn pade_low<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, b: &[f64]) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let id = DMatrix::<T>::identity(n, n);
    let a2 = a * a;
    // even powers I, A², A⁴, ...
    let mut pows = vec![id, a2.clone()];
    while pows.len() < b.len() / 2 {
        let next = pows.last().unwrap() * &a2;
        pows.push(next);
    }
    let mut u_inner = DMatrix::<T>::zeros(n, n);
    let mut v = DMatrix::<T>::zeros(n, n);
    for (k, p) in pows.iter().enumerate() {
        u_inner += scaled(p, b[2 * k + 1]);
        v += scaled(p, b[2 * k]);
    }
    solve_pade(a * u_inner, v)
}

fn pade_13<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let b = &PADE_13;
    let n = a.nrows();
    let id = DMatrix::<T>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = lincomb(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)]);
    let u = a * (&a6 * inner_u + lincomb(&[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &id)]));
    let inner_v = lincomb(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)]);
    let v = &a6 * inner_v + lincomb(&[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &id)]);
    solve_pade(u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn zero_time_is_identity() {
        let a = DMatrix::from_row_slice(2, 2, &[3.0, -1.0, 2.0, 7.0]);
        assert_eq!(expm(&a, 0.0).unwrap(), DMatrix::identity(2, 2));
    }

    #[test]
    fn symmetric_two_state_generator() {
        let g = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
        let p = expm(&g, 1.0).unwrap();
        let e = (-2.0f64).exp();
        let expected = [(1.0 + e) / 2.0, (1.0 - e) / 2.0];
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { expected[0] } else { expected[1] };
                assert!((p[(i, j)] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn scalar_and_large_norm() {
        for &t in &[0.01, 1.0, 7.5, 40.0] {
            let a = DMatrix::from_element(1, 1, -1.0);
            assert!((expm(&a, t).unwrap()[(0, 0)] - (-t).exp()).abs() < 1e-15 * (1.0 + (-t).exp()));
        }
    }

    #[test]
    fn diagonal_complex_matches_scalar_exponentials() {
        let d = [Complex64::new(-0.3, 2.0), Complex64::new(-5.0, -40.0), Complex64::new(0.1, 0.0)];
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&d));
        let e = expm(&a, 3.0).unwrap();
        for i in 0..3 {
            let want = (d[i] * 3.0).exp();
            assert!((e[(i, i)] - want).norm() < 1e-12 * want.norm().max(1.0));
        }
    }

    #[test]
    fn nilpotent_block() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let e = expm(&a, 2.5).unwrap();
        assert!((e[(0, 1)] - 2.5).abs() < 1e-14);
        assert!((e[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_finite() {
        let a = DMatrix::from_element(1, 1, f64::NAN);
        assert!(expm(&a, 1.0).is_err());
    }
}
