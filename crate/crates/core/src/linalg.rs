//! Small dense complex matrix helpers.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Matrix = Array2<Complex64>;

pub fn identity(n: usize) -> Matrix {
    Array2::eye(n)
}

pub fn dagger(m: &Matrix) -> Matrix {
    m.t().mapv(|z| z.conj())
}

pub fn diag(entries: &[Complex64]) -> Matrix {
    let mut m = Array2::zeros((entries.len(), entries.len()));
    for (i, &e) in entries.iter().enumerate() {
        m[[i, i]] = e;
    }
    m
}

/// Largest entry modulus.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    max_abs(&(a - b))
}

pub fn matrix_power(m: &Matrix, e: u32) -> Matrix {
    (0..e).fold(identity(m.nrows()), |acc, _| acc.dot(m))
}

fn one_norm(m: &Matrix) -> f64 {
    m.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(A)` by scaling and squaring around a Taylor series.
///
/// The series is summed until a term falls below `1e-18` relative to the
/// running sum; failing that within 64 terms is reported as non-convergence.
pub fn expm(a: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NotConverged("matrix exponential"));
    }
    let norm = one_norm(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / f64::from(2u32.pow(squarings)));

    let mut sum = identity(n);
    let mut term = identity(n);
    let mut converged = false;
    for j in 1..=64u32 {
        term = term.dot(&scaled).mapv(|z| z / f64::from(j));
        sum += &term;
        if one_norm(&term) <= 1e-18 * one_norm(&sum).max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged("matrix exponential"));
    }
    for _ in 0..squarings {
        sum = sum.dot(&sum);
    }
    Ok(sum)
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &Matrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[[i, col]].norm().total_cmp(&m[[j, col]].norm()))
            .expect("non-empty pivot range");
        let p = m[[pivot, col]].norm();
        if p < 1e-13 {
            return Err(Error::Singular(p));
        }
        if pivot != col {
            for c in 0..n {
                m.swap([pivot, c], [col, c]);
            }
            rhs.swap(pivot, col);
        }
        for row in col + 1..n {
            let f = m[[row, col]] / m[[col, col]];
            if f.norm() == 0.0 {
                continue;
            }
            for c in col..n {
                let v = m[[col, c]];
                m[[row, c]] -= f * v;
            }
            let v = rhs[col];
            rhs[row] -= f * v;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for c in row + 1..n {
            acc -= m[[row, c]] * x[c];
        }
        x[row] = acc / m[[row, row]];
    }
    Ok(x)
}
