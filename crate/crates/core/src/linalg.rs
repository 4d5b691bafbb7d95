//! Dense complex matrices and thin wrappers around the eigensolver.

use faer::{Mat, MatRef};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMat = Mat<Complex64>;

/// A square complex matrix stored row-major, in a serializable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        SquareMatrix { n, data }
    }

    pub fn from_mat(m: MatRef<'_, Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        Ok(SquareMatrix::from_fn(m.nrows(), |i, j| m[(i, j)]))
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn to_mat(&self) -> CMat {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

/// `x*·y` (conjugate-linear in the first argument).
pub fn cdot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm_sqr(x: &[Complex64]) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum()
}

pub fn frobenius(m: MatRef<'_, Complex64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn matvec(m: MatRef<'_, Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

fn eig_err(e: impl std::fmt::Debug) -> Error {
    Error::Eigensolver(format!("{e:?}"))
}

/// Eigenvalues of a general complex matrix.
pub fn eigenvalues(m: MatRef<'_, Complex64>) -> Result<Vec<Complex64>> {
    m.eigenvalues().map_err(eig_err)
}

/// Eigenvalues and right eigenvectors (columns) of a general complex matrix.
pub fn eigen(m: MatRef<'_, Complex64>) -> Result<(Vec<Complex64>, CMat)> {
    let e = m.eigen().map_err(eig_err)?;
    let vals = e.S().column_vector().iter().copied().collect();
    Ok((vals, e.U().to_owned()))
}

/// Eigenvalues of a real matrix; real eigenvalues come out with an exact
/// zero imaginary part and complex ones in exact conjugate pairs.
pub fn eigenvalues_real(m: MatRef<'_, f64>) -> Result<Vec<Complex64>> {
    m.eigenvalues().map_err(eig_err)
}

pub fn eigen_real(m: MatRef<'_, f64>) -> Result<(Vec<Complex64>, CMat)> {
    let e = m.eigen().map_err(eig_err)?;
    let vals = e.S().column_vector().iter().copied().collect();
    Ok((vals, e.U().to_owned()))
}
