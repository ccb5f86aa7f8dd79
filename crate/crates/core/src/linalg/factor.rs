//! Sparse direct factorizations backed by faer.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::{Mat, Side};

use super::dense::col;
use super::sparse::Csr;
use crate::error::{Error, Result};

/// Sparse LU with partial pivoting for general (including symmetric indefinite) matrices.
pub struct SparseLu {
    lu: Lu<usize, f64>,
    n: usize,
}

impl SparseLu {
    pub fn new(a: &Csr) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::Dimension(format!("LU of non-square {}x{} matrix", a.nrows, a.ncols)));
        }
        let lu = a
            .to_faer()
            .sp_lu()
            .map_err(|e| Error::Solver { iterations: 0, message: format!("sparse LU failed: {e:?}") })?;
        Ok(SparseLu { lu, n: a.nrows })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = Mat::from_fn(self.n, 1, |i, _| b[i]);
        col(&self.lu.solve(&m), 0)
    }

    pub fn solve_mat(&self, b: &Mat<f64>) -> Mat<f64> {
        self.lu.solve(b)
    }
}

/// Sparse Cholesky for symmetric positive definite matrices (mass matrices).
pub struct SparseChol {
    llt: Llt<usize, f64>,
    n: usize,
}

impl SparseChol {
    pub fn new(a: &Csr) -> Result<Self> {
        let llt = a
            .to_faer()
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Assembly(format!("matrix is not positive definite: {e:?}")))?;
        Ok(SparseChol { llt, n: a.nrows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        if self.n == 0 {
            return Vec::new();
        }
        let m = Mat::from_fn(self.n, 1, |i, _| b[i]);
        col(&self.llt.solve(&m), 0)
    }

    pub fn solve_mat(&self, b: &Mat<f64>) -> Mat<f64> {
        self.llt.solve(b)
    }
}
