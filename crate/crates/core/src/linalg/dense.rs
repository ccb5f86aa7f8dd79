//! Dense helpers on top of faer: Cholesky, symmetric eigen, SVD and weighted orthonormalization.

use faer::{Mat, Side};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn col(m: &Mat<f64>, j: usize) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

pub fn from_cols(nrows: usize, cols: &[Vec<f64>]) -> Mat<f64> {
    Mat::from_fn(nrows, cols.len(), |i, j| cols[j][i])
}

pub fn matvec(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; m.nrows()];
    for j in 0..m.ncols() {
        let xj = x[j];
        if xj != 0.0 {
            for i in 0..m.nrows() {
                y[i] += m[(i, j)] * xj;
            }
        }
    }
    y
}

/// Dense Cholesky factor `A = L Lᵀ`.
pub struct DenseChol {
    l: Mat<f64>,
}

impl DenseChol {
    pub fn new(a: &Mat<f64>) -> Result<Self> {
        let llt = a
            .llt(Side::Lower)
            .map_err(|_| Error::Assembly("matrix is not symmetric positive definite".into()))?;
        Ok(DenseChol { l: llt.L().to_owned() })
    }

    pub fn l(&self) -> &Mat<f64> {
        &self.l
    }

    /// Solves `L X = B` in place.
    pub fn solve_l(&self, b: &mut Mat<f64>) {
        self.l.solve_lower_triangular_in_place(b.as_mut());
    }

    /// Solves `Lᵀ X = B` in place.
    pub fn solve_lt(&self, b: &mut Mat<f64>) {
        self.l.transpose().solve_upper_triangular_in_place(b.as_mut());
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut m = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        self.solve_l(&mut m);
        self.solve_lt(&mut m);
        col(&m, 0)
    }
}

/// Symmetric eigendecomposition, eigenvalues ascending.
pub fn sym_eigen(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let e = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::Solver { iterations: 0, message: "dense symmetric eigensolver failed".into() })?;
    let s = e.S().column_vector();
    let vals: Vec<f64> = (0..s.nrows()).map(|i| s[i]).collect();
    Ok((vals, e.U().to_owned()))
}

/// Generalized symmetric-definite eigenproblem `A x = λ B x`; eigenvectors are B-orthonormal.
pub fn gen_sym_eigen(a: &Mat<f64>, b: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let ch = DenseChol::new(b)?;
    // C = L⁻¹ A L⁻ᵀ
    let mut c = a.to_owned();
    ch.solve_l(&mut c);
    let mut ct = c.transpose().to_owned();
    ch.solve_l(&mut ct);
    let n = a.nrows();
    let c = Mat::from_fn(n, n, |i, j| 0.5 * (ct[(i, j)] + ct[(j, i)]));
    let (vals, mut y) = sym_eigen(&c)?;
    ch.solve_lt(&mut y);
    Ok((vals, y))
}

/// Full SVD `A = U Σ Vᵀ`; singular values descending.
pub fn svd(a: &Mat<f64>) -> Result<(Mat<f64>, Vec<f64>, Mat<f64>)> {
    let s = a
        .svd()
        .map_err(|_| Error::Solver { iterations: 0, message: "dense SVD failed".into() })?;
    let d = s.S().column_vector();
    let sv: Vec<f64> = (0..d.nrows()).map(|i| d[i]).collect();
    Ok((s.U().to_owned(), sv, s.V().to_owned()))
}

/// Orthonormalizes the columns of `x` in the inner product `⟨u,v⟩ = uᵀ B v` (two passes of
/// modified Gram–Schmidt). Columns that collapse below `drop_tol` relative norm are discarded.
pub fn b_orthonormalize(
    x: &[Vec<f64>],
    apply_b: &dyn Fn(&[f64]) -> Vec<f64>,
    drop_tol: f64,
) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut bq: Vec<Vec<f64>> = Vec::new();
    for v in x {
        let mut w = v.clone();
        let bw0 = apply_b(&w);
        let n0 = dot(&w, &bw0).max(0.0).sqrt();
        if n0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for (qi, bqi) in q.iter().zip(&bq) {
                let c = dot(bqi, &w);
                axpy(&mut w, -c, qi);
            }
        }
        let bw = apply_b(&w);
        let nw = dot(&w, &bw).max(0.0).sqrt();
        if nw <= drop_tol * n0 {
            continue;
        }
        w.iter_mut().for_each(|t| *t /= nw);
        let bw: Vec<f64> = bw.iter().map(|t| t / nw).collect();
        q.push(w);
        bq.push(bw);
    }
    q
}

/// Sine of the largest principal angle between the spans of two B-orthonormal bases.
/// Returns 1 when the dimensions differ.
pub fn subspace_sin_angle(x: &[Vec<f64>], y: &[Vec<f64>], apply_b: &dyn Fn(&[f64]) -> Vec<f64>) -> f64 {
    if x.len() != y.len() {
        return 1.0;
    }
    if x.is_empty() {
        return 0.0;
    }
    let by: Vec<Vec<f64>> = y.iter().map(|v| apply_b(v)).collect();
    let bx: Vec<Vec<f64>> = x.iter().map(|v| apply_b(v)).collect();
    // residuals of x projected on span(y), both directions
    let res = |a: &[Vec<f64>], b: &[Vec<f64>], bb: &[Vec<f64>]| -> f64 {
        let k = a.len();
        let r: Vec<Vec<f64>> = a
            .iter()
            .map(|ai| {
                let mut w = ai.clone();
                for (bj, bbj) in b.iter().zip(bb) {
                    let c = dot(bbj, ai);
                    axpy(&mut w, -c, bj);
                }
                w
            })
            .collect();
        let br: Vec<Vec<f64>> = r.iter().map(|v| apply_b(v)).collect();
        let g = Mat::from_fn(k, k, |i, j| dot(&r[i], &br[j]));
        let g = Mat::from_fn(k, k, |i, j| 0.5 * (g[(i, j)] + g[(j, i)]));
        match sym_eigen(&g) {
            Ok((vals, _)) => vals.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
            Err(_) => 1.0,
        }
    };
    res(x, y, &by).max(res(y, x, &bx)).min(1.0)
}
