//! Exterior derivatives, Hodge stars, codifferentials and Hodge Laplacians.

use crate::error::{Error, Result};
use crate::linalg::dense::dot;
use crate::linalg::factor::SparseChol;
use crate::linalg::{Csr, WeightedOperator};
use crate::mesh::{MetricData, SimplicialComplex};

use super::whitney::mass_matrix;

/// Assembled discrete operators on `Λ⁰ … Λⁿ`.
///
/// `d[k]` is the signed incidence coboundary and `star[k]` the Whitney mass matrix. The
/// codifferential is `d*_k = star[k−1]⁻¹ d[k−1]ᵀ star[k]`; it is applied through cached
/// Cholesky factors and never formed.
pub struct FormOperators {
    pub n: usize,
    pub d: Vec<Csr>,
    pub star: Vec<Csr>,
    pub metric: MetricData,
    chol: Vec<SparseChol>,
}

impl std::fmt::Debug for FormOperators {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FormOperators").field("n", &self.n).field("dims", &self.dims()).finish()
    }
}

impl FormOperators {
    pub fn assemble(mesh: &SimplicialComplex, metric: &MetricData) -> Result<Self> {
        crate::init_determinism();
        let n = mesh.dim();
        if metric.dim != n || metric.volumes[n].len() != mesh.n_simplices(n) {
            return Err(Error::Dimension("metric does not match the mesh".into()));
        }
        let d: Vec<Csr> = (0..n).map(|k| mesh.coboundary(k)).collect();
        let star: Vec<Csr> = (0..=n).map(|k| mass_matrix(mesh, metric, k)).collect();
        let mut chol = Vec::with_capacity(n + 1);
        for (k, m) in star.iter().enumerate() {
            chol.push(SparseChol::new(m).map_err(|_| degenerate(mesh, metric, k))?);
        }
        Ok(FormOperators { n, d, star, metric: metric.clone(), chol })
    }

    /// Number of k-simplices.
    pub fn dim(&self, k: usize) -> usize {
        if k <= self.n {
            self.star[k].nrows
        } else {
            0
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        (0..=self.n).map(|k| self.dim(k)).collect()
    }

    /// `d_k : Λ^k → Λ^{k+1}`; the empty map for `k = n`.
    pub fn d(&self, k: usize) -> Csr {
        if k < self.n {
            self.d[k].clone()
        } else {
            Csr::zeros(0, self.dim(k))
        }
    }

    pub fn star_solve(&self, k: usize, x: &[f64]) -> Vec<f64> {
        self.chol[k].solve(x)
    }

    pub fn inner(&self, k: usize, a: &[f64], b: &[f64]) -> f64 {
        dot(a, &self.star[k].matvec(b))
    }

    pub fn norm(&self, k: usize, a: &[f64]) -> f64 {
        self.inner(k, a, a).max(0.0).sqrt()
    }

    /// Weak codifferential `d_{k−1}ᵀ star[k]`, rows indexed by (k−1)-simplices.
    pub fn codiff_weak(&self, k: usize) -> Csr {
        if k == 0 || k > self.n {
            return Csr::zeros(0, self.dim(k));
        }
        self.d[k - 1].transpose().matmul(&self.star[k])
    }

    /// `d*_k x`.
    pub fn codiff(&self, k: usize, x: &[f64]) -> Vec<f64> {
        if k == 0 {
            return Vec::new();
        }
        self.star_solve(k - 1, &self.codiff_weak(k).matvec(x))
    }

    /// Weak Hodge Laplacian `d_kᵀ M_{k+1} d_k + M_k d_{k−1} M_{k−1}⁻¹ d_{k−1}ᵀ M_k` applied to `x`.
    pub fn laplacian_weak_apply(&self, k: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim(k)];
        if k < self.n {
            let dx = self.d[k].matvec(x);
            out = self.d[k].matvec_t(&self.star[k + 1].matvec(&dx));
        }
        if k > 0 {
            let c = self.codiff(k, x);
            let t = self.star[k].matvec(&self.d[k - 1].matvec(&c));
            out.iter_mut().zip(&t).for_each(|(o, v)| *o += v);
        }
        out
    }

    /// Strong Laplacian `Δ_k x = M_k⁻¹ (weak Laplacian) x`.
    pub fn laplacian_apply(&self, k: usize, x: &[f64]) -> Vec<f64> {
        self.star_solve(k, &self.laplacian_weak_apply(k, x))
    }

    /// `Δ_k` as the normal operator of `x ↦ (d_k x, d*_k x)` between star-weighted spaces.
    pub fn laplacian_operator(&self, k: usize) -> WeightedOperator {
        let nk = self.dim(k);
        let nup = if k < self.n { self.dim(k + 1) } else { 0 };
        let ndn = if k > 0 { self.dim(k - 1) } else { 0 };
        let dk = self.d(k);
        let cw = self.codiff_weak(k);
        let mup = if k < self.n { self.star[k + 1].clone() } else { Csr::zeros(0, 0) };
        let mdn = if k > 0 { self.star[k - 1].clone() } else { Csr::zeros(0, 0) };
        // weak rows: M_{k+1} d_k on top, d_{k−1}ᵀ M_k below
        let w_up = mup.matmul(&dk);
        let w0 = Csr::block(&[nup, ndn], &[nk], &[vec![Some(&w_up)], vec![Some(&cw)]]);
        WeightedOperator {
            w0,
            aux: None,
            dom_mass: self.star[k].clone(),
            cod_mass: Csr::block_diag(&[&mup, &mdn]),
        }
    }
}

/// Names the smallest-volume simplex touching the degree that failed to factor.
fn degenerate(mesh: &SimplicialComplex, metric: &MetricData, k: usize) -> Error {
    let n = mesh.dim();
    let (t, _) = metric.volumes[n]
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    Error::Assembly(format!("mass matrix of degree {k} is singular; smallest top simplex is {t}"))
}
