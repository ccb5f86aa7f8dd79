//! Operators between star-weighted spaces and their kernels / normal-operator spectra.
//!
//! An operator is stored as `A = M_W⁻¹ (W₀ + W₁ K⁻¹ L)` where every factor is sparse and
//! `M_W`, `K` are symmetric positive definite. This covers codifferentials (`d* = M⁻¹dᵀM`)
//! and compositions such as `d ∘ d*` without forming dense inverses. Spectral questions are
//! asked about the normal operator `A*A = Aᵀ M_W A` against the domain mass `M_V`.

use faer::Mat;

use super::dense::{self, col, dot, DenseChol};
use super::eigs::{eigs_window, spectral_radius, IterOptions, Pencil};
use super::factor::{SparseChol, SparseLu};
use super::sparse::Csr;
use crate::error::{Error, Result};

/// Unknowns below this count use dense factorizations.
pub const DENSE_LIMIT: usize = 3000;

#[derive(Clone, Debug)]
pub struct Aux {
    pub w1: Csr,
    pub k: Csr,
    pub l: Csr,
}

#[derive(Clone, Debug)]
pub struct WeightedOperator {
    pub w0: Csr,
    pub aux: Option<Aux>,
    pub dom_mass: Csr,
    pub cod_mass: Csr,
}

/// Kernel tolerance: relative to the largest singular value, or absolute.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelTol {
    Relative(f64),
    Absolute(f64),
}

#[derive(Clone, Debug)]
pub struct KernelResult {
    pub dim: usize,
    /// `M_V`-orthonormal kernel basis.
    pub basis: Vec<Vec<f64>>,
    /// Smallest singular values found (ascending), including a few above the threshold.
    pub singular_values: Vec<f64>,
    pub threshold: f64,
    pub sigma_max: f64,
    pub dense: bool,
}

/// Cached factorizations used by matrix-free application.
pub struct Factored<'a> {
    pub op: &'a WeightedOperator,
    dom: SparseChol,
    cod: SparseChol,
    k: Option<SparseChol>,
}

impl WeightedOperator {
    pub fn dom_dim(&self) -> usize {
        self.w0.ncols
    }

    pub fn cod_dim(&self) -> usize {
        self.w0.nrows
    }

    pub fn factor(&self) -> Result<Factored<'_>> {
        Ok(Factored {
            op: self,
            dom: SparseChol::new(&self.dom_mass)?,
            cod: SparseChol::new(&self.cod_mass)?,
            k: match &self.aux {
                Some(a) => Some(SparseChol::new(&a.k)?),
                None => None,
            },
        })
    }

    /// Dense strong matrix `M_W⁻¹(W₀ + W₁K⁻¹L)`.
    pub fn dense_strong(&self) -> Result<Mat<f64>> {
        let mut weak = self.w0.to_dense();
        if let Some(a) = &self.aux {
            let kc = DenseChol::new(&a.k.to_dense())?;
            let mut kl = a.l.to_dense();
            kc.solve_l(&mut kl);
            kc.solve_lt(&mut kl);
            let w1 = a.w1.to_dense();
            weak = &weak + &w1 * &kl;
        }
        if self.cod_dim() == 0 {
            return Ok(weak);
        }
        let cc = DenseChol::new(&self.cod_mass.to_dense())?;
        cc.solve_l(&mut weak);
        cc.solve_lt(&mut weak);
        Ok(weak)
    }

    /// `Â = L_Wᵀ A L_V⁻ᵀ`, whose SVD gives the star-weighted singular values, together with
    /// the domain Cholesky factor for back-transformation.
    pub fn dense_whitened(&self) -> Result<(Mat<f64>, DenseChol)> {
        let a = self.dense_strong()?;
        let dc = DenseChol::new(&self.dom_mass.to_dense())?;
        let lwa = if self.cod_dim() == 0 {
            a
        } else {
            let cc = DenseChol::new(&self.cod_mass.to_dense())?;
            cc.l().transpose() * &a
        };
        // Âᵀ = L_V⁻¹ (L_Wᵀ A)ᵀ
        let mut t = lwa.transpose().to_owned();
        dc.solve_l(&mut t);
        Ok((t.transpose().to_owned(), dc))
    }

    /// Adjoint with respect to the star inner products: `A* = M_V⁻¹(W₀ᵀ + Lᵀ K⁻¹ W₁ᵀ)`.
    pub fn adjoint(&self) -> WeightedOperator {
        WeightedOperator {
            w0: self.w0.transpose(),
            aux: self.aux.as_ref().map(|a| Aux { w1: a.l.transpose(), k: a.k.clone(), l: a.w1.transpose() }),
            dom_mass: self.cod_mass.clone(),
            cod_mass: self.dom_mass.clone(),
        }
    }

    /// Vertical stack `x ↦ (A₁x, A₂x, …)` of operators sharing a domain.
    pub fn stack(ops: &[&WeightedOperator]) -> Result<WeightedOperator> {
        let first = ops.first().ok_or_else(|| Error::Dimension("empty operator stack".into()))?;
        let nv = first.dom_dim();
        if ops.iter().any(|o| o.dom_dim() != nv) {
            return Err(Error::Dimension("stacked operators must share a domain".into()));
        }
        let rows: Vec<usize> = ops.iter().map(|o| o.cod_dim()).collect();
        let w0_blocks: Vec<Vec<Option<&Csr>>> = ops.iter().map(|o| vec![Some(&o.w0)]).collect();
        let w0 = Csr::block(&rows, &[nv], &w0_blocks);
        let masses: Vec<&Csr> = ops.iter().map(|o| &o.cod_mass).collect();
        let cod_mass = Csr::block_diag(&masses);
        let aux_sizes: Vec<usize> = ops.iter().map(|o| o.aux.as_ref().map_or(0, |a| a.k.nrows)).collect();
        let aux = if aux_sizes.iter().all(|&m| m == 0) {
            None
        } else {
            let empty_k: Vec<Csr> = aux_sizes.iter().map(|_| Csr::zeros(0, 0)).collect();
            let ks: Vec<&Csr> = ops.iter().zip(&empty_k).map(|(o, e)| o.aux.as_ref().map_or(e, |a| &a.k)).collect();
            let mut w1_blocks: Vec<Vec<Option<&Csr>>> = vec![vec![None; ops.len()]; ops.len()];
            let mut l_blocks: Vec<Vec<Option<&Csr>>> = Vec::with_capacity(ops.len());
            for (i, o) in ops.iter().enumerate() {
                if let Some(a) = &o.aux {
                    w1_blocks[i][i] = Some(&a.w1);
                    l_blocks.push(vec![Some(&a.l)]);
                } else {
                    l_blocks.push(vec![None]);
                }
            }
            Some(Aux {
                w1: Csr::block(&rows, &aux_sizes, &w1_blocks),
                k: Csr::block_diag(&ks),
                l: Csr::block(&aux_sizes, &[nv], &l_blocks),
            })
        };
        Ok(WeightedOperator { w0, aux, dom_mass: first.dom_mass.clone(), cod_mass })
    }

    /// Symmetric saddle matrix whose leading block solve gives `(A*A − s M_V)⁻¹`.
    pub fn saddle(&self, shift: f64) -> Csr {
        let nv = self.dom_dim();
        let nw = self.cod_dim();
        let mv = self.dom_mass.scale(-shift);
        let mw = self.cod_mass.scale(-1.0);
        let w0t = self.w0.transpose();
        match &self.aux {
            None => Csr::block(
                &[nv, nw],
                &[nv, nw],
                &[vec![Some(&mv), Some(&w0t)], vec![Some(&self.w0), Some(&mw)]],
            ),
            Some(a) => {
                let m = a.k.nrows;
                let lt = a.l.transpose();
                let w1t = a.w1.transpose();
                let nk = a.k.scale(-1.0);
                Csr::block(
                    &[nv, nw, m, m],
                    &[nv, nw, m, m],
                    &[
                        vec![Some(&mv), Some(&w0t), Some(&lt), None],
                        vec![Some(&self.w0), Some(&mw), None, Some(&a.w1)],
                        vec![Some(&a.l), None, None, Some(&nk)],
                        vec![None, Some(&w1t), Some(&nk), None],
                    ],
                )
            }
        }
    }
}

impl<'a> Factored<'a> {
    /// Weak image `(W₀ + W₁K⁻¹L) x`.
    pub fn weak(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.op.w0.matvec(x);
        if let (Some(a), Some(k)) = (&self.op.aux, &self.k) {
            let u = k.solve(&a.l.matvec(x));
            let t = a.w1.matvec(&u);
            dense::axpy(&mut y, 1.0, &t);
        }
        y
    }

    /// Strong image `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.cod.solve(&self.weak(x))
    }

    /// `‖A x‖` in the codomain star norm.
    pub fn image_norm(&self, x: &[f64]) -> f64 {
        let w = self.weak(x);
        let y = self.cod.solve(&w);
        dot(&y, &w).max(0.0).sqrt()
    }

    /// Normal operator `Aᵀ M_W A x` (weak form on the domain).
    pub fn normal(&self, x: &[f64]) -> Vec<f64> {
        let y = self.apply(x);
        let mut out = self.op.w0.matvec_t(&y);
        if let (Some(a), Some(k)) = (&self.op.aux, &self.k) {
            let p = k.solve(&a.w1.matvec_t(&y));
            let t = a.l.matvec_t(&p);
            dense::axpy(&mut out, 1.0, &t);
        }
        out
    }

    pub fn dom_solve(&self, x: &[f64]) -> Vec<f64> {
        self.dom.solve(x)
    }
}

impl<'a> Pencil for Factored<'a> {
    fn dim(&self) -> usize {
        self.op.dom_dim()
    }

    fn apply_a(&self, x: &[f64]) -> Vec<f64> {
        self.normal(x)
    }

    fn apply_b(&self, x: &[f64]) -> Vec<f64> {
        self.op.dom_mass.matvec(x)
    }

    fn solve_b(&self, x: &[f64]) -> Vec<f64> {
        self.dom.solve(x)
    }

    fn shift_invert(&self, shift: f64) -> Result<Box<dyn Fn(&[f64]) -> Vec<f64> + '_>> {
        let s = self.op.saddle(shift);
        let total = s.nrows;
        let nv = self.op.dom_dim();
        let lu = SparseLu::new(&s)?;
        // reject numerically singular factorizations
        let probe: Vec<f64> = (0..nv).map(|i| ((i * 7919 % 101) as f64) / 101.0 - 0.5).collect();
        let mut rhs = vec![0.0; total];
        rhs[..nv].copy_from_slice(&probe);
        let z = lu.solve(&rhs);
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver { iterations: 0, message: "singular shifted saddle matrix".into() });
        }
        Ok(Box::new(move |b: &[f64]| {
            let mut rhs = vec![0.0; total];
            rhs[..nv].copy_from_slice(b);
            let z = lu.solve(&rhs);
            z[..nv].to_vec()
        }))
    }
}

/// Kernel of a star-weighted operator: singular values of the normal operator below the
/// tolerance, with an `M_V`-orthonormal basis.
pub fn kernel(op: &WeightedOperator, tol: KernelTol, opts: &IterOptions) -> Result<KernelResult> {
    match tol {
        KernelTol::Relative(t) | KernelTol::Absolute(t) if t <= 0.0 => {
            return Err(Error::Parameter(format!("kernel tolerance must be positive, got {t}")))
        }
        _ => {}
    }
    let nv = op.dom_dim();
    if nv == 0 {
        return Ok(KernelResult {
            dim: 0,
            basis: vec![],
            singular_values: vec![],
            threshold: 0.0,
            sigma_max: 0.0,
            dense: true,
        });
    }
    if nv <= DENSE_LIMIT {
        kernel_dense(op, tol)
    } else {
        kernel_iterative(op, tol, opts)
    }
}

fn kernel_dense(op: &WeightedOperator, tol: KernelTol) -> Result<KernelResult> {
    let nv = op.dom_dim();
    let nw = op.cod_dim();
    let (ahat, dc) = op.dense_whitened()?;
    let (sv, v) = if nw == 0 {
        (vec![], Mat::<f64>::identity(nv, nv))
    } else {
        let (_, s, v) = dense::svd(&ahat)?;
        (s, v)
    };
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let threshold = match tol {
        KernelTol::Relative(t) => t * sigma_max,
        KernelTol::Absolute(t) => t,
    };
    // singular values indexed by V columns; columns beyond min(m,n) have σ = 0
    let sigma_of = |j: usize| if j < sv.len() { sv[j] } else { 0.0 };
    let mut idx: Vec<usize> = (0..nv).filter(|&j| sigma_of(j) <= threshold).collect();
    idx.sort_by(|&a, &b| sigma_of(a).partial_cmp(&sigma_of(b)).unwrap().then(a.cmp(&b)));
    let mut y = Mat::from_fn(nv, idx.len(), |i, j| v[(i, idx[j])]);
    dc.solve_lt(&mut y);
    let basis: Vec<Vec<f64>> = (0..idx.len()).map(|j| col(&y, j)).collect();
    let mut small: Vec<f64> = (0..nv).map(sigma_of).collect();
    small.sort_by(|a, b| a.partial_cmp(b).unwrap());
    small.truncate(idx.len() + 4);
    Ok(KernelResult {
        dim: basis.len(),
        basis,
        singular_values: small,
        threshold,
        sigma_max,
        dense: true,
    })
}

fn kernel_iterative(op: &WeightedOperator, tol: KernelTol, opts: &IterOptions) -> Result<KernelResult> {
    let f = op.factor()?;
    let lam_max = spectral_radius(&f, 40, opts.seed ^ 0x1234);
    let sigma_max = lam_max.sqrt();
    let threshold = match tol {
        KernelTol::Relative(t) => t * sigma_max,
        KernelTol::Absolute(t) => t,
    };
    // the window in σ² includes a floor at the attainable accuracy of the normal operator
    let floor = 1e-13 * lam_max;
    let half = threshold * threshold + floor;
    let pairs = eigs_window(&f, 0.0, half, opts)?;
    let mut basis = Vec::new();
    let mut sv = Vec::new();
    for (_, v) in pairs {
        let s = f.image_norm(&v);
        sv.push(s);
        if s <= threshold || threshold * threshold < floor {
            basis.push(v);
        }
    }
    Ok(KernelResult { dim: basis.len(), basis, singular_values: sv, threshold, sigma_max, dense: false })
}

/// Eigenpairs of `(A*A, M_V)` with `|λ − center| ≤ halfwidth`.
pub fn normal_eigs_window(
    op: &WeightedOperator,
    center: f64,
    halfwidth: f64,
    opts: &IterOptions,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let nv = op.dom_dim();
    if nv == 0 {
        return Ok(vec![]);
    }
    if nv <= DENSE_LIMIT {
        let (ahat, dc) = op.dense_whitened()?;
        let c = ahat.transpose() * &ahat;
        let c = Mat::from_fn(nv, nv, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
        let (vals, vecs) = dense::sym_eigen(&c)?;
        let idx: Vec<usize> = (0..nv).filter(|&j| (vals[j] - center).abs() <= halfwidth).collect();
        let mut y = Mat::from_fn(nv, idx.len(), |i, j| vecs[(i, idx[j])]);
        dc.solve_lt(&mut y);
        Ok(idx.iter().enumerate().map(|(j, &k)| (vals[k], col(&y, j))).collect())
    } else {
        let f = op.factor()?;
        eigs_window(&f, center, halfwidth, opts)
    }
}

/// Full spectrum of `(A*A, M_V)` (dense only).
pub fn normal_spectrum_dense(op: &WeightedOperator) -> Result<Vec<f64>> {
    let (ahat, _) = op.dense_whitened()?;
    let c = ahat.transpose() * &ahat;
    let n = c.nrows();
    let c = Mat::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    Ok(dense::sym_eigen(&c)?.0)
}

/// Result of a truncated weighted least-squares solve.
#[derive(Clone, Debug)]
pub struct TruncatedSolve {
    pub x: Vec<f64>,
    /// Singular values discarded by the truncation.
    pub dropped: Vec<f64>,
    pub sigma_min_kept: f64,
    pub sigma_max: f64,
}

/// Minimum `M_V`-norm solution of `min ‖A x − b‖_{M_W}` using only singular values `σ ≥ tau`
/// of the star-normalized operator; `b_weak = M_W b`.
///
/// Dense up to [`DENSE_LIMIT`]. Larger systems run CG on the normal equations from zero,
/// preconditioned by the diagonal of `M_V`; the exact kernel never enters, but small nonzero
/// singular values are not truncated and `dropped` stays empty.
pub fn truncated_solve(op: &WeightedOperator, b_weak: &[f64], tau: f64) -> Result<TruncatedSolve> {
    let nv = op.dom_dim();
    let nw = op.cod_dim();
    if b_weak.len() != nw {
        return Err(Error::Dimension(format!("right-hand side has {} entries, expected {nw}", b_weak.len())));
    }
    if nv > DENSE_LIMIT || nw > DENSE_LIMIT {
        return normal_cg_solve(op, b_weak);
    }
    let (ahat, dc) = op.dense_whitened()?;
    let cc = DenseChol::new(&op.cod_mass.to_dense())?;
    // L_Wᵀ b = L_W⁻¹ b_weak
    let mut bh = Mat::from_fn(nw, 1, |i, _| b_weak[i]);
    cc.solve_l(&mut bh);
    let (u, sv, v) = dense::svd(&ahat)?;
    let mut xh = vec![0.0; nv];
    let mut dropped = Vec::new();
    let mut sigma_min_kept = f64::INFINITY;
    for (j, &sj) in sv.iter().enumerate() {
        if sj < tau {
            dropped.push(sj);
            continue;
        }
        sigma_min_kept = sigma_min_kept.min(sj);
        let c: f64 = (0..nw).map(|i| u[(i, j)] * bh[(i, 0)]).sum::<f64>() / sj;
        for (i, xv) in xh.iter_mut().enumerate() {
            *xv += c * v[(i, j)];
        }
    }
    let mut y = Mat::from_fn(nv, 1, |i, _| xh[i]);
    dc.solve_lt(&mut y);
    Ok(TruncatedSolve {
        x: col(&y, 0),
        dropped,
        sigma_min_kept,
        sigma_max: sv.first().copied().unwrap_or(0.0),
    })
}

fn normal_cg_solve(op: &WeightedOperator, b_weak: &[f64]) -> Result<TruncatedSolve> {
    let f = op.factor()?;
    // Aᵀ M_W b in weak domain form
    let b = f.cod.solve(b_weak);
    let mut g = op.w0.matvec_t(&b);
    if let (Some(a), Some(k)) = (&op.aux, &f.k) {
        let p = k.solve(&a.w1.matvec_t(&b));
        dense::axpy(&mut g, 1.0, &a.l.matvec_t(&p));
    }
    let diag: Vec<f64> = (0..op.dom_dim()).map(|i| op.dom_mass.get(i, i)).collect();
    let n = op.dom_dim();
    let (x, _) = crate::dec::cg(&|x: &[f64]| f.normal(x), &diag, &g, NORMAL_CG_TOL, 20 * n)?;
    Ok(TruncatedSolve { x, dropped: vec![], sigma_min_kept: f64::NAN, sigma_max: f64::NAN })
}

/// Relative residual target of the normal-equation fallback in [`truncated_solve`].
const NORMAL_CG_TOL: f64 = 1e-10;
