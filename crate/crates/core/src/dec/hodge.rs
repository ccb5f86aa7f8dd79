//! Hodge decomposition `ω = dα + d*β + h` by conjugate gradients on the normal equations.

use crate::error::{Error, Result};
use crate::linalg::dense::{dot, norm2};
use crate::linalg::IterOptions;

use super::spectra::{harmonic_basis, DEFAULT_HARMONIC_TOL};
use super::FormOperators;

#[derive(Clone, Debug)]
pub struct HodgeParts {
    pub exact: Vec<f64>,
    pub coexact: Vec<f64>,
    pub harmonic: Vec<f64>,
    /// Dimension of the harmonic space used for the projection.
    pub harmonic_dim: usize,
    /// `‖ω − (exact + coexact + harmonic)‖ / ‖ω‖` in the star norm.
    pub reassembly_error: f64,
    /// Largest `|⟨a, b⟩| / (‖a‖‖b‖)` over the three pairs (0 when a part vanishes).
    pub orthogonality: f64,
    pub cg_iterations: [usize; 2],
}

/// Preconditioned CG for a symmetric positive semidefinite system with consistent right-hand side.
pub fn cg(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    diag: &[f64],
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bn = norm2(b);
    if bn == 0.0 {
        return Ok((x, 0));
    }
    let prec = |r: &[f64]| -> Vec<f64> {
        r.iter().zip(diag).map(|(v, d)| if *d > 0.0 { v / d } else { *v }).collect()
    };
    let mut r = b.to_vec();
    let mut z = prec(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = 1.0;
    for it in 0..max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // p lies in the kernel; the consistent system is solved
            return Ok((x, it));
        }
        let a = rz / pap;
        for i in 0..n {
            x[i] += a * p[i];
            r[i] -= a * ap[i];
        }
        res = norm2(&r) / bn;
        if res <= tol {
            return Ok((x, it + 1));
        }
        z = prec(&r);
        let rz2 = dot(&r, &z);
        let beta = rz2 / rz;
        rz = rz2;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver { iterations: max_iter, message: format!("CG stalled at relative residual {res:.3e}") })
}

/// Decomposes a k-cochain into exact, coexact and harmonic parts.
///
/// The exact part solves `d_{k−1}ᵀ M_k d_{k−1} a = d_{k−1}ᵀ M_k ω`; the coexact part is
/// `M_k⁻¹ d_kᵀ c` with `d_k M_k⁻¹ d_kᵀ c = d_k ω`. The harmonic part is the star-projection
/// onto an independently computed harmonic basis.
pub fn hodge_decompose(ops: &FormOperators, k: usize, omega: &[f64], opts: &IterOptions) -> Result<HodgeParts> {
    if k > ops.n {
        return Err(Error::Dimension(format!("degree {k} exceeds the mesh dimension {}", ops.n)));
    }
    if omega.len() != ops.dim(k) {
        return Err(Error::Dimension(format!("cochain has {} values, expected {}", omega.len(), ops.dim(k))));
    }
    let nk = ops.dim(k);
    let tol = 1e-14;
    let mut iters = [0usize; 2];
    let exact = if k > 0 {
        let d = &ops.d[k - 1];
        let m = &ops.star[k];
        let rhs = d.matvec_t(&m.matvec(omega));
        let normal = d.transpose().matmul(&m.matmul(d));
        let diag: Vec<f64> = (0..d.ncols).map(|i| normal.get(i, i)).collect();
        let (a, it) = cg(&|x| normal.matvec(x), &diag, &rhs, tol, 50 * d.ncols + 100)?;
        iters[0] = it;
        d.matvec(&a)
    } else {
        vec![0.0; nk]
    };
    let coexact = if k < ops.n {
        let d = &ops.d[k];
        let rhs = d.matvec(omega);
        let apply = |c: &[f64]| d.matvec(&ops.star_solve(k, &d.matvec_t(c)));
        // diagonal of d M⁻¹ dᵀ approximated with the lumped inverse mass
        let lumped: Vec<f64> = (0..nk).map(|i| 1.0 / ops.star[k].row(i).map(|(_, v)| v).sum::<f64>().abs().max(1e-300)).collect();
        let diag: Vec<f64> = (0..d.nrows).map(|r| d.row(r).map(|(c, v)| v * v * lumped[c]).sum()).collect();
        let (c, it) = cg(&apply, &diag, &rhs, tol, 50 * d.nrows + 100)?;
        iters[1] = it;
        ops.star_solve(k, &d.matvec_t(&c))
    } else {
        vec![0.0; nk]
    };
    let basis = harmonic_basis(ops, k, DEFAULT_HARMONIC_TOL, opts)?;
    let mut harmonic = vec![0.0; nk];
    for h in &basis {
        let c = ops.inner(k, h, omega);
        harmonic.iter_mut().zip(h).for_each(|(x, v)| *x += c * v);
    }
    let resid: Vec<f64> = (0..nk).map(|i| omega[i] - exact[i] - coexact[i] - harmonic[i]).collect();
    let on = ops.norm(k, omega);
    let reassembly_error = if on == 0.0 { ops.norm(k, &resid) } else { ops.norm(k, &resid) / on };
    let parts = [&exact, &coexact, &harmonic];
    let mut orthogonality = 0.0f64;
    for i in 0..3 {
        for j in i + 1..3 {
            let (na, nb) = (ops.norm(k, parts[i]), ops.norm(k, parts[j]));
            if na > 0.0 && nb > 0.0 {
                orthogonality = orthogonality.max(ops.inner(k, parts[i], parts[j]).abs() / (na * nb));
            }
        }
    }
    Ok(HodgeParts {
        exact,
        coexact,
        harmonic,
        harmonic_dim: basis.len(),
        reassembly_error,
        orthogonality,
        cg_iterations: iters,
    })
}
