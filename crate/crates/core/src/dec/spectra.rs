//! Eigenvalue clusters, harmonic forms and kernels.

use crate::error::{Error, Result};
use crate::linalg::weighted::{kernel, normal_eigs_window};
use crate::linalg::{IterOptions, KernelResult, KernelTol, WeightedOperator};

use super::FormOperators;

/// Default relative cluster window.
pub const DEFAULT_WINDOW: f64 = 0.05;
/// Default absolute eigenvalue threshold for harmonic forms.
pub const DEFAULT_HARMONIC_TOL: f64 = 1e-6;

/// One generalized eigenpair of `(Δ_k, star_k)`.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub lambda: f64,
    pub vector: Vec<f64>,
}

/// All eigenpairs of `(Δ_k, star_k)` with `|λ − λ*| ≤ δ · max(λ*, 1)`, sorted ascending,
/// star-orthonormal.
pub fn eigen_cluster(
    ops: &FormOperators,
    k: usize,
    target: f64,
    delta: f64,
    opts: &IterOptions,
) -> Result<Vec<EigenPair>> {
    if !(target >= 0.0) {
        return Err(Error::Parameter(format!("cluster target must be non-negative, got {target}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("cluster window must lie in (0, 1), got {delta}")));
    }
    check_degree(ops, k)?;
    let hw = delta * target.max(1.0);
    let pairs = normal_eigs_window(&ops.laplacian_operator(k), target, hw, opts)?;
    Ok(pairs.into_iter().map(|(lambda, vector)| EigenPair { lambda, vector }).collect())
}

/// Star-orthonormal basis of discrete harmonic k-forms (eigenvalues below `tol`).
pub fn harmonic_basis(ops: &FormOperators, k: usize, tol: f64, opts: &IterOptions) -> Result<Vec<Vec<f64>>> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("harmonic tolerance must be positive, got {tol}")));
    }
    check_degree(ops, k)?;
    let pairs = normal_eigs_window(&ops.laplacian_operator(k), 0.0, tol, opts)?;
    Ok(pairs.into_iter().filter(|(l, _)| *l < tol).map(|(_, v)| v).collect())
}

/// Kernel of a star-weighted operator: singular values at most `tol · σ_max`.
pub fn kernel_dim(op: &WeightedOperator, tol: f64, opts: &IterOptions) -> Result<KernelResult> {
    kernel(op, KernelTol::Relative(tol), opts)
}

fn check_degree(ops: &FormOperators, k: usize) -> Result<()> {
    if k > ops.n {
        return Err(Error::Dimension(format!("degree {k} exceeds the mesh dimension {}", ops.n)));
    }
    Ok(())
}
