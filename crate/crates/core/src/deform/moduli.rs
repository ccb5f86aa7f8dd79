//! Kernels of the linearized operators and their predicted dimensions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::block::{assemble_operator, AssembledOperator, OperatorKind};
use crate::dec::{eigen_cluster, harmonic_basis, FormOperators, DEFAULT_HARMONIC_TOL};
use crate::error::{Error, Result};
use crate::linalg::weighted::{kernel, normal_eigs_window};
use crate::linalg::{IterOptions, KernelResult, KernelTol, DENSE_LIMIT};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuliTolerances {
    /// Absolute singular-value threshold for operators whose kernel is an eigenvalue cluster.
    pub cluster_sigma: f64,
    /// Relative cluster window `δ` for eigenvalue predictions.
    pub cluster_window: f64,
    /// Relative singular-value threshold for operators with exact kernels.
    pub exact_rel: f64,
    pub harmonic: f64,
}

impl Default for ModuliTolerances {
    fn default() -> Self {
        ModuliTolerances { cluster_sigma: 0.05, cluster_window: 0.05, exact_rel: 1e-8, harmonic: DEFAULT_HARMONIC_TOL }
    }
}

/// One eigenvalue cluster consulted for the prediction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterInfo {
    pub operator: String,
    pub target: f64,
    pub halfwidth: f64,
    pub eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuliReport {
    pub kind: OperatorKind,
    pub kappa: f64,
    pub kernel_dim: usize,
    pub predicted_dim: usize,
    #[serde(rename = "match")]
    pub matches: bool,
    pub clusters: Vec<ClusterInfo>,
    pub tolerances: BTreeMap<String, f64>,
    pub cokernel_dim: Option<usize>,
    /// How the kernel was counted: `"svd"`, `"eigs"` or `"index"`.
    pub method: String,
    /// A singular value or eigenvalue sits within 10% of a threshold.
    pub ambiguous: bool,
    /// Whether `(1, 0)` (the Reeb field) lies in the kernel.
    pub reeb_in_kernel: Option<bool>,
    /// Smallest singular values found, ascending.
    pub singular_values: Vec<f64>,
    /// Star-orthonormal kernel basis (empty when counted through the index).
    #[serde(skip)]
    pub basis: Vec<Vec<f64>>,
}

/// Above this many expected kernel vectors the iterative route counts through the index.
const ITERATIVE_KERNEL_LIMIT: usize = 64;

fn cluster(ops: &FormOperators, target: f64, tol: &ModuliTolerances, opts: &IterOptions) -> Result<(usize, ClusterInfo, bool)> {
    let hw = tol.cluster_window * target.max(1.0);
    let pairs = eigen_cluster(ops, 0, target, tol.cluster_window, opts)?;
    // eigenvalues just outside the window count as ambiguous
    let wide = normal_eigs_window(&ops.laplacian_operator(0), target, 1.1 * hw, opts)?;
    let ambiguous = wide.iter().any(|(l, _)| (l - target).abs() > 0.9 * hw);
    Ok((
        pairs.len(),
        ClusterInfo {
            operator: "laplacian_0".into(),
            target,
            halfwidth: hw,
            eigenvalues: pairs.iter().map(|p| p.lambda).collect(),
        },
        ambiguous,
    ))
}

/// Predicted kernel dimension and the clusters consulted.
fn predict(
    kind: OperatorKind,
    ops: &FormOperators,
    kappa: f64,
    tol: &ModuliTolerances,
    opts: &IterOptions,
) -> Result<(usize, Vec<ClusterInfo>, bool)> {
    let n = ops.n;
    let nv = ops.dim(0);
    let ne = ops.dim(1);
    let b1 = || -> Result<usize> { Ok(harmonic_basis(ops, 1, tol.harmonic, opts)?.len()) };
    let b0 = || -> Result<usize> { Ok(harmonic_basis(ops, 0, tol.harmonic, opts)?.len()) };
    Ok(match kind {
        OperatorKind::SpecialLegendrian | OperatorKind::MinimalLegendrian => {
            let extra = usize::from(kind == OperatorKind::MinimalLegendrian && kappa != 0.0);
            if kappa < 0.0 {
                (extra, vec![], false)
            } else {
                let (c, info, amb) = cluster(ops, 2.0 * kappa, tol, opts)?;
                (c + extra, vec![info], amb)
            }
        }
        OperatorKind::Transverse => (b1()?, vec![], false),
        OperatorKind::NxComplex => {
            if kappa != 0.0 {
                // closed 1-cochains: N_E − rank d₁
                let rank_d1 = if n >= 2 { ops.dim(2) - b_top(ops) } else { 0 };
                (ne - rank_d1, vec![], false)
            } else {
                (nv + b1()?, vec![], false)
            }
        }
        OperatorKind::LegendrianComplex => (nv, vec![], false),
        OperatorKind::ContactCy => (b0()?, vec![], false),
    })
}

/// `b_n` from the coboundary rank (orientable closed manifold: rank `d_{n−1}` = `N_n − b_n`).
fn b_top(ops: &FormOperators) -> usize {
    // every connected closed orientable component contributes one
    let n = ops.n;
    let d = ops.d(n - 1);
    let mut parent: Vec<usize> = (0..d.nrows).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    let dt = d.transpose();
    for e in 0..dt.nrows {
        let rows: Vec<usize> = dt.row(e).map(|(c, _)| c).collect();
        for w in rows.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent[a] = b;
            }
        }
    }
    (0..d.nrows).filter(|&i| find(&mut parent, i) == i).count()
}

/// Kernel of `D₁` for `kind` at weight `κ`, compared with its predicted characterization.
pub fn moduli_tangent(
    kind: OperatorKind,
    ops: &FormOperators,
    kappa: f64,
    tol: &ModuliTolerances,
    opts: &IterOptions,
) -> Result<ModuliReport> {
    if !(tol.cluster_sigma > 0.0 && tol.exact_rel > 0.0) {
        return Err(Error::Parameter("kernel tolerances must be positive".into()));
    }
    let asm = assemble_operator(kind, ops, kappa)?;
    let (predicted_dim, clusters, mut ambiguous) = predict(kind, ops, kappa, tol, opts)?;
    let d1 = asm.d1_weighted(ops)?;
    let ktol = if kind.is_cluster_kind() {
        KernelTol::Absolute(tol.cluster_sigma)
    } else {
        KernelTol::Relative(tol.exact_rel)
    };
    let dense = d1.dom_dim() <= DENSE_LIMIT;
    let (kres, method, cokernel_dim) = if dense || predicted_dim <= ITERATIVE_KERNEL_LIMIT {
        let k = kernel(&d1, ktol, opts)?;
        let co = if kind == OperatorKind::SpecialLegendrian {
            // self-dual
            Some(k.dim)
        } else if d1.cod_dim() <= DENSE_LIMIT {
            Some(kernel(&d1.adjoint(), KernelTol::Absolute(k.threshold), opts)?.dim)
        } else {
            None
        };
        let m = if k.dense { "svd" } else { "eigs" };
        (k, m.to_string(), co)
    } else {
        // dim Ker = cols − rows + dim Coker
        let adj = d1.adjoint();
        let co = kernel(&adj, ktol, opts)?;
        let dim = (d1.dom_dim() + co.dim)
            .checked_sub(d1.cod_dim())
            .ok_or_else(|| Error::Solver { iterations: 0, message: "negative index count".into() })?;
        (
            KernelResult {
                dim,
                basis: vec![],
                singular_values: co.singular_values.clone(),
                threshold: co.threshold,
                sigma_max: co.sigma_max,
                dense: false,
            },
            "index".to_string(),
            Some(co.dim),
        )
    };
    if kres.singular_values.iter().any(|&s| s > 0.9 * kres.threshold && s < 1.1 * kres.threshold) {
        ambiguous = true;
    }
    let reeb_in_kernel = reeb_check(&asm, ops, &kres)?;
    let mut tolerances = BTreeMap::new();
    tolerances.insert("threshold".to_string(), kres.threshold);
    tolerances.insert("sigma_max".to_string(), kres.sigma_max);
    tolerances.insert("cluster_window".to_string(), tol.cluster_window);
    if kind.is_cluster_kind() {
        tolerances.insert("cluster_sigma".to_string(), tol.cluster_sigma);
    } else {
        tolerances.insert("exact_rel".to_string(), tol.exact_rel);
    }
    Ok(ModuliReport {
        kind,
        kappa,
        kernel_dim: kres.dim,
        predicted_dim,
        matches: kres.dim == predicted_dim,
        clusters,
        tolerances,
        cokernel_dim,
        method,
        ambiguous,
        reeb_in_kernel,
        singular_values: kres.singular_values,
        basis: kres.basis,
    })
}

/// `‖D₁(1, 0)‖ ≤ threshold`, measured with unit-norm input.
fn reeb_check(asm: &AssembledOperator, ops: &FormOperators, k: &KernelResult) -> Result<Option<bool>> {
    if !asm.kind.has_function_part() {
        return Ok(None);
    }
    let nv = ops.dim(0);
    let ne = ops.dim(1);
    let mut x = vec![1.0; nv];
    x.extend(std::iter::repeat(0.0).take(ne));
    let vol: f64 = ops.metric.total_volume;
    x.iter_mut().for_each(|v| *v /= vol.sqrt());
    let y = asm.d1.apply(ops, &x)?;
    let mut o = 0;
    let mut nrm2 = 0.0;
    for &q in &asm.d1.cod {
        let c = ops.dim(q);
        nrm2 += ops.inner(q, &y[o..o + c], &y[o..o + c]);
        o += c;
    }
    Ok(Some(nrm2.sqrt() <= k.threshold))
}
