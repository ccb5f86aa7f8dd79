//! Galerkin mass matrices of Whitney forms on chord simplices.

use rayon::prelude::*;

use crate::linalg::Csr;
use crate::mesh::{MetricData, SimplicialComplex};

/// Inner products `∇λ_a · ∇λ_b` of barycentric gradients on top simplex `t`, row-major
/// `(n+1) × (n+1)`.
pub fn barycentric_gradients(metric: &MetricData, t: usize) -> Vec<f64> {
    let n = metric.dim;
    let gi = metric.inverse_gram(t);
    let m = n + 1;
    let mut g = vec![0.0; m * m];
    for a in 1..m {
        for b in 1..m {
            g[a * m + b] = gi[(a - 1) * n + (b - 1)];
        }
    }
    // λ₀ = 1 − Σ λ_a
    for a in 1..m {
        let s: f64 = (1..m).map(|b| g[a * m + b]).sum();
        g[a * m] = -s;
        g[a] = -s;
    }
    g[0] = -(1..m).map(|a| g[a * m]).sum::<f64>();
    g
}

/// `∫_T λ_a λ_b` for a top simplex of the given volume.
fn lambda_product(n: usize, vol: f64, a: usize, b: usize) -> f64 {
    let base = vol / ((n + 1) * (n + 2)) as f64;
    if a == b {
        2.0 * base
    } else {
        base
    }
}

/// Mass matrix of Whitney k-forms (`k = 0..=n`).
pub fn mass_matrix(mesh: &SimplicialComplex, metric: &MetricData, k: usize) -> Csr {
    let n = mesh.dim();
    let nk = mesh.n_simplices(k);
    if k == n && n == 2 {
        let d: Vec<f64> = metric.volumes[2].iter().map(|v| 1.0 / v).collect();
        return Csr::diag(&d);
    }
    let tops = mesh.simplices(n);
    let local: Vec<Vec<(usize, usize, f64)>> = (0..tops.len())
        .into_par_iter()
        .map(|t| {
            let s = &tops[t];
            let vol = metric.volumes[n][t];
            let mut out = Vec::new();
            if k == 0 {
                for a in 0..=n {
                    for b in 0..=n {
                        out.push((s[a], s[b], lambda_product(n, vol, a, b)));
                    }
                }
                return out;
            }
            // k = 1: local edges (i, j) with i < j, Whitney form λ_i∇λ_j − λ_j∇λ_i
            let g = barycentric_gradients(metric, t);
            let m = n + 1;
            let mut edges = Vec::new();
            for i in 0..m {
                for j in i + 1..m {
                    let (e, sign) = mesh.find(&[s[i], s[j]]).expect("edge of a top simplex");
                    edges.push((i, j, e, sign as f64));
                }
            }
            for &(i, j, e1, s1) in &edges {
                for &(p, q, e2, s2) in &edges {
                    let ip = |a: usize, b: usize| lambda_product(n, vol, a, b);
                    let v = ip(i, p) * g[j * m + q] - ip(i, q) * g[j * m + p] - ip(j, p) * g[i * m + q]
                        + ip(j, q) * g[i * m + p];
                    out.push((e1, e2, s1 * s2 * v));
                }
            }
            out
        })
        .collect();
    let trip: Vec<(usize, usize, f64)> = local.into_iter().flatten().collect();
    Csr::from_triplets(nk, nk, &trip)
}
