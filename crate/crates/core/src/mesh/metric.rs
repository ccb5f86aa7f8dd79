//! Induced (chord) metric data: per-simplex Gram matrices and volumes.

use crate::error::{Error, Result};
use crate::mesh::{Embedding, SimplicialComplex};

/// Relative determinant threshold below which a simplex counts as degenerate.
const DEGENERATE_REL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct MetricData {
    pub dim: usize,
    /// Row-major `n × n` Gram matrix of the edge vectors `x_i − x_0` of each top simplex.
    pub gram: Vec<Vec<f64>>,
    /// `volumes[k][s]`: measure of the k-simplex `s` (vertices have measure 1).
    pub volumes: Vec<Vec<f64>>,
    pub total_volume: f64,
}

fn det(g: &[f64], n: usize) -> f64 {
    match n {
        1 => g[0],
        2 => g[0] * g[3] - g[1] * g[2],
        _ => unreachable!("dimension at most 2"),
    }
}

impl MetricData {
    /// Metric induced on chord simplices by the embedding.
    pub fn induced(mesh: &SimplicialComplex, emb: &Embedding) -> Result<Self> {
        emb.check_compatible(mesh)?;
        let n = mesh.dim();
        let grams = mesh
            .simplices(n)
            .iter()
            .map(|s| {
                let x0 = emb.point(s[0]);
                let e: Vec<Vec<f64>> = (1..=n)
                    .map(|i| emb.point(s[i]).iter().zip(x0).map(|(a, b)| a - b).collect())
                    .collect();
                let mut g = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        g[i * n + j] = e[i].iter().zip(&e[j]).map(|(a, b)| a * b).sum();
                    }
                }
                g
            })
            .collect();
        Self::from_top_grams(mesh, grams)
    }

    /// Builds metric data from per-top-simplex Gram matrices. Edge lengths are read from the
    /// Gram matrix of the first incident top simplex.
    pub fn from_top_grams(mesh: &SimplicialComplex, gram: Vec<Vec<f64>>) -> Result<Self> {
        let n = mesh.dim();
        if gram.len() != mesh.n_simplices(n) || gram.iter().any(|g| g.len() != n * n) {
            return Err(Error::Dimension("Gram table does not match the top simplices".into()));
        }
        let mut top = Vec::with_capacity(gram.len());
        for (t, g) in gram.iter().enumerate() {
            let tr: f64 = (0..n).map(|i| g[i * n + i]).sum::<f64>() / n as f64;
            let d = det(g, n);
            let sym = n == 1 || (g[1] - g[2]).abs() <= 1e-12 * tr.abs();
            if !(d.is_finite() && tr > 0.0 && d > DEGENERATE_REL * tr.powi(n as i32) && sym) {
                return Err(Error::SingularMetric { degree: n, simplex: t });
            }
            let fact = if n == 2 { 2.0 } else { 1.0 };
            top.push(d.sqrt() / fact);
        }
        let mut volumes = vec![vec![1.0; mesh.n_vertices()]];
        if n == 2 {
            let mut len = vec![f64::NAN; mesh.n_simplices(1)];
            for (t, s) in mesh.simplices(2).iter().enumerate() {
                let g = &gram[t];
                // squared distance between local vertices a, b (local 0 is the origin)
                let sq = |a: usize, b: usize| {
                    let gi = |i: usize, j: usize| if i == 0 || j == 0 { 0.0 } else { g[(i - 1) * 2 + (j - 1)] };
                    gi(a, a) + gi(b, b) - 2.0 * gi(a, b)
                };
                for (a, b) in [(0, 1), (1, 2), (0, 2)] {
                    let (e, _) = mesh.find(&[s[a], s[b]]).expect("edge of a triangle");
                    if len[e].is_nan() {
                        len[e] = sq(a, b).max(0.0).sqrt();
                    }
                }
            }
            for (e, l) in len.iter().enumerate() {
                if !(*l > 0.0) {
                    return Err(Error::SingularMetric { degree: 1, simplex: e });
                }
            }
            volumes.push(len);
        }
        let total_volume = top.iter().sum();
        volumes.push(top);
        Ok(MetricData { dim: n, gram, volumes, total_volume })
    }

    /// Metric scaled by `a` (`g ↦ a g`): k-volumes scale by `a^{k/2}`.
    pub fn scaled(&self, a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Parameter(format!("metric scale must be positive, got {a}")));
        }
        let gram = self.gram.iter().map(|g| g.iter().map(|v| v * a).collect()).collect();
        let volumes: Vec<Vec<f64>> = self
            .volumes
            .iter()
            .enumerate()
            .map(|(k, vs)| vs.iter().map(|v| v * a.powf(k as f64 / 2.0)).collect())
            .collect();
        Ok(MetricData {
            dim: self.dim,
            gram,
            total_volume: volumes[self.dim].iter().sum(),
            volumes,
        })
    }

    /// Inverse Gram matrix of top simplex `t` (row-major).
    pub fn inverse_gram(&self, t: usize) -> Vec<f64> {
        let g = &self.gram[t];
        match self.dim {
            1 => vec![1.0 / g[0]],
            _ => {
                let d = det(g, 2);
                vec![g[3] / d, -g[1] / d, -g[2] / d, g[0] / d]
            }
        }
    }

    /// Largest edge length.
    pub fn mesh_size(&self) -> f64 {
        self.volumes[1].iter().copied().fold(0.0, f64::max)
    }
}

/// Synthetic flat metric of the unit square torus `ℝ²/ℤ²` on the grid triangulation of
/// [`crate::mesh::builtin::torus_complex`].
pub fn flat_unit_torus(mesh: &SimplicialComplex, n1: usize, n2: usize) -> Result<MetricData> {
    if mesh.dim() != 2 || mesh.n_vertices() != n1 * n2 {
        return Err(Error::Dimension("mesh is not an n1 x n2 grid torus".into()));
    }
    let (a, b) = (1.0 / n1 as f64, 1.0 / n2 as f64);
    let coord = |v: usize| ((v % n1) as f64 * a, (v / n1) as f64 * b);
    // unwrap periodic differences to the nearest representative
    let wrap = |d: f64, p: f64| d - (d / p).round() * p;
    let grams = mesh
        .simplices(2)
        .iter()
        .map(|s| {
            let p0 = coord(s[0]);
            let e: Vec<(f64, f64)> = s[1..]
                .iter()
                .map(|&v| {
                    let p = coord(v);
                    (wrap(p.0 - p0.0, 1.0), wrap(p.1 - p0.1, 1.0))
                })
                .collect();
            vec![
                e[0].0 * e[0].0 + e[0].1 * e[0].1,
                e[0].0 * e[1].0 + e[0].1 * e[1].1,
                e[1].0 * e[0].0 + e[1].1 * e[0].1,
                e[1].0 * e[1].0 + e[1].1 * e[1].1,
            ]
        })
        .collect();
    MetricData::from_top_grams(mesh, grams)
}
