//! Discrete normal bundles, the identification `v ↦ (η(v), ½ i_v dη)` and the
//! geodesic exponential map on the sphere.

use serde::{Deserialize, Serialize};

use crate::ambient::{j_apply, j_inner, AmbientStructure};
use crate::error::{Error, Result};
use crate::linalg::dense::{dot, norm2, sym_eigen};
use crate::linalg::factor::SparseChol;
use crate::linalg::Csr;
use crate::mesh::{Embedding, SimplicialComplex};
use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Largest admissible geodesic step `‖tv‖` per vertex.
pub const MAX_NORMAL_STEP: f64 = 0.5;

/// Rejects a frame candidate whose residual after orthogonalization falls below this.
const FRAME_MIN_RESIDUAL: f64 = 0.1;

/// Orthonormal bases of the discrete normal spaces `T_xS ∩ (T_xX)^⊥`, `n + 1` vectors per vertex.
///
/// The tangent space at a vertex is the principal `n`-plane of the neighbour differences
/// projected to `T_xS`. The first normal vector is the normalized `Jx` and the rest follow
/// from `J` applied to the tangent basis.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalFrames {
    pub n: usize,
    pub ambient_dim: usize,
    pub tangent: Vec<Vec<Vec<f64>>>,
    pub normal: Vec<Vec<Vec<f64>>>,
}

fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(v, b);
        v.iter_mut().zip(b).for_each(|(a, bb)| *a -= c * bb);
    }
}

impl NormalFrames {
    pub fn compute(mesh: &SimplicialComplex, emb: &Embedding) -> Result<Self> {
        emb.check_compatible(mesh)?;
        let n = mesh.dim();
        let m = emb.ambient_dim();
        let nb = mesh.vertex_neighbors();
        let mut tangent = Vec::with_capacity(mesh.n_vertices());
        let mut normal = Vec::with_capacity(mesh.n_vertices());
        for (i, nbrs) in nb.iter().enumerate() {
            let x = emb.point(i);
            let xs = vec![x.to_vec()];
            let mut cov = Mat::<f64>::zeros(m, m);
            for &j in nbrs {
                let mut d: Vec<f64> = emb.point(j).iter().zip(x).map(|(a, b)| a - b).collect();
                project_out(&mut d, &xs);
                let l2 = dot(&d, &d);
                for a in 0..m {
                    for b in 0..m {
                        cov[(a, b)] += d[a] * d[b] / l2;
                    }
                }
            }
            let (vals, vecs) = sym_eigen(&cov)?;
            // ascending eigenvalues: the tangent plane is spanned by the top n
            let top = vals[m - 1];
            if !(vals[m - n] > 1e-8 * top) {
                return Err(Error::Frame { vertex: i });
            }
            let t: Vec<Vec<f64>> = (m - n..m).rev().map(|c| (0..m).map(|r| vecs[(r, c)]).collect()).collect();
            let mut fixed = xs.clone();
            fixed.extend(t.iter().cloned());
            let mut cands = vec![j_apply(x)];
            cands.extend(t.iter().map(|v| j_apply(v)));
            cands.extend((0..m).map(|k| {
                let mut e = vec![0.0; m];
                e[k] = 1.0;
                e
            }));
            let mut nu: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
            for c in cands {
                if nu.len() == n + 1 {
                    break;
                }
                let mut v = c;
                let n0 = norm2(&v);
                project_out(&mut v, &fixed);
                project_out(&mut v, &nu);
                // second pass for orthogonality to round-off
                project_out(&mut v, &fixed);
                project_out(&mut v, &nu);
                let r = norm2(&v);
                if r > FRAME_MIN_RESIDUAL * n0 {
                    v.iter_mut().for_each(|a| *a /= r);
                    nu.push(v);
                }
            }
            if nu.len() != n + 1 {
                return Err(Error::Frame { vertex: i });
            }
            tangent.push(t);
            normal.push(nu);
        }
        Ok(NormalFrames { n, ambient_dim: m, tangent, normal })
    }

    pub fn n_vertices(&self) -> usize {
        self.normal.len()
    }

    /// Number of normal coordinates, `(n + 1)·N_V`.
    pub fn n_coords(&self) -> usize {
        self.normal.len() * (self.n + 1)
    }

    /// Sparse map from normal coordinates to flattened ambient vertex vectors.
    pub fn coords_to_ambient(&self) -> Csr {
        let m = self.ambient_dim;
        let k = self.n + 1;
        let mut t = Vec::with_capacity(self.normal.len() * k * m);
        for (i, frame) in self.normal.iter().enumerate() {
            for (a, nu) in frame.iter().enumerate() {
                for (r, &v) in nu.iter().enumerate() {
                    t.push((i * m + r, i * k + a, v));
                }
            }
        }
        Csr::from_triplets(self.normal.len() * m, self.n_coords(), &t)
    }

    /// Largest component of `v_i` along `x_i` or the discrete tangent space, relative to `‖v‖_∞`.
    pub fn tangential_defect(&self, emb: &Embedding, v: &NormalField) -> f64 {
        let scale = v.max_norm().max(1e-300);
        let mut worst = 0.0f64;
        for (i, vi) in v.vectors.iter().enumerate() {
            worst = worst.max(dot(vi, emb.point(i)).abs());
            for t in &self.tangent[i] {
                worst = worst.max(dot(vi, t).abs());
            }
        }
        worst / scale
    }
}

/// Per-vertex ambient vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalField {
    pub vectors: Vec<Vec<f64>>,
}

impl NormalField {
    pub fn zeros(n_vertices: usize, ambient_dim: usize) -> Self {
        NormalField { vectors: vec![vec![0.0; ambient_dim]; n_vertices] }
    }

    pub fn from_coords(frames: &NormalFrames, c: &[f64]) -> Self {
        let k = frames.n + 1;
        NormalField {
            vectors: frames
                .normal
                .iter()
                .enumerate()
                .map(|(i, fr)| {
                    let mut v = vec![0.0; frames.ambient_dim];
                    for (a, nu) in fr.iter().enumerate() {
                        v.iter_mut().zip(nu).for_each(|(x, y)| *x += c[i * k + a] * y);
                    }
                    v
                })
                .collect(),
        }
    }

    /// Independent Gaussian normal coordinates at every vertex, scaled to maximum norm `amplitude`.
    pub fn random(frames: &NormalFrames, seed: u64, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..frames.n_coords()).map(|_| StandardNormal.sample(&mut rng)).collect();
        Self::from_coords(frames, &c).normalized(amplitude)
    }

    /// Normal projection of a seeded random linear field `x ↦ Ax`, scaled to maximum norm
    /// `amplitude`. Resolution independent, unlike [`NormalField::random`].
    pub fn smooth_random(frames: &NormalFrames, emb: &Embedding, seed: u64, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = frames.ambient_dim;
        let a: Vec<f64> = (0..m * m).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut c = Vec::with_capacity(frames.n_coords());
        for (i, fr) in frames.normal.iter().enumerate() {
            let x = emb.point(i);
            let ax: Vec<f64> = (0..m).map(|r| dot(&a[r * m..(r + 1) * m], x)).collect();
            c.extend(fr.iter().map(|nu| dot(&ax, nu)));
        }
        Self::from_coords(frames, &c).normalized(amplitude)
    }

    fn normalized(self, amplitude: f64) -> Self {
        let mx = self.max_norm();
        if mx > 0.0 {
            self.scaled(amplitude / mx)
        } else {
            self
        }
    }

    /// Orthogonal projection onto the frames, as coordinates.
    pub fn coords(&self, frames: &NormalFrames) -> Vec<f64> {
        let mut c = Vec::with_capacity(frames.n_coords());
        for (v, fr) in self.vectors.iter().zip(&frames.normal) {
            for nu in fr {
                c.push(dot(v, nu));
            }
        }
        c
    }

    pub fn flat(&self) -> Vec<f64> {
        self.vectors.iter().flatten().copied().collect()
    }

    pub fn max_norm(&self) -> f64 {
        self.vectors.iter().map(|v| norm2(v)).fold(0.0, f64::max)
    }

    pub fn scaled(&self, a: f64) -> Self {
        NormalField { vectors: self.vectors.iter().map(|v| v.iter().map(|x| x * a).collect()).collect() }
    }

    /// Reeb field `ξ = Jx/s` at every vertex.
    pub fn reeb(emb: &Embedding, s: &AmbientStructure) -> Self {
        NormalField {
            vectors: (0..emb.n_vertices())
                .map(|i| j_apply(emb.point(i)).into_iter().map(|v| v / s.scale).collect())
                .collect(),
        }
    }

    /// `max_i ‖v_i − w_i‖`.
    pub fn max_distance(&self, other: &NormalField) -> f64 {
        self.vectors
            .iter()
            .zip(&other.vectors)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// `(f, α)`: a 0-cochain and a 1-cochain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalCochains {
    pub f: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl NormalCochains {
    pub fn concat(&self) -> Vec<f64> {
        let mut v = self.f.clone();
        v.extend_from_slice(&self.alpha);
        v
    }
}

/// `f_i = η(v_i) = s⟨Jx_i, v_i⟩` and `α_e = ∫_e ½ i_v dη`, the latter by two-point Gauss
/// quadrature with `v` linear along the chord, which equals `s⟨J(v_a + v_b)/2, x_b − x_a⟩`.
pub fn normal_identification(
    mesh: &SimplicialComplex,
    emb: &Embedding,
    s: &AmbientStructure,
    v: &NormalField,
) -> Result<NormalCochains> {
    emb.check_compatible(mesh)?;
    if v.vectors.len() != mesh.n_vertices() || v.vectors.iter().any(|x| x.len() != emb.ambient_dim()) {
        return Err(Error::Dimension("normal field does not match the embedding".into()));
    }
    let f = (0..mesh.n_vertices()).map(|i| s.scale * j_inner(emb.point(i), &v.vectors[i])).collect();
    let g = 0.5 / 3f64.sqrt();
    let alpha = mesh
        .simplices(1)
        .iter()
        .map(|e| {
            let (a, b) = (e[0], e[1]);
            let edge: Vec<f64> = emb.point(b).iter().zip(emb.point(a)).map(|(p, q)| p - q).collect();
            let mut acc = 0.0;
            for w in [0.5 - g, 0.5 + g] {
                let vw: Vec<f64> = v.vectors[a].iter().zip(&v.vectors[b]).map(|(p, q)| (1.0 - w) * p + w * q).collect();
                acc += 0.5 * s.scale * j_inner(&vw, &edge);
            }
            acc
        })
        .collect();
    Ok(NormalCochains { f, alpha })
}

/// Matrix of the identification on normal coordinates; rows are `f` then `α`.
pub fn identification_matrix(
    mesh: &SimplicialComplex,
    emb: &Embedding,
    s: &AmbientStructure,
    frames: &NormalFrames,
) -> Csr {
    let k = frames.n + 1;
    let nv = mesh.n_vertices();
    let mut t = Vec::new();
    for i in 0..nv {
        for (a, nu) in frames.normal[i].iter().enumerate() {
            t.push((i, i * k + a, s.scale * j_inner(emb.point(i), nu)));
        }
    }
    for (e, ed) in mesh.simplices(1).iter().enumerate() {
        let edge: Vec<f64> = emb.point(ed[1]).iter().zip(emb.point(ed[0])).map(|(p, q)| p - q).collect();
        for &i in ed {
            for (a, nu) in frames.normal[i].iter().enumerate() {
                t.push((nv + e, i * k + a, 0.5 * s.scale * j_inner(nu, &edge)));
            }
        }
    }
    Csr::from_triplets(nv + mesh.n_simplices(1), frames.n_coords(), &t)
}

/// Weight of the lumped `L²` norm of `v` added to the identification norm.
pub const IDENTIFICATION_REGULARIZATION: f64 = 1e-6;

/// Gram matrix of the star norm of the identified `(f, α)` on the selected normal coordinates,
/// plus [`IDENTIFICATION_REGULARIZATION`] times the lumped `L²` norm of `v`.
///
/// Averaging `v` along edges annihilates the alternating field on an even circle, so the
/// identification norm alone is only semi-definite.
pub fn identification_norm(
    mesh: &SimplicialComplex,
    emb: &Embedding,
    s: &AmbientStructure,
    frames: &NormalFrames,
    masses: (&Csr, &Csr),
    sel: &Csr,
) -> Csr {
    let b = identification_matrix(mesh, emb, s, frames).matmul(sel);
    let lumped = masses.0.matvec(&vec![1.0; masses.0.nrows]);
    let k = frames.n + 1;
    let w = IDENTIFICATION_REGULARIZATION * s.scale * s.scale;
    let diag: Vec<(usize, usize, f64)> = (0..frames.n_coords()).map(|c| (c, c, w * lumped[c / k])).collect();
    let reg = sel.transpose().matmul(&Csr::from_triplets(frames.n_coords(), frames.n_coords(), &diag)).matmul(sel);
    b.transpose().matmul(&Csr::block_diag(&[masses.0, masses.1])).matmul(&b).add(&reg, 1.0, 1.0)
}

/// Inverts the identification by weighted least squares on the normal coordinates:
/// minimizes `‖f(v) − f‖²_{M₀} + ‖α(v) − α‖²_{M₁}` over all vertex normal fields at once.
/// With `transverse`, only the frame vectors orthogonal to `Jx` are used, so `η(v) = 0`.
pub fn inverse_identification(
    mesh: &SimplicialComplex,
    emb: &Embedding,
    s: &AmbientStructure,
    frames: &NormalFrames,
    masses: (&Csr, &Csr),
    target: &NormalCochains,
    transverse: bool,
) -> Result<NormalField> {
    let nv = mesh.n_vertices();
    let ne = mesh.n_simplices(1);
    if target.f.len() != nv || target.alpha.len() != ne {
        return Err(Error::Dimension("cochains do not match the mesh".into()));
    }
    let sel = if transverse { coord_selector(frames, 1) } else { Csr::identity(frames.n_coords()) };
    let b = identification_matrix(mesh, emb, s, frames).matmul(&sel);
    let w = Csr::block_diag(&[masses.0, masses.1]);
    let bt = b.transpose();
    let normal = identification_norm(mesh, emb, s, frames, masses, &sel);
    let per = sel.ncols / nv;
    let chol = SparseChol::new(&normal).map_err(|_| {
        let worst = (0..nv)
            .min_by(|&p, &q| {
                let dp = (0..per).map(|a| normal.get(p * per + a, p * per + a).abs()).fold(f64::INFINITY, f64::min);
                let dq = (0..per).map(|a| normal.get(q * per + a, q * per + a).abs()).fold(f64::INFINITY, f64::min);
                dp.total_cmp(&dq)
            })
            .unwrap_or(0);
        Error::Frame { vertex: worst }
    })?;
    let rhs = bt.matvec(&w.matvec(&target.concat()));
    let c = chol.solve(&rhs);
    let full = sel.matvec(&c);
    Ok(NormalField::from_coords(frames, &full))
}

/// Selects frame coordinates `first..=n` at every vertex (columns of the reduced space).
pub fn coord_selector(frames: &NormalFrames, first: usize) -> Csr {
    let k = frames.n + 1;
    let per = k - first;
    let mut t = Vec::with_capacity(frames.n_vertices() * per);
    for i in 0..frames.n_vertices() {
        for a in first..k {
            t.push((i * k + a, i * per + (a - first), 1.0));
        }
    }
    Csr::from_triplets(frames.n_coords(), frames.n_vertices() * per, &t)
}

/// Moves every vertex along the great circle `x ↦ cos(t‖v‖)x + sin(t‖v‖)v/‖v‖`.
///
/// Components of `v` along `x` are projected out (with a warning). Steps longer than
/// [`MAX_NORMAL_STEP`] are rejected.
pub fn exp_deform(mesh: &SimplicialComplex, emb: &Embedding, v: &NormalField, t: f64) -> Result<Embedding> {
    emb.check_compatible(mesh)?;
    if v.vectors.len() != emb.n_vertices() || v.vectors.iter().any(|x| x.len() != emb.ambient_dim()) {
        return Err(Error::Dimension("normal field does not match the embedding".into()));
    }
    if !t.is_finite() {
        return Err(Error::Parameter(format!("step must be finite, got {t}")));
    }
    let mut warned = false;
    let mut pts = Vec::with_capacity(emb.n_vertices());
    for (i, vi) in v.vectors.iter().enumerate() {
        let x = emb.point(i);
        let mut w: Vec<f64> = vi.iter().map(|a| a * t).collect();
        let radial = dot(&w, x);
        let wn = norm2(&w);
        if radial.abs() > 1e-10 * wn.max(1.0) && !warned {
            log::warn!("normal field has a radial component at vertex {i}; projecting to the sphere");
            warned = true;
        }
        w.iter_mut().zip(x).for_each(|(a, b)| *a -= radial * b);
        let th = norm2(&w);
        if th > MAX_NORMAL_STEP {
            return Err(Error::StepSize(format!(
                "geodesic step {th:.3e} at vertex {i} exceeds the bound {MAX_NORMAL_STEP}"
            )));
        }
        let mut y: Vec<f64> = if th == 0.0 {
            x.to_vec()
        } else {
            x.iter().zip(&w).map(|(a, b)| th.cos() * a + th.sin() * b / th).collect()
        };
        let r = norm2(&y);
        y.iter_mut().for_each(|a| *a /= r);
        pts.push(y);
    }
    Embedding::new(emb.ambient_dim(), pts, emb.sphere_tol())
}
