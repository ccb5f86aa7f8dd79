//! The discrete deformation map `F` on vertex positions and its exact Jacobian.
//!
//! Components, as strong cochains:
//! - `Psi`: the 0-form `*ι*ψ^Im`, i.e. `M₀⁻¹w` with `w_i = ∫ λ_i ι*ψ̃^Im`;
//! - `Eta`: edge integrals of `η̃`;
//! - `Omega`: the 0-form `*ι*ω̃`, i.e. `M₀⁻¹Pω` with `(Pω)_i = Σ_{T∋i} ω_T/3` the pairing of the
//!   triangle integrals with the hat functions (surfaces only);
//! - `DPsi`: `d` of the `Psi` component.
//!
//! The mass matrices depend on the vertex positions and their derivative is part of the
//! Jacobian, so `F(x + tu) − F(x) − tJu = O(t²)` holds exactly for the discrete map.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::block::OperatorKind;
use super::phase::ambient_gradients;
use crate::ambient::{j_apply, j_inner, omega0, AmbientStructure};
use crate::dec::whitney::mass_matrix;
use crate::error::{Error, Result};
use crate::linalg::factor::SparseChol;
use crate::linalg::weighted::Aux;
use crate::linalg::{Csr, WeightedOperator};
use crate::mesh::{Embedding, MetricData, SimplicialComplex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Psi,
    Eta,
    Omega,
    DPsi,
}

impl Component {
    pub fn degree(&self) -> usize {
        match self {
            Component::Psi => 0,
            Component::Eta | Component::DPsi => 1,
            Component::Omega => 2,
        }
    }
}

/// Components of `F` whose linearization is the `D₁` of `kind`, in the same row order.
pub fn components(kind: OperatorKind, n: usize) -> Vec<Component> {
    use Component::*;
    let c = match kind {
        OperatorKind::SpecialLegendrian => vec![Psi, Eta],
        OperatorKind::NxComplex | OperatorKind::Transverse => vec![Psi, Omega],
        OperatorKind::LegendrianComplex => vec![Eta, Omega],
        OperatorKind::ContactCy => vec![Psi, Eta, Omega],
        OperatorKind::MinimalLegendrian => vec![DPsi, Eta],
    };
    c.into_iter().filter(|x| x.degree() <= n).collect()
}

/// `∫_ref λ_i λ_j` over the reference simplex of volume `1/n!`.
fn ref_lambda(n: usize, i: usize, j: usize) -> f64 {
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let base = 1.0 / (((n + 1) * (n + 2)) as f64 * fact);
    if i == j {
        2.0 * base
    } else {
        base
    }
}

/// `F` at one configuration with the star masses used to measure it.
#[derive(Clone, Debug)]
pub struct MapValue {
    pub comps: Vec<Component>,
    pub values: Vec<Vec<f64>>,
    pub masses: Vec<Csr>,
}

impl MapValue {
    pub fn component(&self, c: Component) -> Option<&[f64]> {
        self.comps.iter().position(|&x| x == c).map(|i| self.values[i].as_slice())
    }

    pub fn concat(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    /// Weak form `M F`.
    pub fn weak(&self) -> Vec<f64> {
        self.values.iter().zip(&self.masses).flat_map(|(v, m)| m.matvec(v)).collect()
    }

    /// Star norm of each component.
    pub fn norms(&self) -> Vec<f64> {
        self.values.iter().zip(&self.masses).map(|(v, m)| star_norm(m, v)).collect()
    }

    /// `(Σ ‖F_c‖²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        self.norms().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Combined star norm of `a` measured with these masses.
    pub fn norm_of(&self, a: &[Vec<f64>]) -> f64 {
        a.iter().zip(&self.masses).map(|(v, m)| star_norm(m, v).powi(2)).sum::<f64>().sqrt()
    }
}

pub fn star_norm(m: &Csr, v: &[f64]) -> f64 {
    v.iter().zip(m.matvec(v)).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
}

struct Geometry {
    metric: MetricData,
    m0: Csr,
    m0_chol: SparseChol,
}

fn geometry(mesh: &SimplicialComplex, emb: &Embedding) -> Result<Geometry> {
    let metric = MetricData::induced(mesh, emb)?;
    let m0 = mass_matrix(mesh, &metric, 0);
    let m0_chol = SparseChol::new(&m0)?;
    Ok(Geometry { metric, m0, m0_chol })
}

/// `w_i = Σ_T Im(s^{n/2}e^{iθ} Ω₀(m_i^T, e₁, …, e_n))` with `m_i^T = Σ_j ∫λ_iλ_j x_j`.
fn psi_weak(mesh: &SimplicialComplex, emb: &Embedding, s: &AmbientStructure) -> Vec<f64> {
    let n = mesh.dim();
    let fac = s.psi_factor();
    let mut w = vec![0.0; mesh.n_vertices()];
    for sim in mesh.simplices(n) {
        let x0 = emb.point(sim[0]);
        let e: Vec<Vec<f64>> = sim[1..].iter().map(|&v| emb.point(v).iter().zip(x0).map(|(a, b)| a - b).collect()).collect();
        for (i, &vi) in sim.iter().enumerate() {
            let mut m = vec![0.0; emb.ambient_dim()];
            for (j, &vj) in sim.iter().enumerate() {
                let c = ref_lambda(n, i, j);
                m.iter_mut().zip(emb.point(vj)).for_each(|(a, b)| *a += c * b);
            }
            let mut cols: Vec<&[f64]> = vec![&m];
            cols.extend(e.iter().map(|v| v.as_slice()));
            w[vi] += (fac * omega0(&cols)).im;
        }
    }
    w
}

fn eta_values(mesh: &SimplicialComplex, emb: &Embedding, s: &AmbientStructure) -> Vec<f64> {
    mesh.simplices(1).iter().map(|e| s.scale * j_inner(emb.point(e[0]), emb.point(e[1]))).collect()
}

fn omega_values(mesh: &SimplicialComplex, emb: &Embedding, s: &AmbientStructure) -> Vec<f64> {
    mesh.simplices(2)
        .iter()
        .map(|t| {
            let x0 = emb.point(t[0]);
            let e1: Vec<f64> = emb.point(t[1]).iter().zip(x0).map(|(a, b)| a - b).collect();
            let e2: Vec<f64> = emb.point(t[2]).iter().zip(x0).map(|(a, b)| a - b).collect();
            0.5 * s.scale * j_inner(&e1, &e2)
        })
        .collect()
}

/// Pairing of the triangle integrals of `ω̃` with the hat functions.
fn omega_weak(mesh: &SimplicialComplex, emb: &Embedding, s: &AmbientStructure) -> Vec<f64> {
    hat_pairing(mesh).matvec(&omega_values(mesh, emb, s))
}

/// `P` with `(Pω)_i = Σ_{T∋i} ω_T/3`.
pub fn hat_pairing(mesh: &SimplicialComplex) -> Csr {
    let t: Vec<(usize, usize, f64)> = mesh
        .simplices(2)
        .iter()
        .enumerate()
        .flat_map(|(k, tri)| tri.iter().map(move |&v| (v, k, 1.0 / 3.0)))
        .collect();
    Csr::from_triplets(mesh.n_vertices(), mesh.n_simplices(2), &t)
}

/// `−(∂M₀)F` as a matrix on the flattened vertex coordinates, from `∂vol_T/∂x_a = vol_T∇λ_a`.
fn mass0_derivative(mesh: &SimplicialComplex, emb: &Embedding, g: &Geometry, f: &[f64]) -> Csr {
    let n = mesh.dim();
    let m = emb.ambient_dim();
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let mut t = Vec::new();
    for (tt, sim) in mesh.simplices(n).iter().enumerate() {
        let vol = g.metric.volumes[n][tt];
        let grads = ambient_gradients(mesh, emb, &g.metric, tt);
        for (i, &vi) in sim.iter().enumerate() {
            let mf: f64 = sim.iter().enumerate().map(|(j, &vj)| ref_lambda(n, i, j) * fact * f[vj]).sum();
            for (a, &va) in sim.iter().enumerate() {
                for r in 0..m {
                    t.push((vi, va * m + r, -mf * vol * grads[a][r]));
                }
            }
        }
    }
    Csr::from_triplets(mesh.n_vertices(), mesh.n_vertices() * m, &t)
}

fn check(mesh: &SimplicialComplex, emb: &Embedding, s: &AmbientStructure, comps: &[Component]) -> Result<()> {
    emb.check_compatible(mesh)?;
    if s.n != mesh.dim() || s.ambient_dim() != emb.ambient_dim() {
        return Err(Error::Dimension("structure does not match the embedding".into()));
    }
    if comps.iter().any(|c| c.degree() > mesh.dim()) {
        return Err(Error::Dimension("component degree exceeds the mesh dimension".into()));
    }
    Ok(())
}

/// Evaluates `F` at the embedding.
pub fn evaluate(
    mesh: &SimplicialComplex,
    emb: &Embedding,
    s: &AmbientStructure,
    comps: &[Component],
) -> Result<MapValue> {
    check(mesh, emb, s, comps)?;
    let g = geometry(mesh, emb)?;
    let psi = if comps.iter().any(|c| matches!(c, Component::Psi | Component::DPsi)) {
        Some(g.m0_chol.solve(&psi_weak(mesh, emb, s)))
    } else {
        None
    };
    let mut values = Vec::with_capacity(comps.len());
    let mut masses = Vec::with_capacity(comps.len());
    for c in comps {
        match c {
            Component::Psi => {
                values.push(psi.clone().unwrap());
                masses.push(g.m0.clone());
            }
            Component::Eta => {
                values.push(eta_values(mesh, emb, s));
                masses.push(mass_matrix(mesh, &g.metric, 1));
            }
            Component::Omega => {
                values.push(g.m0_chol.solve(&omega_weak(mesh, emb, s)));
                masses.push(g.m0.clone());
            }
            Component::DPsi => {
                values.push(mesh.coboundary(0).matvec(psi.as_ref().unwrap()));
                masses.push(mass_matrix(mesh, &g.metric, 1));
            }
        }
    }
    Ok(MapValue { comps: comps.to_vec(), values, masses })
}

/// Exact Jacobian of `F` with respect to the flattened vertex coordinates.
#[derive(Clone, Debug)]
pub struct Jacobian {
    pub comps: Vec<Component>,
    /// Weak rows `M_c J_c` (empty placeholder for `DPsi`, which is carried by `aux`).
    pub weak: Vec<Csr>,
    pub masses: Vec<Csr>,
    /// For `DPsi`: `J = d₀ M₀⁻¹ G`, stored as `(M₁d₀, M₀, G)`.
    pub aux: Vec<Option<(Csr, Csr, Csr)>>,
    pub n_coords: usize,
}

/// Row gradients of `w` (weak `ψ^Im`) including the mass-derivative term `−(∂M₀)F_ψ`.
fn psi_weak_jacobian(
    mesh: &SimplicialComplex,
    emb: &Embedding,
    s: &AmbientStructure,
    g: &Geometry,
    f_psi: &[f64],
) -> Csr {
    let n = mesh.dim();
    let m = emb.ambient_dim();
    let fac = s.psi_factor();
    let unit = |r: usize| {
        let mut e = vec![0.0; m];
        e[r] = 1.0;
        e
    };
    let units: Vec<Vec<f64>> = (0..m).map(unit).collect();
    let mut t = Vec::new();
    for (tt, sim) in mesh.simplices(n).iter().enumerate() {
        let x0 = emb.point(sim[0]);
        let e: Vec<Vec<f64>> = sim[1..].iter().map(|&v| emb.point(v).iter().zip(x0).map(|(a, b)| a - b).collect()).collect();
        let vol = g.metric.volumes[n][tt];
        let grads = ambient_gradients(mesh, emb, &g.metric, tt);
        for (i, &vi) in sim.iter().enumerate() {
            let mut mi = vec![0.0; m];
            for (j, &vj) in sim.iter().enumerate() {
                let c = ref_lambda(n, i, j);
                mi.iter_mut().zip(emb.point(vj)).for_each(|(a, b)| *a += c * b);
            }
            // Σ_j ∫λ_iλ_j / vol · F_j for the mass derivative
            let mf: f64 = sim
                .iter()
                .enumerate()
                .map(|(j, &vj)| ref_lambda(n, i, j) * (1..=n).map(|k| k as f64).product::<f64>() * f_psi[vj])
                .sum();
            for (a, &va) in sim.iter().enumerate() {
                for (r, u) in units.iter().enumerate() {
                    let mut d = Complex64::new(0.0, 0.0);
                    let ca = ref_lambda(n, i, a);
                    let cu: Vec<f64> = u.iter().map(|x| x * ca).collect();
                    let mut cols: Vec<&[f64]> = vec![&cu];
                    cols.extend(e.iter().map(|v| v.as_slice()));
                    d += omega0(&cols);
                    for k in 0..n {
                        // ∂e_k/∂x_a = (δ_{a,k+1} − δ_{a,0}) u
                        let sgn = if a == k + 1 {
                            1.0
                        } else if a == 0 {
                            -1.0
                        } else {
                            0.0
                        };
                        if sgn == 0.0 {
                            continue;
                        }
                        let mut cols: Vec<&[f64]> = vec![&mi];
                        for (l, v) in e.iter().enumerate() {
                            cols.push(if l == k { u.as_slice() } else { v.as_slice() });
                        }
                        d += sgn * omega0(&cols);
                    }
                    let val = (fac * d).im - mf * vol * grads[a][r];
                    if val != 0.0 {
                        t.push((vi, va * m + r, val));
                    }
                }
            }
        }
    }
    Csr::from_triplets(mesh.n_vertices(), mesh.n_vertices() * m, &t)
}

fn eta_jacobian(mesh: &SimplicialComplex, emb: &Embedding, s: &AmbientStructure) -> Csr {
    let m = emb.ambient_dim();
    let mut t = Vec::new();
    for (k, e) in mesh.simplices(1).iter().enumerate() {
        let (a, b) = (e[0], e[1]);
        // ∂/∂x_a s⟨Jx_a, x_b⟩ = −sJx_b, ∂/∂x_b = sJx_a
        let ga = j_apply(emb.point(b));
        let gb = j_apply(emb.point(a));
        for r in 0..m {
            t.push((k, a * m + r, -s.scale * ga[r]));
            t.push((k, b * m + r, s.scale * gb[r]));
        }
    }
    Csr::from_triplets(mesh.n_simplices(1), mesh.n_vertices() * m, &t)
}

fn omega_jacobian(mesh: &SimplicialComplex, emb: &Embedding, s: &AmbientStructure) -> Csr {
    let m = emb.ambient_dim();
    let mut t = Vec::new();
    for (k, tri) in mesh.simplices(2).iter().enumerate() {
        let x0 = emb.point(tri[0]);
        let e1: Vec<f64> = emb.point(tri[1]).iter().zip(x0).map(|(a, b)| a - b).collect();
        let e2: Vec<f64> = emb.point(tri[2]).iter().zip(x0).map(|(a, b)| a - b).collect();
        let g1: Vec<f64> = j_apply(&e2).iter().map(|v| -0.5 * s.scale * v).collect();
        let g2: Vec<f64> = j_apply(&e1).iter().map(|v| 0.5 * s.scale * v).collect();
        for r in 0..m {
            t.push((k, tri[0] * m + r, -g1[r] - g2[r]));
            t.push((k, tri[1] * m + r, g1[r]));
            t.push((k, tri[2] * m + r, g2[r]));
        }
    }
    Csr::from_triplets(mesh.n_simplices(2), mesh.n_vertices() * m, &t)
}

/// Exact Jacobian of `F` at the embedding.
pub fn jacobian(
    mesh: &SimplicialComplex,
    emb: &Embedding,
    s: &AmbientStructure,
    comps: &[Component],
) -> Result<Jacobian> {
    check(mesh, emb, s, comps)?;
    let g = geometry(mesh, emb)?;
    let ncoords = mesh.n_vertices() * emb.ambient_dim();
    let gpsi = if comps.iter().any(|c| matches!(c, Component::Psi | Component::DPsi)) {
        let f = g.m0_chol.solve(&psi_weak(mesh, emb, s));
        Some(psi_weak_jacobian(mesh, emb, s, &g, &f))
    } else {
        None
    };
    let mut weak = Vec::new();
    let mut masses = Vec::new();
    let mut aux = Vec::new();
    for c in comps {
        match c {
            Component::Psi => {
                weak.push(gpsi.clone().unwrap());
                masses.push(g.m0.clone());
                aux.push(None);
            }
            Component::Eta => {
                let m1 = mass_matrix(mesh, &g.metric, 1);
                weak.push(m1.matmul(&eta_jacobian(mesh, emb, s)));
                masses.push(m1);
                aux.push(None);
            }
            Component::Omega => {
                let f = g.m0_chol.solve(&omega_weak(mesh, emb, s));
                let dw = hat_pairing(mesh).matmul(&omega_jacobian(mesh, emb, s));
                weak.push(dw.add(&mass0_derivative(mesh, emb, &g, &f), 1.0, 1.0));
                masses.push(g.m0.clone());
                aux.push(None);
            }
            Component::DPsi => {
                let m1 = mass_matrix(mesh, &g.metric, 1);
                weak.push(Csr::zeros(mesh.n_simplices(1), ncoords));
                aux.push(Some((m1.matmul(&mesh.coboundary(0)), g.m0.clone(), gpsi.clone().unwrap())));
                masses.push(m1);
            }
        }
    }
    Ok(Jacobian { comps: comps.to_vec(), weak, masses, aux, n_coords: ncoords })
}

impl Jacobian {
    /// `J·right` as a weighted operator with the given domain mass.
    pub fn weighted(&self, right: &Csr, dom_mass: Csr) -> WeightedOperator {
        let rows: Vec<usize> = self.weak.iter().map(|w| w.nrows).collect();
        let blocks: Vec<Csr> = self.weak.iter().map(|w| w.matmul(right)).collect();
        let grid: Vec<Vec<Option<&Csr>>> = blocks.iter().map(|b| vec![Some(b)]).collect();
        let w0 = Csr::block(&rows, &[right.ncols], &grid);
        let masses: Vec<&Csr> = self.masses.iter().collect();
        let cod_mass = Csr::block_diag(&masses);
        let live: Vec<(usize, &(Csr, Csr, Csr))> =
            self.aux.iter().enumerate().filter_map(|(i, a)| a.as_ref().map(|x| (i, x))).collect();
        let aux = if live.is_empty() {
            None
        } else {
            let sizes: Vec<usize> = live.iter().map(|(_, a)| a.1.nrows).collect();
            let ls: Vec<Csr> = live.iter().map(|(_, a)| a.2.matmul(right)).collect();
            let mut w1g: Vec<Vec<Option<&Csr>>> = vec![vec![None; live.len()]; rows.len()];
            for (k, (i, a)) in live.iter().enumerate() {
                w1g[*i][k] = Some(&a.0);
            }
            let lg: Vec<Vec<Option<&Csr>>> = ls.iter().map(|l| vec![Some(l)]).collect();
            let ks: Vec<&Csr> = live.iter().map(|(_, a)| &a.1).collect();
            Some(Aux {
                w1: Csr::block(&rows, &sizes, &w1g),
                k: Csr::block_diag(&ks),
                l: Csr::block(&sizes, &[right.ncols], &lg),
            })
        };
        WeightedOperator { w0, aux, dom_mass, cod_mass }
    }

    /// Strong `J u` per component for a flattened vertex displacement `u`.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<Vec<f64>>> {
        if u.len() != self.n_coords {
            return Err(Error::Dimension(format!("displacement has {} entries, expected {}", u.len(), self.n_coords)));
        }
        let mut out = Vec::with_capacity(self.comps.len());
        for (i, w) in self.weak.iter().enumerate() {
            let chol = SparseChol::new(&self.masses[i])?;
            let mut weak = w.matvec(u);
            if let Some((w1, k, l)) = &self.aux[i] {
                let kc = SparseChol::new(k)?;
                let t = w1.matvec(&kc.solve(&l.matvec(u)));
                weak.iter_mut().zip(&t).for_each(|(a, b)| *a += b);
            }
            out.push(chol.solve(&weak));
        }
        Ok(out)
    }
}

/// Dense helper used by tests: the strong Jacobian of one component by central differences.
pub fn fd_jacobian_column(
    mesh: &SimplicialComplex,
    emb: &Embedding,
    s: &AmbientStructure,
    comps: &[Component],
    u: &[f64],
    h: f64,
) -> Result<Vec<Vec<f64>>> {
    let shift = |sign: f64| -> Result<MapValue> {
        let flat: Vec<f64> = emb.flat().iter().zip(u).map(|(a, b)| a + sign * h * b).collect();
        let e = Embedding::from_flat(emb.ambient_dim(), flat, f64::INFINITY)?;
        evaluate(mesh, &e, s, comps)
    };
    let p = shift(1.0)?;
    let q = shift(-1.0)?;
    Ok(p.values.iter().zip(&q.values).map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) / (2.0 * h)).collect()).collect())
}
