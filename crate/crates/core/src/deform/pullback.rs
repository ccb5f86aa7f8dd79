//! Pullbacks of the structure forms to chord simplices.
//!
//! The forms are integrated through their polynomial extensions off the sphere,
//! `η̃ = s⟨Jx, dx⟩`, `ω̃ = s⟨J·,·⟩` and `ψ̃ = s^{n/2}e^{iθ}Ω₀(x, ·)`, which agree with the
//! homogeneous forms on `S^{2n+1}`. Then `dη̃ = 2ω̃` holds exactly on chord simplices, so the
//! discrete pullbacks satisfy Stokes' theorem without quadrature error.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadrature::simplex_rule;
use crate::ambient::{j_inner, omega0, AmbientStructure};
use crate::error::{Error, Result};
use crate::mesh::{Embedding, MetricData, SimplicialComplex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulledForm {
    Eta,
    PsiIm,
    PsiRe,
    OmegaT,
}

impl PulledForm {
    pub fn degree(&self, n: usize) -> usize {
        match self {
            PulledForm::Eta => 1,
            PulledForm::OmegaT => 2,
            PulledForm::PsiIm | PulledForm::PsiRe => n,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PulledForm::Eta => "eta",
            PulledForm::PsiIm => "psi_im",
            PulledForm::PsiRe => "psi_re",
            PulledForm::OmegaT => "omega_t",
        }
    }
}

/// Integrated values of a pulled-back form on every simplex of its degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullbackResidual {
    pub form: PulledForm,
    pub degree: usize,
    pub values: Vec<f64>,
    /// `(Σ value²/vol)^{1/2}`: L² norm of the piecewise constant density.
    pub l2_norm: f64,
    /// `max |value|/vol`: sup norm of the density.
    pub max_norm: f64,
    /// `max |value|`.
    pub max_integrated: f64,
    /// `Σ value`.
    pub total: f64,
}

impl PullbackResidual {
    pub fn from_values(form: PulledForm, degree: usize, values: Vec<f64>, vol: &[f64]) -> Self {
        let l2 = values.iter().zip(vol).map(|(v, w)| v * v / w).sum::<f64>().sqrt();
        let max_norm = values.iter().zip(vol).map(|(v, w)| (v / w).abs()).fold(0.0, f64::max);
        let max_integrated = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let total = values.iter().sum();
        PullbackResidual { form, degree, values, l2_norm: l2, max_norm, max_integrated, total }
    }
}

/// `∫_σ η̃` on the chord from `a` to `b`: `s⟨Jx_a, x_b⟩`.
pub fn eta_edge(s: &AmbientStructure, a: &[f64], b: &[f64]) -> f64 {
    s.scale * j_inner(a, b)
}

/// `∫_T ω̃ = ½ s⟨J e₁, e₂⟩` on a chord triangle.
pub fn omega_triangle(s: &AmbientStructure, x0: &[f64], x1: &[f64], x2: &[f64]) -> f64 {
    let e1: Vec<f64> = x1.iter().zip(x0).map(|(a, b)| a - b).collect();
    let e2: Vec<f64> = x2.iter().zip(x0).map(|(a, b)| a - b).collect();
    0.5 * s.scale * j_inner(&e1, &e2)
}

/// `∫_T ψ̃ = s^{n/2}e^{iθ} det(x₀, …, x_n)/n!` on a chord top simplex.
pub fn psi_simplex(s: &AmbientStructure, pts: &[&[f64]]) -> Complex64 {
    let fact: f64 = (1..pts.len()).map(|i| i as f64).product();
    s.psi_factor() * omega0(pts) / fact
}

/// Integrand of the polynomial extension at a point with the simplex edge vectors.
fn integrand(s: &AmbientStructure, form: PulledForm, x: &[f64], e: &[Vec<f64>]) -> f64 {
    match form {
        PulledForm::Eta => s.scale * j_inner(x, &e[0]),
        PulledForm::OmegaT => s.scale * j_inner(&e[0], &e[1]),
        PulledForm::PsiIm | PulledForm::PsiRe => {
            let mut w: Vec<&[f64]> = vec![x];
            w.extend(e.iter().map(|v| v.as_slice()));
            let z = s.psi_factor() * omega0(&w);
            if form == PulledForm::PsiIm {
                z.im
            } else {
                z.re
            }
        }
    }
}

/// Per-simplex integrals of `ι*Φ` by Gauss quadrature with `order` points per direction.
pub fn pullback(
    mesh: &SimplicialComplex,
    emb: &Embedding,
    s: &AmbientStructure,
    form: PulledForm,
    order: usize,
) -> Result<PullbackResidual> {
    emb.check_compatible(mesh)?;
    if s.ambient_dim() != emb.ambient_dim() {
        return Err(Error::Dimension("structure and embedding dimensions differ".into()));
    }
    let k = form.degree(mesh.dim());
    if k > mesh.dim() {
        return Err(Error::Dimension(format!(
            "{} has degree {k} but the mesh has dimension {}",
            form.name(),
            mesh.dim()
        )));
    }
    if order == 0 {
        return Err(Error::Parameter("quadrature order must be at least 1".into()));
    }
    let metric = MetricData::induced(mesh, emb)?;
    let rule = simplex_rule(k, order);
    let values: Vec<f64> = mesh
        .simplices(k)
        .iter()
        .map(|sim| {
            let x0 = emb.point(sim[0]);
            let e: Vec<Vec<f64>> =
                sim[1..].iter().map(|&v| emb.point(v).iter().zip(x0).map(|(a, b)| a - b).collect()).collect();
            rule.iter()
                .map(|(p, w)| {
                    let mut x = x0.to_vec();
                    for (pi, ei) in p.iter().zip(&e) {
                        x.iter_mut().zip(ei).for_each(|(a, b)| *a += pi * b);
                    }
                    w * integrand(s, form, &x, &e)
                })
                .sum()
        })
        .collect();
    Ok(PullbackResidual::from_values(form, k, values, &metric.volumes[k]))
}

/// Closed-form per-simplex values (identical to [`pullback`] up to round-off).
pub fn pullback_exact(
    mesh: &SimplicialComplex,
    emb: &Embedding,
    s: &AmbientStructure,
    form: PulledForm,
) -> Result<Vec<f64>> {
    let k = form.degree(mesh.dim());
    if k > mesh.dim() {
        return Err(Error::Dimension(format!("{} has degree {k}", form.name())));
    }
    Ok(mesh
        .simplices(k)
        .iter()
        .map(|sim| match form {
            PulledForm::Eta => eta_edge(s, emb.point(sim[0]), emb.point(sim[1])),
            PulledForm::OmegaT => omega_triangle(s, emb.point(sim[0]), emb.point(sim[1]), emb.point(sim[2])),
            PulledForm::PsiIm | PulledForm::PsiRe => {
                let pts: Vec<&[f64]> = sim.iter().map(|&v| emb.point(v)).collect();
                let z = psi_simplex(s, &pts);
                if form == PulledForm::PsiIm {
                    z.im
                } else {
                    z.re
                }
            }
        })
        .collect())
}
