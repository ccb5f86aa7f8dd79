//! Lagrangian phase, classification bands, mean curvature and the phase–curvature relation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::pullback::{psi_simplex, pullback_exact, PulledForm, PullbackResidual};
use crate::ambient::{j_inner, AmbientStructure};
use crate::error::{Error, Result};
use crate::mesh::{Embedding, MetricData, SimplicialComplex};

/// Simplices with `|*ι*ψ|` below this are not near-Legendrian.
pub const MIN_PHASE_MODULUS: f64 = 0.5;

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    /// `z_T = (∫_T ψ)/(s^{n/2} vol_T)`, which has modulus ≈ 1 on a Legendrian.
    pub z: Vec<(f64, f64)>,
    /// `θ_T = arg z_T`.
    pub theta: Vec<f64>,
    /// Volume-weighted circular mean of `θ_T`.
    pub mean_theta: f64,
    /// `max_T |θ_T − mean|` (wrapped).
    pub max_deviation: f64,
    /// `max_T ||z_T| − 1|`.
    pub max_modulus_defect: f64,
}

/// `z_T` for every top simplex.
fn phase_values(mesh: &SimplicialComplex, emb: &Embedding, s: &AmbientStructure) -> Result<(Vec<Complex64>, MetricData)> {
    emb.check_compatible(mesh)?;
    let n = mesh.dim();
    if s.n != n || s.ambient_dim() != emb.ambient_dim() {
        return Err(Error::Dimension("structure does not match the embedding".into()));
    }
    let metric = MetricData::induced(mesh, emb)?;
    let norm = s.scale.powf(n as f64 / 2.0);
    let z = mesh
        .simplices(n)
        .iter()
        .enumerate()
        .map(|(t, sim)| {
            let pts: Vec<&[f64]> = sim.iter().map(|&v| emb.point(v)).collect();
            psi_simplex(s, &pts) / (norm * metric.volumes[n][t])
        })
        .collect();
    Ok((z, metric))
}

/// Per-simplex phase of the pulled-back complex volume form.
///
/// Rotating the structure phase by `−mean_theta` makes `ι*ψ` real and positive on average.
pub fn phase_extract(mesh: &SimplicialComplex, emb: &Embedding, s: &AmbientStructure) -> Result<PhaseReport> {
    let (z, metric) = phase_values(mesh, emb, s)?;
    let n = mesh.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for (t, zt) in z.iter().enumerate() {
        if zt.norm() < MIN_PHASE_MODULUS {
            return Err(Error::NotNearLegendrian { simplex: t, modulus: zt.norm() });
        }
        acc += metric.volumes[n][t] * zt / zt.norm();
    }
    let mean_theta = acc.arg();
    let theta: Vec<f64> = z.iter().map(|c| c.arg()).collect();
    let max_deviation = theta.iter().map(|t| wrap_angle(t - mean_theta).abs()).fold(0.0, f64::max);
    let max_modulus_defect = z.iter().map(|c| (c.norm() - 1.0).abs()).fold(0.0, f64::max);
    Ok(PhaseReport {
        z: z.iter().map(|c| (c.re, c.im)).collect(),
        theta,
        mean_theta,
        max_deviation,
        max_modulus_defect,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub residual: f64,
}

/// Pass below `pass_factor·h²`, fail above `fail_factor·h²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyTolerances {
    pub pass_factor: f64,
    pub fail_factor: f64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        ClassifyTolerances { pass_factor: 10.0, fail_factor: 100.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub mesh_size: f64,
    pub pass_band: f64,
    pub fail_band: f64,
    pub structure_theta: f64,
    pub legendrian: Verdict,
    pub special_legendrian: Verdict,
    pub theta_special: Verdict,
    /// Phase rotation that makes the mesh special Legendrian (`θ_new = θ_old − theta_hat`).
    pub theta_hat: Option<f64>,
    pub minimal_legendrian: Verdict,
    /// `max |η|/length`.
    pub eta_density: f64,
    /// `max ||*ι*ψ| − 1|`.
    pub modulus_defect: f64,
    /// `max |ι*ψ^Im|/vol` for the given phase.
    pub psi_im_density: f64,
}

impl ClassifyTolerances {
    fn judge(&self, h: f64, residual: f64) -> Verdict {
        let h2 = h * h;
        let status = if residual < self.pass_factor * h2 {
            Status::Pass
        } else if residual > self.fail_factor * h2 {
            Status::Fail
        } else {
            Status::Indeterminate
        };
        Verdict { status, residual }
    }
}

/// Largest jump of the density of an n-cochain across interior `(n−1)`-faces.
fn density_jump(mesh: &SimplicialComplex, values: &[f64], vol: &[f64]) -> f64 {
    let n = mesh.dim();
    let mut owner: Vec<Option<f64>> = vec![None; mesh.n_simplices(n - 1)];
    let mut worst = 0.0f64;
    for t in 0..mesh.n_simplices(n) {
        let g = values[t] / vol[t];
        for &(f, _) in mesh.faces(n, t) {
            match owner[f] {
                None => owner[f] = Some(g),
                Some(h) => worst = worst.max((g - h).abs()),
            }
        }
    }
    worst
}

/// Legendrian, special Legendrian, θ-special and minimal Legendrian tests with h²-scaled bands.
///
/// Residuals are densities (integrated value over measure). The Legendrian residual is the
/// larger of the `η` density and the modulus defect of `*ι*ψ`; the special residuals add the
/// `ψ^Im` density, and the minimal residual its jumps across faces.
pub fn classify(
    mesh: &SimplicialComplex,
    emb: &Embedding,
    s: &AmbientStructure,
    tol: &ClassifyTolerances,
) -> Result<Classification> {
    emb.check_compatible(mesh)?;
    let n = mesh.dim();
    let metric = MetricData::induced(mesh, emb)?;
    let h = metric.mesh_size();
    let eta = PullbackResidual::from_values(
        PulledForm::Eta,
        1,
        pullback_exact(mesh, emb, s, PulledForm::Eta)?,
        &metric.volumes[1],
    );
    let psi_vals = pullback_exact(mesh, emb, s, PulledForm::PsiIm)?;
    let psi = PullbackResidual::from_values(PulledForm::PsiIm, n, psi_vals.clone(), &metric.volumes[n]);
    let phase = phase_extract(mesh, emb, s).ok();
    let (z, _) = phase_values(mesh, emb, s)?;
    let modulus_defect = z.iter().map(|c| (c.norm() - 1.0).abs()).fold(0.0, f64::max);
    let leg_res = eta.max_norm.max(modulus_defect);
    let legendrian = tol.judge(h, leg_res);
    let special_legendrian = tol.judge(h, leg_res.max(psi.max_norm));
    let (theta_special, theta_hat) = match &phase {
        Some(p) => {
            let rotated = s.with_theta(s.theta - p.mean_theta);
            let vals = pullback_exact(mesh, emb, &rotated, PulledForm::PsiIm)?;
            let r = PullbackResidual::from_values(PulledForm::PsiIm, n, vals, &metric.volumes[n]);
            (tol.judge(h, leg_res.max(r.max_norm)), Some(p.mean_theta))
        }
        None => (Verdict { status: Status::Fail, residual: leg_res }, None),
    };
    let jump = density_jump(mesh, &psi_vals, &metric.volumes[n]);
    let minimal_legendrian = tol.judge(h, leg_res.max(jump));
    Ok(Classification {
        mesh_size: h,
        pass_band: tol.pass_factor * h * h,
        fail_band: tol.fail_factor * h * h,
        structure_theta: s.theta,
        legendrian,
        special_legendrian,
        theta_special,
        theta_hat,
        minimal_legendrian,
        eta_density: eta.max_norm,
        modulus_defect,
        psi_im_density: psi.max_norm,
    })
}

/// Ambient gradients of the barycentric coordinates of top simplex `t`, `n + 1` vectors.
pub fn ambient_gradients(mesh: &SimplicialComplex, emb: &Embedding, metric: &MetricData, t: usize) -> Vec<Vec<f64>> {
    let n = mesh.dim();
    let sim = &mesh.simplices(n)[t];
    let x0 = emb.point(sim[0]);
    let e: Vec<Vec<f64>> = (1..=n).map(|k| emb.point(sim[k]).iter().zip(x0).map(|(a, b)| a - b).collect()).collect();
    let gi = metric.inverse_gram(t);
    let m = emb.ambient_dim();
    let mut g = vec![vec![0.0; m]; n + 1];
    for k in 0..n {
        for l in 0..n {
            let c = gi[k * n + l];
            g[k + 1].iter_mut().zip(&e[l]).for_each(|(a, b)| *a += c * b);
        }
    }
    let mut g0 = vec![0.0; m];
    for v in &g[1..] {
        g0.iter_mut().zip(v).for_each(|(a, b)| *a -= b);
    }
    g[0] = g0;
    g
}

/// Discrete mean curvature vector: minus the volume gradient divided by the lumped vertex
/// mass, projected to `T_xS`.
pub fn mean_curvature(mesh: &SimplicialComplex, emb: &Embedding, metric: &MetricData) -> Result<Vec<Vec<f64>>> {
    emb.check_compatible(mesh)?;
    let n = mesh.dim();
    if metric.dim != n || metric.volumes[n].len() != mesh.n_simplices(n) {
        return Err(Error::Dimension("metric does not match the mesh".into()));
    }
    let m = emb.ambient_dim();
    let mut grad = vec![vec![0.0; m]; mesh.n_vertices()];
    let mut mass = vec![0.0; mesh.n_vertices()];
    for (t, sim) in mesh.simplices(n).iter().enumerate() {
        let vol = metric.volumes[n][t];
        if !(vol > 0.0) {
            return Err(Error::SingularMetric { degree: n, simplex: t });
        }
        let g = ambient_gradients(mesh, emb, metric, t);
        for (a, &v) in sim.iter().enumerate() {
            grad[v].iter_mut().zip(&g[a]).for_each(|(x, y)| *x += vol * y);
            mass[v] += vol / (n + 1) as f64;
        }
    }
    Ok(grad
        .into_iter()
        .enumerate()
        .map(|(i, gv)| {
            let x = emb.point(i);
            let mut h: Vec<f64> = gv.iter().map(|v| -v / mass[i]).collect();
            let r: f64 = h.iter().zip(x).map(|(a, b)| a * b).sum();
            h.iter_mut().zip(x).for_each(|(a, b)| *a -= r * b);
            h
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCurvatureReport {
    /// `max_e |dθ(e) + ∫_e i_H ω^T|`.
    pub max_residual: f64,
    /// `max_e |dθ(e)|`.
    pub lhs_max: f64,
    /// `max_e |∫_e i_H ω^T|`.
    pub rhs_max: f64,
}

/// Compares `dθ` of the vertex-interpolated phase with the edge integrals of `i_H ω^T`.
///
/// With `θ = arg(*ι*ψ)` the relation reads `dθ = −ι*(i_H ω^T)`; the mean curvature is
/// taken for the metric `s·g`, so the right side is `⟨J H̄, x_b − x_a⟩` with `H̄` the
/// edge-midpoint average of the Euclidean mean curvature.
pub fn check_phase_curvature_relation(
    mesh: &SimplicialComplex,
    emb: &Embedding,
    s: &AmbientStructure,
) -> Result<PhaseCurvatureReport> {
    let phase = phase_extract(mesh, emb, s)?;
    let n = mesh.dim();
    let metric = MetricData::induced(mesh, emb)?;
    let h = mean_curvature(mesh, emb, &metric)?;
    let mut acc = vec![Complex64::new(0.0, 0.0); mesh.n_vertices()];
    for (t, sim) in mesh.simplices(n).iter().enumerate() {
        let w = Complex64::from_polar(metric.volumes[n][t], phase.theta[t]);
        for &v in sim {
            acc[v] += w;
        }
    }
    let tv: Vec<f64> = acc.iter().map(|c| c.arg()).collect();
    let mut out = PhaseCurvatureReport { max_residual: 0.0, lhs_max: 0.0, rhs_max: 0.0 };
    for e in mesh.simplices(1) {
        let (a, b) = (e[0], e[1]);
        let lhs = wrap_angle(tv[b] - tv[a]);
        let hm: Vec<f64> = h[a].iter().zip(&h[b]).map(|(p, q)| 0.5 * (p + q)).collect();
        let edge: Vec<f64> = emb.point(b).iter().zip(emb.point(a)).map(|(p, q)| p - q).collect();
        let rhs = j_inner(&hm, &edge);
        out.max_residual = out.max_residual.max((lhs + rhs).abs());
        out.lhs_max = out.lhs_max.max(lhs.abs());
        out.rhs_max = out.rhs_max.max(rhs.abs());
    }
    Ok(out)
}
