//! Newton–Green correction, continuation along moduli directions and linearization checks.

use serde::{Deserialize, Serialize};

use super::block::{assemble_operator, OperatorKind};
use super::map::{components, evaluate, hat_pairing, jacobian, star_norm, Component, MapValue};
use super::normal::{
    coord_selector, exp_deform, identification_norm, inverse_identification, normal_identification, NormalCochains,
    NormalField, NormalFrames,
};
use super::phase::phase_extract;
use crate::ambient::AmbientStructure;
use crate::dec::whitney::mass_matrix;
use crate::dec::FormOperators;
use crate::error::{Error, Result};
use crate::linalg::weighted::{kernel, truncated_solve};
use crate::linalg::{Csr, IterOptions, KernelTol, WeightedOperator};
use crate::mesh::{Embedding, MetricData, SimplicialComplex};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Target star norm of `F`.
    pub tol: f64,
    /// Singular values of the star-normalized Jacobian below this are treated as kernel.
    pub tau: f64,
    /// Largest admissible initial residual.
    pub max_initial: f64,
    /// A step whose largest vertex displacement falls below this ends the iteration at a
    /// least-squares stationary point.
    pub step_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { max_iter: 12, tol: 1e-10, tau: 0.05, max_initial: 1.0, step_tol: 1e-12 }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonResult {
    pub embedding: Embedding,
    /// Residual before each iteration and after the last one.
    pub log: Vec<f64>,
    pub iterations: usize,
    /// The residual reached the tolerance.
    pub converged: bool,
    /// The iteration ended at a least-squares stationary point above the tolerance: the
    /// remaining residual lies in the truncated cokernel.
    pub stationary: bool,
    /// Number of truncated singular values per iteration.
    pub truncated: Vec<usize>,
}

/// A residual this many times the best one so far, or two consecutive increases, is divergence.
const DIVERGENCE_FACTOR: f64 = 10.0;
/// Three consecutive contraction ratios above this end the iteration unconverged.
const STAGNATION_RATIO: f64 = 0.9;

/// Linearization of `F` on normal coordinates, measured in [`identification_norm`].
fn normal_operator(
    mesh: &SimplicialComplex,
    emb: &Embedding,
    s: &AmbientStructure,
    comps: &[Component],
    transverse: bool,
) -> Result<(WeightedOperator, NormalFrames, Csr)> {
    let frames = NormalFrames::compute(mesh, emb)?;
    let sel = if transverse { coord_selector(&frames, 1) } else { Csr::identity(frames.n_coords()) };
    let to_amb = frames.coords_to_ambient().matmul(&sel);
    let metric = MetricData::induced(mesh, emb)?;
    let m0 = mass_matrix(mesh, &metric, 0);
    let m1 = mass_matrix(mesh, &metric, 1);
    let dom = identification_norm(mesh, emb, s, &frames, (&m0, &m1), &sel);
    let jac = jacobian(mesh, emb, s, comps)?;
    Ok((jac.weighted(&to_amb, dom), frames, sel))
}

/// Corrects an almost-solution of `F = 0` for `kind` by truncated Gauss–Newton steps
/// `v = −D₁⁺F` followed by the geodesic exponential.
///
/// The pseudo-inverse is the minimum-norm least-squares solution, the discrete counterpart of
/// `D₁*G F` for the Green operator `G` of `P₂` on the complement of its kernel.
pub fn newton_green_correct(
    mesh: &SimplicialComplex,
    emb: &Embedding,
    s: &AmbientStructure,
    kind: OperatorKind,
    opts: &NewtonOptions,
) -> Result<NewtonResult> {
    crate::init_determinism();
    if !(opts.tol > 0.0 && opts.tau > 0.0 && opts.step_tol >= 0.0) {
        return Err(Error::Parameter("Newton tolerances must be positive".into()));
    }
    let comps = components(kind, mesh.dim());
    let transverse = !kind.has_function_part();
    let mut x = emb.clone();
    let mut log = Vec::new();
    let mut truncated = Vec::new();
    let mut best: Option<(f64, Embedding)> = None;
    let mut stationary = false;
    for it in 0..=opts.max_iter {
        let f = evaluate(mesh, &x, s, &comps)?;
        let r = f.norm();
        log.push(r);
        if best.as_ref().map_or(true, |(b, _)| r < *b) {
            best = Some((r, x.clone()));
        }
        if r <= opts.tol {
            return Ok(NewtonResult { embedding: x, log, iterations: it, converged: true, stationary: false, truncated });
        }
        if it == 0 && r > opts.max_initial {
            return Err(Error::Domain(format!(
                "initial residual {r:.3e} exceeds the admissible bound {:.3e}",
                opts.max_initial
            )));
        }
        let k = log.len();
        let best_r = best.as_ref().map_or(r, |(b, _)| *b);
        if r > DIVERGENCE_FACTOR * best_r || (k >= 3 && (k - 2..k).all(|j| log[j] > log[j - 1] * (1.0 + 1e-2))) {
            return Err(Error::Divergence { log });
        }
        if k >= 4 && (k - 3..k).all(|j| log[j] > STAGNATION_RATIO * log[j - 1]) {
            break;
        }
        if it == opts.max_iter {
            break;
        }
        let (op, frames, sel) = normal_operator(mesh, &x, s, &comps, transverse)?;
        let rhs: Vec<f64> = f.weak().iter().map(|v| -v).collect();
        let sol = truncated_solve(&op, &rhs, opts.tau)?;
        truncated.push(sol.dropped.len());
        let v = NormalField::from_coords(&frames, &sel.matvec(&sol.x));
        if v.max_norm() <= opts.step_tol {
            stationary = true;
            break;
        }
        x = match exp_deform(mesh, &x, &v, 1.0) {
            Ok(e) => e,
            Err(Error::StepSize(_)) => return Err(Error::Divergence { log }),
            Err(e) => return Err(e),
        };
    }
    let (_, e) = best.expect("at least one iterate");
    Ok(NewtonResult { embedding: e, iterations: log.len() - 1, converged: false, stationary, log, truncated })
}

/// Direction of a continuation path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathDirection {
    /// A basis vector of the transverse kernel (harmonic 1-cochains), corrected on the
    /// `(ψ^Im, ω^T)` system after each step.
    Harmonic(usize),
    /// The Reeb field `(f, α) = (1, 0)`, uncorrected.
    Reeb,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// `max |*ι*ψ^Im|` at the vertices (phase re-fitted on Reeb paths).
    pub res_psi_im: f64,
    /// `max |*ι*ω^T|` at the vertices, the hat-function projection (zero on curves).
    pub res_omega_t: f64,
    /// `max |∫_e η|`.
    pub res_eta: f64,
    pub newton_iters: usize,
}

#[derive(Clone, Debug)]
pub struct DeformationPath {
    pub embeddings: Vec<Embedding>,
    pub records: Vec<StepRecord>,
    /// Set when the corrector failed and the path was truncated.
    pub error: Option<String>,
}

impl DeformationPath {
    /// CSV log with a header row.
    pub fn csv(&self) -> String {
        let mut out = String::from("step,res_psi_im,res_omega_T,res_eta,newton_iters\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{:.6e},{:.6e},{:.6e},{}\n",
                r.step, r.res_psi_im, r.res_omega_t, r.res_eta, r.newton_iters
            ));
        }
        out
    }

    pub fn max_eta_drift(&self) -> f64 {
        self.records.iter().map(|r| r.res_eta).fold(0.0, f64::max)
    }
}

fn record(
    mesh: &SimplicialComplex,
    emb: &Embedding,
    s: &AmbientStructure,
    step: usize,
    iters: usize,
    refit: bool,
) -> Result<StepRecord> {
    let n = mesh.dim();
    let s_eff = if refit { s.with_theta(s.theta - phase_extract(mesh, emb, s)?.mean_theta) } else { *s };
    let mut comps = vec![Component::Psi, Component::Eta];
    if n >= 2 {
        comps.push(Component::Omega);
    }
    let f = evaluate(mesh, emb, &s_eff, &comps)?;
    let maxabs = |v: &[f64]| v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let res_omega_t = if n >= 2 { maxabs(&f.values[2]) } else { 0.0 };
    Ok(StepRecord {
        step,
        res_psi_im: maxabs(&f.values[0]),
        res_omega_t,
        res_eta: maxabs(&f.values[1]),
        newton_iters: iters,
    })
}

/// Harmonic 1-cochains spanning the transverse kernel, star-orthonormal.
pub fn transverse_kernel(mesh: &SimplicialComplex, emb: &Embedding, opts: &IterOptions) -> Result<Vec<Vec<f64>>> {
    let metric = MetricData::induced(mesh, emb)?;
    let ops = FormOperators::assemble(mesh, &metric)?;
    let asm = assemble_operator(OperatorKind::Transverse, &ops, 0.0)?;
    Ok(kernel(&asm.d1_weighted(&ops)?, KernelTol::Relative(1e-8), opts)?.basis)
}

/// Marches `steps` geodesic steps of length `step` along `direction`.
///
/// Harmonic directions are transported as fixed 1-cochains and mapped to normal fields on
/// the current mesh with `f = 0`, scaled so the first field has unit maximum norm; every
/// step is corrected with [`newton_green_correct`] on the `nx_complex` system. A corrector
/// failure truncates the path and records the error.
pub fn continuation(
    mesh: &SimplicialComplex,
    emb: &Embedding,
    s: &AmbientStructure,
    direction: PathDirection,
    step: f64,
    steps: usize,
    newton: &NewtonOptions,
    opts: &IterOptions,
) -> Result<DeformationPath> {
    if !step.is_finite() {
        return Err(Error::Parameter(format!("step must be finite, got {step}")));
    }
    let refit = direction == PathDirection::Reeb;
    let alpha = match direction {
        PathDirection::Harmonic(i) => {
            let basis = transverse_kernel(mesh, emb, opts)?;
            let a = basis.get(i).cloned().ok_or_else(|| {
                Error::Parameter(format!("kernel index {i} out of range ({} directions)", basis.len()))
            })?;
            Some(a)
        }
        PathDirection::Reeb => None,
    };
    let field_at = |x: &Embedding, scale: f64| -> Result<NormalField> {
        match &alpha {
            Some(a) => {
                let frames = NormalFrames::compute(mesh, x)?;
                let metric = MetricData::induced(mesh, x)?;
                let m0 = mass_matrix(mesh, &metric, 0);
                let m1 = mass_matrix(mesh, &metric, 1);
                let target = NormalCochains { f: vec![0.0; mesh.n_vertices()], alpha: a.clone() };
                Ok(inverse_identification(mesh, x, s, &frames, (&m0, &m1), &target, true)?.scaled(scale))
            }
            None => Ok(NormalField::reeb(x, s).scaled(scale)),
        }
    };
    let first = field_at(emb, 1.0)?;
    let mx = first.max_norm();
    if !(mx > 0.0) {
        return Err(Error::Domain("continuation direction vanishes".into()));
    }
    let scale = 1.0 / mx;
    let mut embeddings = vec![emb.clone()];
    let mut records = vec![record(mesh, emb, s, 0, 0, refit)?];
    let mut x = emb.clone();
    for k in 1..=steps {
        let res = (|| -> Result<(Embedding, usize)> {
            let v = field_at(&x, scale)?;
            let y = exp_deform(mesh, &x, &v, step)?;
            if refit {
                return Ok((y, 0));
            }
            let r = newton_green_correct(mesh, &y, s, OperatorKind::NxComplex, newton)?;
            if !(r.converged || r.stationary) {
                return Err(Error::Solver {
                    iterations: r.iterations,
                    message: format!("corrector stalled at residual {:.3e}", r.log.last().copied().unwrap_or(f64::NAN)),
                });
            }
            Ok((r.embedding, r.iterations))
        })();
        match res {
            Ok((y, iters)) => {
                records.push(record(mesh, &y, s, k, iters, refit)?);
                embeddings.push(y.clone());
                x = y;
            }
            Err(e) => {
                return Ok(DeformationPath { embeddings, records, error: Some(format!("step {k}: {e}")) });
            }
        }
    }
    Ok(DeformationPath { embeddings, records, error: None })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearizationReport {
    pub kind: OperatorKind,
    pub ts: Vec<f64>,
    /// `‖F(exp_{tv}) − F(x) − tJv‖` in the star norms at `x`.
    pub remainders: Vec<f64>,
    /// `remainder / t²`.
    pub ratios: Vec<f64>,
    /// `(max − min)/max` of the ratios.
    pub variation: f64,
    /// `‖Jv − D₁(f, α)‖/‖Jv‖` with `(f, α)` the identification of `v`.
    pub dec_consistency: f64,
    pub jv_norm: f64,
}

/// Taylor remainder of the discrete map along `exp_{tv}` and the agreement of its exact
/// linearization with the assembled `D₁`.
pub fn linearization_check(
    mesh: &SimplicialComplex,
    emb: &Embedding,
    s: &AmbientStructure,
    kind: OperatorKind,
    v: &NormalField,
    ts: &[f64],
) -> Result<LinearizationReport> {
    let comps = components(kind, mesh.dim());
    let f0 = evaluate(mesh, emb, s, &comps)?;
    let jac = jacobian(mesh, emb, s, &comps)?;
    let jv = jac.apply(&v.flat())?;
    let jv_norm = f0.norm_of(&jv);
    let mut remainders = Vec::with_capacity(ts.len());
    let mut ratios = Vec::with_capacity(ts.len());
    for &t in ts {
        let y = exp_deform(mesh, emb, v, t)?;
        let ft = evaluate(mesh, &y, s, &comps)?;
        let diff: Vec<Vec<f64>> = ft
            .values
            .iter()
            .zip(&f0.values)
            .zip(&jv)
            .map(|((a, b), c)| a.iter().zip(b).zip(c).map(|((p, q), r)| p - q - t * r).collect())
            .collect();
        let r = f0.norm_of(&diff);
        remainders.push(r);
        ratios.push(r / (t * t));
    }
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let variation = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
    let dec_consistency = dec_mismatch(mesh, emb, s, kind, v, &jv, &f0)?;
    Ok(LinearizationReport { kind, ts: ts.to_vec(), remainders, ratios, variation, dec_consistency, jv_norm })
}

fn dec_mismatch(
    mesh: &SimplicialComplex,
    emb: &Embedding,
    s: &AmbientStructure,
    kind: OperatorKind,
    v: &NormalField,
    jv: &[Vec<f64>],
    f0: &MapValue,
) -> Result<f64> {
    let metric = MetricData::induced(mesh, emb)?;
    let ops = FormOperators::assemble(mesh, &metric)?;
    let asm = assemble_operator(kind, &ops, s.kappa)?;
    let c = normal_identification(mesh, emb, s, v)?;
    let input = if kind.has_function_part() { c.concat() } else { c.alpha.clone() };
    let y = asm.d1.apply(&ops, &input)?;
    let mut o = 0;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, q) in asm.d1.cod.iter().enumerate() {
        let len = ops.dim(*q);
        let yi = if f0.comps[i] == Component::Omega {
            ops.star_solve(0, &hat_pairing(mesh).matvec(&y[o..o + len]))
        } else {
            y[o..o + len].to_vec()
        };
        let d: Vec<f64> = jv[i].iter().zip(&yi).map(|(a, b)| a - b).collect();
        num += star_norm(&f0.masses[i], &d).powi(2);
        den += star_norm(&f0.masses[i], &jv[i]).powi(2);
        o += len;
    }
    Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}
