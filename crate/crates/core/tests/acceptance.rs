//! Acceptance run: one line per criterion, nonzero exit when any criterion fails.

use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use sasaki_deform::ambient::{identity_check, AmbientStructure};
use sasaki_deform::dec::{eigen_cluster, harmonic_basis, hodge_decompose, FormOperators, DEFAULT_HARMONIC_TOL};
use sasaki_deform::deform::{
    assemble_operator, classify, continuation, exp_deform, linearization_check, moduli_tangent, newton_green_correct,
    ClassifyTolerances, ModuliReport, ModuliTolerances, NewtonOptions, NormalField, NormalFrames, OperatorKind,
    PathDirection, Status,
};
use sasaki_deform::linalg::dense::subspace_sin_angle;
use sasaki_deform::linalg::weighted::kernel;
use sasaki_deform::linalg::{Csr, IterOptions, KernelTol};
use sasaki_deform::mesh::{clifford_circle, clifford_torus};
use sasaki_deform::{Embedding, MetricData, Result, SimplicialComplex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Mesh = (SimplicialComplex, Embedding);

struct Outcome {
    passed: bool,
    detail: String,
}

fn ops_for(m: &Mesh) -> Result<FormOperators> {
    let g = MetricData::induced(&m.0, &m.1)?;
    FormOperators::assemble(&m.0, &g)
}

fn moduli(ops: &FormOperators, kind: OperatorKind, kappa: f64) -> Result<ModuliReport> {
    moduli_tangent(kind, ops, kappa, &ModuliTolerances::default(), &IterOptions::default())
}

fn c1_identities() -> Result<Outcome> {
    let mut passed = true;
    let mut detail = Vec::new();
    for (n, kappa) in [(1usize, 2.0), (2, 3.0)] {
        let s = AmbientStructure::new(n, kappa, 0.0)?;
        let r = identity_check(&s, 100, 1, 1e-3)?;
        let worst_alg = r
            .entries
            .iter()
            .filter(|e| e.kind == "algebraic")
            .map(|e| e.max_residual)
            .fold(0.0, f64::max);
        let min_order = r.entries.iter().filter_map(|e| e.observed_order).fold(f64::INFINITY, f64::min);
        passed &= r.passed;
        detail.push(format!("n={n} algebraic {worst_alg:.1e} fd order {min_order:.2}"));
    }
    Ok(Outcome { passed, detail: detail.join("; ") })
}

fn c2_classification() -> Result<Outcome> {
    let tol = ClassifyTolerances::default();
    let mut passed = true;
    let mut detail = Vec::new();
    let meshes: [(&str, Vec<Mesh>); 2] = [
        ("circle", vec![clifford_circle(64)?, clifford_circle(128)?, clifford_circle(256)?]),
        ("torus", vec![clifford_torus(16, 16)?, clifford_torus(32, 32)?, clifford_torus(64, 64)?]),
    ];
    for (label, ms) in meshes {
        let s = AmbientStructure::sasaki_einstein(ms[0].0.dim(), 0.0)?;
        let mut leg = Vec::new();
        let mut special = Vec::new();
        let mut finest_ok = false;
        for m in &ms {
            let c = classify(&m.0, &m.1, &s, &tol)?;
            let theta_hat = c.theta_hat.unwrap_or(0.0);
            let rotated = classify(&m.0, &m.1, &s.with_theta(s.theta - theta_hat), &tol)?;
            finest_ok = c.legendrian.status == Status::Pass
                && c.theta_special.status == Status::Pass
                && rotated.special_legendrian.status == Status::Pass;
            leg.push(c.legendrian.residual);
            special.push(rotated.special_legendrian.residual);
        }
        let ratio = |v: &[f64]| v.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
        let (rl, rs) = (ratio(&leg), ratio(&special));
        passed &= finest_ok && rl >= 3.5 && rs >= 3.5;
        detail.push(format!(
            "{label} finest pass={finest_ok} legendrian {:.2e} ratio {rl:.2}, special after auto {:.2e} ratio {rs:.2}",
            leg[2], special[2]
        ));
    }
    Ok(Outcome { passed, detail: detail.join("; ") })
}

struct TorusModuli {
    sl: ModuliReport,
    minimal: ModuliReport,
    transverse: ModuliReport,
}

fn c3_kernel_counts(circle: &FormOperators, torus: &FormOperators, tm: &TorusModuli) -> Result<Outcome> {
    let mut got = Vec::new();
    let mut passed = true;
    for (label, ops, kappa, expected) in [
        ("circle k=2", circle, 2.0, 2usize),
        ("circle k=0", circle, 0.0, 1),
        ("circle k=-1", circle, -1.0, 0),
        ("torus k=0", torus, 0.0, 1),
        ("torus k=-1", torus, -1.0, 0),
    ] {
        let r = moduli(ops, OperatorKind::SpecialLegendrian, kappa)?;
        passed &= r.kernel_dim == expected && r.matches;
        got.push(format!("{label}: {}", r.kernel_dim));
    }
    passed &= tm.sl.kernel_dim == 6 && tm.sl.matches;
    got.push(format!("torus k=3: {}", tm.sl.kernel_dim));
    Ok(Outcome { passed, detail: got.join(", ") })
}

fn c4_transverse(torus: &FormOperators, tm: &TorusModuli) -> Result<Outcome> {
    let h = harmonic_basis(torus, 1, DEFAULT_HARMONIC_TOL, &IterOptions::default())?;
    let star = &torus.star[1];
    let angle = subspace_sin_angle(&tm.transverse.basis, &h, &|x| star.matvec(x));
    let passed = tm.transverse.kernel_dim == 2 && h.len() == 2 && angle < 1e-8;
    Ok(Outcome { passed, detail: format!("kernel dim {}, b1 {}, sin angle {angle:.1e}", tm.transverse.kernel_dim, h.len()) })
}

fn c5_minimal(circle: &FormOperators, tm: &TorusModuli) -> Result<Outcome> {
    let sl = moduli(circle, OperatorKind::SpecialLegendrian, 2.0)?;
    let mn = moduli(circle, OperatorKind::MinimalLegendrian, 2.0)?;
    let passed = mn.kernel_dim == sl.kernel_dim + 1 && tm.minimal.kernel_dim == tm.sl.kernel_dim + 1;
    Ok(Outcome {
        passed,
        detail: format!(
            "circle {} = {} + 1, torus {} = {} + 1",
            mn.kernel_dim, sl.kernel_dim, tm.minimal.kernel_dim, tm.sl.kernel_dim
        ),
    })
}

/// Kernel of the special Legendrian operator at the resonant weight `λ_h/2` against the
/// exact eigenspace lifted by `f ↦ (f, −½df)`.
fn resonant_angle(ops: &FormOperators, target: f64) -> Result<(usize, f64)> {
    let opts = IterOptions::default();
    let cluster = eigen_cluster(ops, 0, target, 0.05, &opts)?;
    let lambda = cluster
        .iter()
        .min_by(|a, b| (a.lambda - target).abs().total_cmp(&(b.lambda - target).abs()))
        .map(|p| p.lambda)
        .unwrap_or(target);
    let space: Vec<Vec<f64>> = cluster
        .iter()
        .filter(|p| (p.lambda - lambda).abs() <= 1e-9 * lambda)
        .map(|p| {
            let mut v = p.vector.clone();
            v.extend(ops.d[0].matvec(&p.vector).iter().map(|x| -0.5 * x));
            v
        })
        .collect();
    let asm = assemble_operator(OperatorKind::SpecialLegendrian, ops, lambda / 2.0)?;
    let k = kernel(&asm.d1_weighted(ops)?, KernelTol::Relative(1e-8), &opts)?;
    let b = Csr::block_diag(&[&ops.star[0], &ops.star[1]]);
    let space = sasaki_deform::linalg::dense::b_orthonormalize(&space, &|x| b.matvec(x), 1e-12);
    Ok((k.dim, subspace_sin_angle(&k.basis, &space, &|x| b.matvec(x))))
}

fn c6_exact_identities(circle: &FormOperators, torus16: &FormOperators) -> Result<Outcome> {
    let mut passed = true;
    let mut detail = Vec::new();
    for kind in [OperatorKind::LegendrianComplex, OperatorKind::NxComplex] {
        let a = assemble_operator(kind, torus16, 3.0)?;
        let d = a.complex_defect.unwrap_or(f64::NAN);
        passed &= a.is_exact_complex() == Some(true);
        detail.push(format!("{kind} D2D1 {d:e}"));
    }
    let mut sym = 0.0f64;
    for ops in [circle, torus16] {
        let a = assemble_operator(OperatorKind::SpecialLegendrian, ops, 3.0)?;
        sym = sym.max(a.symmetry_defect.unwrap_or(f64::INFINITY));
    }
    passed &= sym < 1e-12;
    detail.push(format!("symmetry {sym:.1e}"));
    for (label, ops, target) in [("circle", circle, 4.0), ("torus", torus16, 6.0)] {
        let (dim, angle) = resonant_angle(ops, target)?;
        passed &= dim > 0 && angle < 1e-8;
        detail.push(format!("{label} resonant kernel {dim} sin angle {angle:.1e}"));
    }
    Ok(Outcome { passed, detail: detail.join("; ") })
}

fn c7_hodge() -> Result<Outcome> {
    let ops = ops_for(&clifford_torus(32, 32)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut orth, mut reas) = (0.0f64, 0.0f64);
    for k in 0..=2 {
        for _ in 0..3 {
            let w: Vec<f64> = (0..ops.dim(k)).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p = hodge_decompose(&ops, k, &w, &IterOptions::default())?;
            orth = orth.max(p.orthogonality);
            reas = reas.max(p.reassembly_error);
        }
    }
    Ok(Outcome { passed: orth < 1e-8 && reas < 1e-10, detail: format!("orthogonality {orth:.1e}, reassembly {reas:.1e}") })
}

fn c8_newton() -> Result<Outcome> {
    let (m, e) = clifford_circle(256)?;
    let s = AmbientStructure::sasaki_einstein(1, FRAC_PI_2)?;
    let opts = NewtonOptions::default();
    let exact = newton_green_correct(&m, &e, &s, OperatorKind::SpecialLegendrian, &opts)?;
    let frames = NormalFrames::compute(&m, &e)?;
    let y = exp_deform(&m, &e, &NormalField::random(&frames, 7, 0.01), 1.0)?;
    let r = newton_green_correct(&m, &y, &s, OperatorKind::SpecialLegendrian, &opts)?;
    let ratios: Vec<f64> = r.log.windows(2).map(|w| w[1] / w[0]).collect();
    let worst = ratios.iter().skip(1).copied().fold(0.0, f64::max);
    let last = *r.log.last().unwrap_or(&f64::INFINITY);
    let passed = exact.iterations == 0 && r.converged && last < 1e-8 && r.iterations <= 6 && worst <= 0.3;
    Ok(Outcome {
        passed,
        detail: format!(
            "exact input {} iterations; perturbed {} iterations, final {last:.1e}, ratios from 2nd {worst:.2}",
            exact.iterations, r.iterations
        ),
    })
}

fn c9_continuation() -> Result<Outcome> {
    let (m, e) = clifford_torus(64, 64)?;
    let s = AmbientStructure::sasaki_einstein(2, 0.0)?;
    let h = MetricData::induced(&m, &e)?.mesh_size();
    let band = 10.0 * h * h;
    let mut passed = true;
    let mut detail = Vec::new();
    for j in 0..2 {
        let p = continuation(&m, &e, &s, PathDirection::Harmonic(j), 0.01, 10, &NewtonOptions::default(), &IterOptions::default())?;
        let worst = p.records.iter().map(|r| r.res_psi_im.max(r.res_omega_t)).fold(0.0, f64::max);
        let drift = p.max_eta_drift();
        passed &= p.error.is_none() && p.records.len() == 11 && worst <= band && drift < 0.05;
        detail.push(format!("harmonic {j}: steps {}, residual {worst:.1e} (band {band:.1e}), eta drift {drift:.3}", p.records.len() - 1));
    }
    Ok(Outcome { passed, detail: detail.join("; ") })
}

fn c10_homothety(mesh: &SimplicialComplex, torus: &FormOperators) -> Result<Outcome> {
    let opts = IterOptions::default();
    let mut passed = true;
    let mut detail = Vec::new();
    for kappa in [5.0, 4.0] {
        let s = AmbientStructure::new(2, kappa, 0.0)?;
        let a = kappa / 3.0;
        let sa = s.d_homothety(a)?;
        let scaled = FormOperators::assemble(mesh, &torus.metric.scaled(a)?)?;
        let base = eigen_cluster(torus, 0, 2.0 * s.kappa, 0.05, &opts)?.len();
        let resc = eigen_cluster(&scaled, 0, 2.0 * sa.kappa, 0.05, &opts)?.len();
        passed &= base == resc;
        detail.push(format!("k={kappa}: {resc} = {base}"));
    }
    Ok(Outcome { passed, detail: detail.join(", ") })
}

fn c11_linearization() -> Result<Outcome> {
    let (m, e) = clifford_torus(12, 12)?;
    let s = AmbientStructure::sasaki_einstein(2, 0.0)?;
    let frames = NormalFrames::compute(&m, &e)?;
    let ts = [1e-2, 5e-3, 2.5e-3];
    let mut worst = 0.0f64;
    for kind in OperatorKind::ALL {
        for seed in 0..5 {
            let v = NormalField::smooth_random(&frames, &e, seed, 1.0);
            worst = worst.max(linearization_check(&m, &e, &s, kind, &v, &ts)?.variation);
        }
    }
    Ok(Outcome { passed: worst < 0.3, detail: format!("max ratio variation {worst:.4} over 6 kinds x 5 seeds") })
}

fn report(id: usize, start: Instant, r: Result<Outcome>) -> bool {
    let secs = start.elapsed().as_secs_f64();
    match r {
        Ok(o) => {
            println!("criterion {id:>2}: {} ({secs:.1}s) {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
            o.passed
        }
        Err(e) => {
            println!("criterion {id:>2}: FAIL ({secs:.1}s) error: {e}");
            false
        }
    }
}

fn main() {
    let mut all = true;
    let t = Instant::now();
    all &= report(1, t, c1_identities());
    let t = Instant::now();
    all &= report(2, t, c2_classification());

    let setup = || -> Result<(FormOperators, FormOperators, Mesh, FormOperators, TorusModuli)> {
        let circle = ops_for(&clifford_circle(256)?)?;
        let torus16 = ops_for(&clifford_torus(16, 16)?)?;
        let mesh = clifford_torus(64, 64)?;
        let torus = ops_for(&mesh)?;
        let tm = TorusModuli {
            sl: moduli(&torus, OperatorKind::SpecialLegendrian, 3.0)?,
            minimal: moduli(&torus, OperatorKind::MinimalLegendrian, 3.0)?,
            transverse: moduli(&torus, OperatorKind::Transverse, 3.0)?,
        };
        Ok((circle, torus16, mesh, torus, tm))
    };
    let t = Instant::now();
    match setup() {
        Ok((circle, torus16, mesh, torus, tm)) => {
            all &= report(3, t, c3_kernel_counts(&circle, &torus, &tm));
            let t = Instant::now();
            all &= report(4, t, c4_transverse(&torus, &tm));
            let t = Instant::now();
            all &= report(5, t, c5_minimal(&circle, &tm));
            let t = Instant::now();
            all &= report(6, t, c6_exact_identities(&circle, &torus16));
            let t = Instant::now();
            all &= report(10, t, c10_homothety(&mesh.0, &torus));
        }
        Err(e) => {
            for id in [3, 4, 5, 6, 10] {
                println!("criterion {id:>2}: FAIL setup error: {e}");
            }
            all = false;
        }
    }
    let t = Instant::now();
    all &= report(7, t, c7_hodge());
    let t = Instant::now();
    all &= report(8, t, c8_newton());
    let t = Instant::now();
    all &= report(9, t, c9_continuation());
    let t = Instant::now();
    all &= report(11, t, c11_linearization());
    println!("acceptance: {}", if all { "all criteria pass" } else { "some criteria fail" });
    if !all {
        std::process::exit(1);
    }
}
