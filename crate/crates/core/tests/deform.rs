use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sasaki_deform::ambient::AmbientStructure;
use sasaki_deform::dec::FormOperators;
use sasaki_deform::deform::{
    assemble_operator, check_phase_curvature_relation, classify, continuation, exp_deform, inverse_identification,
    linearization_check, mean_curvature, moduli_tangent, newton_green_correct, normal_identification, phase_extract,
    pullback, pullback_exact, wrap_angle, ClassifyTolerances, ModuliTolerances, NewtonOptions, NormalCochains,
    NormalField, NormalFrames, OperatorKind, PathDirection, PulledForm, Status, MAX_NORMAL_STEP,
};
use sasaki_deform::linalg::weighted::kernel;
use sasaki_deform::linalg::{IterOptions, KernelTol};
use sasaki_deform::mesh::builtin::round_circle;
use sasaki_deform::mesh::{clifford_circle, clifford_torus};
use sasaki_deform::{Embedding, MetricData, SimplicialComplex};

fn opts() -> IterOptions {
    IterOptions::default()
}

fn ops(m: &SimplicialComplex, e: &Embedding) -> FormOperators {
    FormOperators::assemble(m, &MetricData::induced(m, e).unwrap()).unwrap()
}

fn circle_special() -> AmbientStructure {
    AmbientStructure::sasaki_einstein(1, FRAC_PI_2).unwrap()
}

fn torus_structure() -> AmbientStructure {
    AmbientStructure::sasaki_einstein(2, 0.0).unwrap()
}

fn perturbed_torus(res: usize, seed: u64, amplitude: f64) -> (SimplicialComplex, Embedding) {
    let (m, e) = clifford_torus(res, res).unwrap();
    let fr = NormalFrames::compute(&m, &e).unwrap();
    let v = NormalField::smooth_random(&fr, &e, seed, amplitude);
    let y = exp_deform(&m, &e, &v, 1.0).unwrap();
    (m, y)
}

#[test]
fn quadrature_matches_closed_form() {
    let (m, e) = perturbed_torus(8, 1, 0.05);
    let s = torus_structure();
    for form in [PulledForm::Eta, PulledForm::OmegaT, PulledForm::PsiIm, PulledForm::PsiRe] {
        let q = pullback(&m, &e, &s, form, 4).unwrap();
        let x = pullback_exact(&m, &e, &s, form).unwrap();
        let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let err = q.values.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12 * scale.max(1e-3), "{}: {err}", form.name());
    }
}

fn torus_pullbacks(form: PulledForm) -> Vec<f64> {
    let s = torus_structure();
    [16usize, 32, 64]
        .iter()
        .map(|&n| {
            let (m, e) = clifford_torus(n, n).unwrap();
            pullback(&m, &e, &s, form, 3).unwrap().max_norm
        })
        .collect()
}

#[test]
fn clifford_torus_pullback_residuals_converge() {
    // ψ^Im vanishes on every flat simplex; η and ω^T only in the limit
    assert!(torus_pullbacks(PulledForm::PsiIm).iter().all(|&r| r < 1e-13));
    let eta = torus_pullbacks(PulledForm::Eta);
    assert!(eta[0] / eta[1] > 3.5 && eta[1] / eta[2] > 3.5, "{eta:?}");
    let om = torus_pullbacks(PulledForm::OmegaT);
    assert!(om[0] / om[1] > 1.8 && om[1] / om[2] > 1.8, "{om:?}");
    let (m, e) = clifford_torus(4, 4).unwrap();
    assert!(pullback(&m, &e, &torus_structure(), PulledForm::Eta, 0).is_err());
}

#[test]
fn psi_re_integrates_to_the_volume() {
    let errs: Vec<f64> = [64usize, 128, 256]
        .iter()
        .map(|&n| {
            let (m, e) = clifford_circle(n).unwrap();
            (pullback(&m, &e, &circle_special(), PulledForm::PsiRe, 3).unwrap().total.abs() - 2.0 * PI).abs()
        })
        .collect();
    assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
    // the Clifford torus has area (2π)²/√3
    let area = 4.0 * PI * PI / 3f64.sqrt();
    let errs: Vec<f64> = [16usize, 32, 64]
        .iter()
        .map(|&n| {
            let (m, e) = clifford_torus(n, n).unwrap();
            (pullback(&m, &e, &torus_structure(), PulledForm::PsiRe, 3).unwrap().total.abs() - area).abs()
        })
        .collect();
    assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
}

#[test]
fn eta_moves_linearly_with_the_normal_amplitude() {
    // only the Reeb part of v changes η, so the change is first order in the amplitude
    let s = torus_structure();
    let (m, e) = clifford_torus(12, 12).unwrap();
    let base = pullback_exact(&m, &e, &s, PulledForm::Eta).unwrap();
    let r: Vec<f64> = [1e-3, 5e-4]
        .iter()
        .map(|&a| {
            let (_, y) = perturbed_torus(12, 2, a);
            let v = pullback_exact(&m, &y, &s, PulledForm::Eta).unwrap();
            v.iter().zip(&base).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
        })
        .collect();
    assert!(r[1] > 0.0 && (r[0] / r[1] - 2.0).abs() < 0.05, "{r:?}");
}

#[test]
fn phase_of_the_clifford_circle() {
    let (m, e) = clifford_circle(64).unwrap();
    let p = phase_extract(&m, &e, &AmbientStructure::sasaki_einstein(1, 0.0).unwrap()).unwrap();
    assert!(p.max_deviation < 1e-12);
    assert!(p.max_modulus_defect < 1e-2);
    let special = phase_extract(&m, &e, &circle_special()).unwrap();
    assert!(wrap_angle(special.mean_theta).abs() < 1e-12);
    assert!((wrap_angle(p.mean_theta - special.mean_theta).abs() - FRAC_PI_2).abs() < 1e-12);
}

#[test]
fn wrap_angle_range() {
    assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12 || (wrap_angle(3.0 * PI) + PI).abs() < 1e-12);
    assert!((wrap_angle(0.5 + 4.0 * PI) - 0.5).abs() < 1e-12);
    assert!(wrap_angle(-0.5).abs() - 0.5 < 1e-15);
}

#[test]
fn classify_the_clifford_circle() {
    let (m, e) = clifford_circle(128).unwrap();
    let tol = ClassifyTolerances::default();
    let c = classify(&m, &e, &AmbientStructure::sasaki_einstein(1, 0.0).unwrap(), &tol).unwrap();
    assert_eq!(c.legendrian.status, Status::Pass);
    assert_eq!(c.special_legendrian.status, Status::Fail);
    assert_eq!(c.theta_special.status, Status::Pass);
    assert_eq!(c.minimal_legendrian.status, Status::Pass);
    let hat = c.theta_hat.unwrap();
    assert!((wrap_angle(hat).abs() - FRAC_PI_2).abs() < 1e-10, "{hat}");
    let c = classify(&m, &e, &circle_special(), &tol).unwrap();
    assert_eq!(c.special_legendrian.status, Status::Pass);
}

#[test]
fn classify_the_clifford_torus() {
    let (m, e) = clifford_torus(32, 32).unwrap();
    let c = classify(&m, &e, &torus_structure(), &ClassifyTolerances::default()).unwrap();
    assert_eq!(c.legendrian.status, Status::Pass);
    assert_eq!(c.special_legendrian.status, Status::Pass);
    assert_eq!(c.minimal_legendrian.status, Status::Pass);
    assert!(c.pass_band < c.fail_band);
}

#[test]
fn small_round_circle_is_not_legendrian() {
    let (m, e) = round_circle(64, 0.5).unwrap();
    let c = classify(&m, &e, &AmbientStructure::sasaki_einstein(1, 0.0).unwrap(), &ClassifyTolerances::default())
        .unwrap();
    assert_eq!(c.legendrian.status, Status::Fail);
    assert_eq!(c.special_legendrian.status, Status::Fail);
}

fn max_curvature(m: &SimplicialComplex, e: &Embedding) -> f64 {
    let g = MetricData::induced(m, e).unwrap();
    mean_curvature(m, e, &g)
        .unwrap()
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

#[test]
fn mean_curvature_separates_minimal_from_round() {
    let (m, e) = clifford_circle(128).unwrap();
    assert!(max_curvature(&m, &e) < 1e-3);
    let h: Vec<f64> = [16usize, 32, 64]
        .iter()
        .map(|&n| {
            let (m, e) = clifford_torus(n, n).unwrap();
            max_curvature(&m, &e)
        })
        .collect();
    assert!(h[0] / h[1] > 3.5 && h[1] / h[2] > 3.5, "{h:?}");
    // radius ρ in S³ has spherical mean curvature √(1−ρ²)/ρ
    let (m, e) = round_circle(128, 0.5).unwrap();
    let h = max_curvature(&m, &e);
    assert!((h - 3f64.sqrt()).abs() < 1e-2, "{h}");
}

#[test]
fn phase_gradient_follows_mean_curvature() {
    let s = torus_structure();
    let mut clifford = Vec::new();
    let mut perturbed = Vec::new();
    for n in [16usize, 32, 64] {
        let (m, e) = clifford_torus(n, n).unwrap();
        let r = check_phase_curvature_relation(&m, &e, &s).unwrap();
        assert!(r.lhs_max < 1e-12);
        clifford.push(r.max_residual);
        let (m, y) = perturbed_torus(n, 4, 1e-2);
        let r = check_phase_curvature_relation(&m, &y, &s).unwrap();
        assert!(r.lhs_max > 1e-3);
        perturbed.push(r.max_residual);
    }
    for w in [&clifford, &perturbed] {
        assert!(w[0] / w[1] > 3.5 && w[1] / w[2] > 3.5, "{w:?}");
    }
}

#[test]
fn identification_of_reeb_and_zero_fields() {
    let (m, e) = clifford_torus(10, 10).unwrap();
    let s = torus_structure();
    let c = normal_identification(&m, &e, &s, &NormalField::reeb(&e, &s)).unwrap();
    assert!(c.f.iter().all(|f| (f - 1.0).abs() < 1e-14));
    assert!(c.alpha.iter().all(|a| a.abs() < 1e-12));
    let z = normal_identification(&m, &e, &s, &NormalField::zeros(e.n_vertices(), 6)).unwrap();
    assert!(z.f.iter().chain(&z.alpha).all(|&x| x == 0.0));
    assert!(normal_identification(&m, &e, &s, &NormalField::zeros(3, 6)).is_err());
}

#[test]
fn identification_round_trip() {
    let (m, e) = clifford_torus(12, 12).unwrap();
    let s = torus_structure();
    let o = ops(&m, &e);
    let fr = NormalFrames::compute(&m, &e).unwrap();
    let v = NormalField::smooth_random(&fr, &e, 5, 0.1);
    let c = normal_identification(&m, &e, &s, &v).unwrap();
    let w = inverse_identification(&m, &e, &s, &fr, (&o.star[0], &o.star[1]), &c, false).unwrap();
    assert!(v.max_distance(&w) < 1e-5 * v.max_norm(), "{}", v.max_distance(&w));
    let bad = NormalCochains { f: vec![0.0; 2], alpha: c.alpha.clone() };
    assert!(inverse_identification(&m, &e, &s, &fr, (&o.star[0], &o.star[1]), &bad, false).is_err());
}

#[test]
fn frames_are_orthonormal_and_normal() {
    let (m, e) = clifford_torus(8, 8).unwrap();
    let fr = NormalFrames::compute(&m, &e).unwrap();
    assert_eq!(fr.n_coords(), 3 * 64);
    let v = NormalField::random(&fr, 3, 1.0);
    assert!(fr.tangential_defect(&e, &v) < 1e-12);
    for i in 0..e.n_vertices() {
        let x = e.point(i);
        for nu in &fr.normal[i] {
            assert!(nu.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-14);
            assert!((nu.iter().map(|a| a * a).sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn exponential_map() {
    let (m, e) = clifford_circle(32).unwrap();
    let fr = NormalFrames::compute(&m, &e).unwrap();
    let v = NormalField::random(&fr, 1, 0.1);
    let y0 = exp_deform(&m, &e, &v, 0.0).unwrap();
    assert!(e.flat().iter().zip(y0.flat()).all(|(a, b)| (a - b).abs() < 1e-15));
    let y = exp_deform(&m, &e, &v, 1.0).unwrap();
    assert!(y.max_sphere_defect() < 1e-14);
    let big = NormalField::random(&fr, 1, 10.0 * MAX_NORMAL_STEP);
    assert!(exp_deform(&m, &e, &big, 1.0).is_err());
    assert!(exp_deform(&m, &e, &v, f64::NAN).is_err());
}

#[test]
fn special_legendrian_moduli_on_small_meshes() {
    let t = ModuliTolerances::default();
    let (m, e) = clifford_circle(128).unwrap();
    let r = moduli_tangent(OperatorKind::SpecialLegendrian, &ops(&m, &e), 2.0, &t, &opts()).unwrap();
    assert!(r.matches, "{r:?}");
    let (m, e) = clifford_torus(16, 16).unwrap();
    let o = ops(&m, &e);
    for kind in [OperatorKind::SpecialLegendrian, OperatorKind::Transverse] {
        let r = moduli_tangent(kind, &o, 0.0, &t, &opts()).unwrap();
        assert!(r.matches, "{kind}: {r:?}");
    }
    let bad = ModuliTolerances { cluster_sigma: 0.0, ..t };
    assert!(moduli_tangent(OperatorKind::SpecialLegendrian, &o, 3.0, &bad, &opts()).is_err());
}

#[test]
fn image_of_d1_is_orthogonal_to_the_cokernel() {
    let (m, e) = clifford_torus(8, 8).unwrap();
    let o = ops(&m, &e);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for kind in OperatorKind::ALL {
        let a = assemble_operator(kind, &o, 3.0).unwrap();
        let d1 = a.d1_weighted(&o).unwrap();
        let co = kernel(&a.d1_adjoint(&o).unwrap(), KernelTol::Relative(1e-8), &opts()).unwrap();
        let x: Vec<f64> = (0..d1.dom_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = d1.factor().unwrap().weak(&x);
        let scale = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for b in &co.basis {
            let ip: f64 = y.iter().zip(b).map(|(p, q)| p * q).sum();
            assert!(ip.abs() < 1e-8 * scale, "{kind}: {ip}");
        }
    }
}

#[test]
fn operator_kind_names_round_trip() {
    for kind in OperatorKind::ALL {
        assert_eq!(kind.name().parse::<OperatorKind>().unwrap(), kind);
    }
    assert_eq!("sl".parse::<OperatorKind>().unwrap(), OperatorKind::SpecialLegendrian);
    assert!("bogus".parse::<OperatorKind>().is_err());
}

#[test]
fn linearization_remainders_are_quadratic() {
    let (m, e) = clifford_circle(128).unwrap();
    let s = AmbientStructure::sasaki_einstein(1, 0.0).unwrap();
    let fr = NormalFrames::compute(&m, &e).unwrap();
    let v = NormalField::smooth_random(&fr, &e, 1, 1.0);
    let r = linearization_check(&m, &e, &s, OperatorKind::SpecialLegendrian, &v, &[1e-2, 5e-3, 2.5e-3]).unwrap();
    // remainder/t² is constant when the remainder is quadratic
    assert!(r.variation < 0.05, "{:?}", r.ratios);
    assert!(r.remainders[0] / r.remainders[2] > 15.0, "{:?}", r.remainders);
}

#[test]
fn newton_on_exact_and_far_inputs() {
    let (m, e) = clifford_circle(128).unwrap();
    let s = circle_special();
    let r = newton_green_correct(&m, &e, &s, OperatorKind::SpecialLegendrian, &NewtonOptions::default()).unwrap();
    assert!(r.converged);
    assert_eq!(r.iterations, 0);
    assert_eq!(r.embedding, e);
    let fr = NormalFrames::compute(&m, &e).unwrap();
    let y = exp_deform(&m, &e, &NormalField::random(&fr, 2, 0.5), 1.0).unwrap();
    let far = newton_green_correct(&m, &y, &s, OperatorKind::SpecialLegendrian, &NewtonOptions::default());
    assert!(far.map(|r| !r.converged).unwrap_or(true));
    let bad = NewtonOptions { tol: 0.0, ..NewtonOptions::default() };
    assert!(newton_green_correct(&m, &e, &s, OperatorKind::SpecialLegendrian, &bad).is_err());
}

#[test]
fn newton_recovers_a_small_perturbation() {
    let (m, e) = clifford_circle(128).unwrap();
    let s = circle_special();
    let fr = NormalFrames::compute(&m, &e).unwrap();
    let y = exp_deform(&m, &e, &NormalField::smooth_random(&fr, &e, 4, 1e-2), 1.0).unwrap();
    let r = newton_green_correct(&m, &y, &s, OperatorKind::SpecialLegendrian, &NewtonOptions::default()).unwrap();
    assert!(r.converged, "{:?}", r.log);
    assert!(*r.log.last().unwrap() < 1e-10);
    let c = classify(&m, &r.embedding, &s, &ClassifyTolerances::default()).unwrap();
    assert_eq!(c.special_legendrian.status, Status::Pass);
}

#[test]
fn continuation_with_zero_step_stays_put() {
    let (m, e) = clifford_torus(12, 12).unwrap();
    let s = torus_structure();
    let p = continuation(&m, &e, &s, PathDirection::Harmonic(0), 0.0, 2, &NewtonOptions::default(), &opts()).unwrap();
    assert!(p.error.is_none(), "{:?}", p.error);
    for y in &p.embeddings {
        assert!((0..e.n_vertices())
            .all(|i| e.point(i).iter().zip(y.point(i)).all(|(a, b)| (a - b).abs() < 1e-12)));
    }
    let first = &p.records[0];
    assert!(p.records.iter().all(|r| (r.res_eta - first.res_eta).abs() < 1e-12));
    assert!(continuation(&m, &e, &s, PathDirection::Reeb, f64::INFINITY, 2, &NewtonOptions::default(), &opts()).is_err());
}

#[test]
fn reeb_path_keeps_the_legendrian_condition() {
    let (m, e) = clifford_torus(12, 12).unwrap();
    let s = torus_structure();
    let p = continuation(&m, &e, &s, PathDirection::Reeb, 0.05, 3, &NewtonOptions::default(), &opts()).unwrap();
    assert!(p.error.is_none(), "{:?}", p.error);
    assert_eq!(p.records.len(), 4);
    let first = &p.records[0];
    assert!(p.records.iter().all(|r| (r.res_eta - first.res_eta).abs() < 1e-10), "{:?}", p.records);
    assert!(p.csv().lines().count() >= 4);
}
