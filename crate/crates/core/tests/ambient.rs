use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sasaki_deform::ambient::{
    identity_check, j_apply, omega0, sample_sphere, sample_tangent, AmbientStructure, ALGEBRAIC_TOL,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn eta_examples() {
    let s = AmbientStructure::sasaki_einstein(1, 0.0).unwrap();
    let mut r = rng(1);
    for _ in 0..10 {
        let x = sample_sphere(&mut r, 4);
        assert!((s.eta(&x, &j_apply(&x)).unwrap() - 1.0).abs() < 1e-15);
        assert!(s.eta(&x, &x).unwrap().abs() < 1e-15);
        let xi = s.xi(&x).unwrap();
        assert!((s.eta(&x, &xi).unwrap() - 1.0).abs() < 1e-15);
    }
    let x = [1.0, 0.0, 0.0, 0.0];
    assert_eq!(s.eta(&x, &[0.0, 0.0, 1.0, 0.0]).unwrap(), 0.0);
    assert!(s.eta(&[0.0; 4], &x).is_err());
    assert!(s.eta(&[1.0, 0.0], &x).is_err());
}

#[test]
fn psi_is_alternating_and_multilinear() {
    let s = AmbientStructure::new(2, 3.0, 0.4).unwrap();
    let mut r = rng(2);
    let x = sample_sphere(&mut r, 6);
    let u = sample_tangent(&mut r, &x);
    let v = sample_tangent(&mut r, &x);
    let a = s.psi(&x, &[&u, &v]).unwrap();
    let b = s.psi(&x, &[&v, &u]).unwrap();
    assert!((a + b).norm() < 1e-15);
    let cu: Vec<f64> = u.iter().map(|t| 2.5 * t).collect();
    assert!((s.psi(&x, &[&cu, &v]).unwrap() - 2.5 * a).norm() < 1e-14);
    assert!(s.psi(&x, &[&u]).is_err());
}

#[test]
fn omega_t_examples() {
    let s = AmbientStructure::sasaki_einstein(2, 0.0).unwrap();
    let mut r = rng(3);
    for _ in 0..10 {
        let x = sample_sphere(&mut r, 6);
        let u = sample_tangent(&mut r, &x);
        assert!(s.omega_t(&x, &u, &u).unwrap().abs() < 1e-15);
        let xi = s.xi(&x).unwrap();
        assert!(s.omega_t(&x, &u, &xi).unwrap().abs() < 1e-15);
    }
}

#[test]
fn omega_t_is_half_d_eta_by_finite_differences() {
    // ω^T(u, v) = ½ dη(u, v) from η integrated around a small parallelogram on the sphere
    let s = AmbientStructure::sasaki_einstein(1, 0.0).unwrap();
    let mut r = rng(4);
    let x = sample_sphere(&mut r, 4);
    let u = sample_tangent(&mut r, &x);
    let v = sample_tangent(&mut r, &x);
    let exact = s.omega_t(&x, &u, &v).unwrap();
    let loop_integral = |h: f64| {
        let p = |a: f64, b: f64| -> Vec<f64> {
            let y: Vec<f64> = (0..4).map(|i| x[i] + a * u[i] + b * v[i]).collect();
            let n = y.iter().map(|t| t * t).sum::<f64>().sqrt();
            y.into_iter().map(|t| t / n).collect()
        };
        let corners = [p(-h, -h), p(h, -h), p(h, h), p(-h, h)];
        let mut acc = 0.0;
        for k in 0..4 {
            let (a, b) = (&corners[k], &corners[(k + 1) % 4]);
            let mid: Vec<f64> = a.iter().zip(b).map(|(p, q)| 0.5 * (p + q)).collect();
            let d: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
            acc += s.eta(&mid, &d).unwrap();
        }
        0.5 * acc / (4.0 * h * h)
    };
    let errs: Vec<f64> = [1e-2, 5e-3, 2.5e-3].iter().map(|&h| (loop_integral(h) - exact).abs()).collect();
    assert!(errs[2] < 1e-4, "{errs:?}");
    assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
}

#[test]
fn theta_period_leaves_evaluators_fixed() {
    let s = AmbientStructure::new(2, 3.0, 0.7).unwrap();
    let t = s.with_theta(0.7 + 2.0 * PI);
    let mut r = rng(5);
    for _ in 0..10 {
        let x = sample_sphere(&mut r, 6);
        let u = sample_tangent(&mut r, &x);
        let v = sample_tangent(&mut r, &x);
        let w = sample_tangent(&mut r, &x);
        assert!((s.psi(&x, &[&u, &v]).unwrap() - t.psi(&x, &[&u, &v]).unwrap()).norm() < 1e-14);
        assert!((s.big_omega(&x, &[&u, &v, &w]).unwrap() - t.big_omega(&x, &[&u, &v, &w]).unwrap()).norm() < 1e-14);
        assert_eq!(s.eta(&x, &u).unwrap(), t.eta(&x, &u).unwrap());
    }
}

#[test]
fn cone_form_is_the_complex_volume_form() {
    for n in [1usize, 2] {
        let s = AmbientStructure::sasaki_einstein(n, 0.0).unwrap();
        let m = 2 * n + 2;
        let mut r = rng(6 + n as u64);
        for _ in 0..10 {
            let x: Vec<f64> = sample_sphere(&mut r, m).into_iter().map(|t| 1.7 * t).collect();
            let vs: Vec<Vec<f64>> = (0..=n).map(|_| sample_sphere(&mut r, m)).collect();
            let refs: Vec<&[f64]> = vs.iter().map(|v| v.as_slice()).collect();
            let a = s.big_omega(&x, &refs).unwrap();
            let b = omega0(&refs);
            assert!((a - b).norm() < 1e-10 * b.norm().max(1.0), "{a} vs {b}");
        }
    }
}

#[test]
fn euler_contraction_recovers_r_kappa_psi() {
    let s = AmbientStructure::new(2, 2.2, 0.3).unwrap();
    let mut r = rng(9);
    for radius in [0.5, 1.0, 2.0] {
        let x: Vec<f64> = sample_sphere(&mut r, 6).into_iter().map(|t| radius * t).collect();
        let u = sample_tangent(&mut r, &x);
        let v = sample_tangent(&mut r, &x);
        let lhs = s.big_omega(&x, &[&x, &u, &v]).unwrap();
        let rhs = s.psi(&x, &[&u, &v]).unwrap() * radius.powf(s.kappa);
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm().max(1.0));
    }
    assert!(s.big_omega(&[0.0; 6], &[&[0.0; 6], &[0.0; 6], &[0.0; 6]]).is_err());
}

#[test]
fn d_homothety_parameters() {
    let s = AmbientStructure::new(2, 5.0, 0.0).unwrap();
    assert_eq!(s.d_homothety(1.0).unwrap(), s);
    assert!(s.d_homothety(0.0).is_err());
    assert!(s.d_homothety(-1.0).is_err());
    let a = s.kappa / 3.0;
    let t = s.d_homothety(a).unwrap();
    assert!((t.kappa - 3.0).abs() < 1e-15);
    // η_a = aη and ξ_a = ξ/a
    let mut r = rng(10);
    let x = sample_sphere(&mut r, 6);
    let v = sample_tangent(&mut r, &x);
    assert!((t.eta(&x, &v).unwrap() - a * s.eta(&x, &v).unwrap()).abs() < 1e-14);
    let (xs, xt) = (s.xi(&x).unwrap(), t.xi(&x).unwrap());
    assert!(xs.iter().zip(&xt).all(|(p, q)| (p / a - q).abs() < 1e-14));
}

#[test]
fn homothetic_structure_satisfies_the_einstein_weight_identity() {
    // dψ_a = (n+1)√−1 η_a ∧ ψ_a for a = κ/(n+1)
    let s = AmbientStructure::new(2, 5.0, 0.0).unwrap();
    let t = s.d_homothety(5.0 / 3.0).unwrap();
    let r = identity_check(&t, 50, 3, 1e-3).unwrap();
    let e = r.entries.iter().find(|e| e.identity == "d_psi_equals_kappa_i_eta_psi").unwrap();
    assert!(e.passed, "{e:?}");
    assert!(r.passed);
}

#[test]
fn standard_structures_pass_identity_check() {
    for (n, kappa) in [(1usize, 2.0), (2, 3.0), (2, 0.7)] {
        let s = AmbientStructure::new(n, kappa, 0.0).unwrap();
        let r = identity_check(&s, 100, 11, 1e-3).unwrap();
        assert!(r.passed, "n={n} κ={kappa}: {:?}", r.entries);
        for e in &r.entries {
            if e.kind == "algebraic" {
                assert!(e.max_residual < ALGEBRAIC_TOL);
            } else if let Some(order) = e.observed_order {
                assert!((1.8..=2.2).contains(&order), "{e:?}");
            }
        }
        let reeb = r.entries.iter().find(|e| e.identity.contains("eta_xi")).unwrap();
        assert!(reeb.max_residual < 1e-14);
    }
}

#[test]
fn identity_check_is_deterministic() {
    let s = AmbientStructure::sasaki_einstein(2, 0.0).unwrap();
    let a = serde_json::to_string(&identity_check(&s, 20, 5, 1e-3).unwrap()).unwrap();
    let b = serde_json::to_string(&identity_check(&s, 20, 5, 1e-3).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn identity_check_rejects_bad_arguments() {
    let s = AmbientStructure::sasaki_einstein(1, 0.0).unwrap();
    assert!(identity_check(&s, 0, 1, 1e-3).is_err());
    assert!(identity_check(&s, 10, 1, 0.0).is_err());
    assert!(identity_check(&s, 10, 1, 0.5).is_err());
    assert!(AmbientStructure::new(0, 1.0, 0.0).is_err());
    assert!(AmbientStructure::new(2, f64::NAN, 0.0).is_err());
}
