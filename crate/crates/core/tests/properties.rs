use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sasaki_deform::ambient::{j_apply, sample_sphere, sample_tangent, AmbientStructure};
use sasaki_deform::dec::{hodge_decompose, FormOperators};
use sasaki_deform::deform::{
    inverse_identification, normal_identification, wrap_angle, NormalField, NormalFrames,
};
use sasaki_deform::linalg::IterOptions;
use sasaki_deform::mesh::{clifford_circle, clifford_torus, refine};
use sasaki_deform::MetricData;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn boundary_of_boundary_vanishes(nx in 3usize..12, ny in 3usize..12, refinements in 0usize..2) {
        let (mut m, mut e) = clifford_torus(nx, ny).unwrap();
        for _ in 0..refinements {
            (m, e) = refine(&m, &e).unwrap();
        }
        prop_assert!(m.boundary_squares_vanish());
        prop_assert!(m.coboundary(1).matmul(&m.coboundary(0)).is_exact_zero());
        prop_assert_eq!(m.betti_numbers(), vec![1, 2, 1]);
        prop_assert_eq!(m.euler_characteristic(), 0);
    }

    #[test]
    fn circle_topology(n in 3usize..200) {
        let (m, e) = clifford_circle(n).unwrap();
        prop_assert_eq!(m.betti_numbers(), vec![1, 1]);
        prop_assert!(e.max_sphere_defect() < 1e-14);
        let (r, _) = refine(&m, &e).unwrap();
        prop_assert_eq!(r.betti_numbers(), vec![1, 1]);
    }

    #[test]
    fn induced_volumes_are_positive(nx in 3usize..16, ny in 3usize..16) {
        let (m, e) = clifford_torus(nx, ny).unwrap();
        let g = MetricData::induced(&m, &e).unwrap();
        for k in 0..=2 {
            prop_assert!(g.volumes[k].iter().all(|&v| v > 0.0));
        }
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn hodge_parts_are_orthogonal(n in 4usize..10, k in 0usize..3, seed in any::<u64>()) {
        let (m, e) = clifford_torus(n, n).unwrap();
        let o = FormOperators::assemble(&m, &MetricData::induced(&m, &e).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..o.dim(k)).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let p = hodge_decompose(&o, k, &w, &IterOptions::default()).unwrap();
        prop_assert!(p.orthogonality < 1e-8);
        prop_assert!(p.reassembly_error < 1e-10);
        prop_assert_eq!(p.harmonic_dim, m.betti_numbers()[k]);
    }

    #[test]
    fn identification_round_trip(n in 6usize..12, seed in any::<u64>(), amplitude in 1e-3f64..0.2) {
        let (m, e) = clifford_torus(n, n).unwrap();
        let s = AmbientStructure::sasaki_einstein(2, 0.0).unwrap();
        let o = FormOperators::assemble(&m, &MetricData::induced(&m, &e).unwrap()).unwrap();
        let fr = NormalFrames::compute(&m, &e).unwrap();
        let v = NormalField::smooth_random(&fr, &e, seed, amplitude);
        let c = normal_identification(&m, &e, &s, &v).unwrap();
        let w = inverse_identification(&m, &e, &s, &fr, (&o.star[0], &o.star[1]), &c, false).unwrap();
        prop_assert!(v.max_distance(&w) < 1e-5 * v.max_norm());
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn ambient_identities_at_random_points(
        n in 1usize..4,
        kappa in 0.2f64..6.0,
        theta in -PI..PI,
        radius in 0.3f64..3.0,
        seed in any::<u64>(),
    ) {
        let s = AmbientStructure::new(n, kappa, theta).unwrap();
        let m = 2 * n + 2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = sample_sphere(&mut rng, m);
        // η(ξ) = 1, η(x) = 0, i_ξ ω^T = 0
        let xi = s.xi(&x).unwrap();
        prop_assert!((s.eta(&x, &xi).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!(s.eta(&x, &x).unwrap().abs() < 1e-14);
        let u = sample_tangent(&mut rng, &x);
        prop_assert!(s.omega_t(&x, &xi, &u).unwrap().abs() < 1e-12);
        // ψ is horizontal: i_ξ ψ = 0
        let vs: Vec<Vec<f64>> = (1..n).map(|_| sample_tangent(&mut rng, &x)).collect();
        let mut args: Vec<&[f64]> = vec![&xi];
        args.extend(vs.iter().map(|v| v.as_slice()));
        prop_assert!(s.psi(&x, &args).unwrap().norm() < 1e-12);
        // i_{r∂r} Ω = r^κ ψ on the cone
        let rx: Vec<f64> = x.iter().map(|t| radius * t).collect();
        let ws: Vec<Vec<f64>> = (0..n).map(|_| sample_tangent(&mut rng, &x)).collect();
        let mut cone: Vec<&[f64]> = vec![&rx];
        cone.extend(ws.iter().map(|v| v.as_slice()));
        let lhs = s.big_omega(&rx, &cone).unwrap();
        let wrefs: Vec<&[f64]> = ws.iter().map(|v| v.as_slice()).collect();
        let rhs = s.psi(&rx, &wrefs).unwrap() * radius.powf(kappa);
        prop_assert!((lhs - rhs).norm() < 1e-10 * rhs.norm().max(1.0));
    }

    #[test]
    fn phase_shift_is_periodic(theta in -10.0f64..10.0, turns in -3i32..4, seed in any::<u64>()) {
        let s = AmbientStructure::new(2, 3.0, theta).unwrap();
        let t = s.with_theta(theta + 2.0 * PI * turns as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = sample_sphere(&mut rng, 6);
        let u = sample_tangent(&mut rng, &x);
        let v = sample_tangent(&mut rng, &x);
        let a = s.psi(&x, &[&u, &v]).unwrap();
        let b = t.psi(&x, &[&u, &v]).unwrap();
        prop_assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
        prop_assert!(wrap_angle(theta).abs() <= PI);
    }

    #[test]
    fn complex_structure_squares_to_minus_one(seed in any::<u64>(), m in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = sample_sphere(&mut rng, 2 * m);
        let jjx = j_apply(&j_apply(&x));
        prop_assert!(jjx.iter().zip(&x).all(|(a, b)| (a + b).abs() < 1e-15));
    }

    #[test]
    fn homothety_scales_eta(a in 0.1f64..10.0, seed in any::<u64>()) {
        let s = AmbientStructure::sasaki_einstein(2, 0.0).unwrap();
        let t = s.d_homothety(a).unwrap();
        prop_assert!((t.kappa - s.kappa / a).abs() < 1e-12 * s.kappa);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = sample_sphere(&mut rng, 6);
        let u = sample_tangent(&mut rng, &x);
        prop_assert!((t.eta(&x, &u).unwrap() - a * s.eta(&x, &u).unwrap()).abs() < 1e-12 * a);
    }
}
