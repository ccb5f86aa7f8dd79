use std::f64::consts::PI;

use sasaki_deform::mesh::builtin::{by_name, parse_resolution, round_circle, torus_complex};
use sasaki_deform::mesh::io::{from_json, load, save, to_json};
use sasaki_deform::mesh::{clifford_circle, clifford_torus, flat_unit_torus, refine, DEFAULT_SPHERE_TOL};
use sasaki_deform::{Embedding, Error, MetricData, SimplicialComplex};

#[test]
fn circle_counts_and_unit_points() {
    let (m, e) = clifford_circle(4).unwrap();
    assert_eq!(m.n_vertices(), 4);
    assert_eq!(m.n_simplices(1), 4);
    for i in 0..4 {
        let r: f64 = e.point(i).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((r - 1.0).abs() < 1e-15);
    }
}

#[test]
fn circle_chord_length_approaches_two_pi() {
    let (m, e) = clifford_circle(256).unwrap();
    let g = MetricData::induced(&m, &e).unwrap();
    let total: f64 = g.volumes[1].iter().sum();
    assert!((total - 2.0 * PI).abs() < 1e-3, "total length {total}");
    // exact chord of a unit-speed great circle
    let chord = 2.0 * (PI / 256.0).sin();
    assert!(g.volumes[1].iter().all(|l| (l - chord).abs() < 1e-14));
}

#[test]
fn degenerate_builders_fail() {
    assert!(matches!(clifford_circle(2), Err(Error::InvalidMesh(_))));
    assert!(matches!(clifford_torus(2, 5), Err(Error::InvalidMesh(_))));
    assert!(matches!(torus_complex(3, 2), Err(Error::InvalidMesh(_))));
}

#[test]
fn torus_euler_characteristic_and_betti() {
    let m = torus_complex(3, 3).unwrap();
    assert_eq!((m.n_vertices(), m.n_simplices(1), m.n_simplices(2)), (9, 27, 18));
    assert_eq!(m.euler_characteristic(), 0);
    assert_eq!(m.betti_numbers(), vec![1, 2, 1]);
    let (c, _) = clifford_circle(5).unwrap();
    assert_eq!(c.betti_numbers(), vec![1, 1]);
}

#[test]
fn torus_vertices_on_sphere() {
    let (_, e) = clifford_torus(64, 64).unwrap();
    assert_eq!(e.ambient_dim(), 6);
    assert!(e.max_sphere_defect() < 1e-15);
}

#[test]
fn torus_area_matches_flat_determinant() {
    // det g = 1/3 in angle coordinates, so area = (2π)²/√3
    let (m, e) = clifford_torus(64, 64).unwrap();
    let g = MetricData::induced(&m, &e).unwrap();
    let exact = 4.0 * PI * PI / 3f64.sqrt();
    assert!((g.total_volume - exact).abs() < 0.01 * exact);
}

#[test]
fn torus_grams_approach_parametrization() {
    // edges (1,1) and (1,0) in grid units of 2π/n: |∂₁γ|² = 2/3, ⟨∂₁γ, ∂₂γ⟩ = 1/3
    let exact = [2.0, 1.0, 1.0, 2.0 / 3.0];
    let mut errs = Vec::new();
    for n in [16usize, 32, 64] {
        let (m, e) = clifford_torus(n, n).unwrap();
        let g = MetricData::induced(&m, &e).unwrap();
        let u = (2.0 * PI / n as f64).powi(2);
        let err = g.gram[0].iter().zip(exact).map(|(a, b)| (a / u - b).abs()).fold(0.0, f64::max);
        errs.push(err);
    }
    assert!(errs[2] < 1e-2, "{errs:?}");
    assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
}

#[test]
fn regular_square_has_equal_edges() {
    let (m, e) = clifford_circle(4).unwrap();
    let g = MetricData::induced(&m, &e).unwrap();
    assert!(g.volumes[1].iter().all(|l| (l - g.volumes[1][0]).abs() < 1e-15));
    assert!(g.volumes[1].iter().all(|&l| l > 0.0));
}

#[test]
fn refine_counts() {
    let (m, e) = clifford_circle(8).unwrap();
    let (r, re) = refine(&m, &e).unwrap();
    assert_eq!(r.n_simplices(1), 16);
    assert_eq!(re.n_vertices(), 16);
    let (m, e) = clifford_torus(5, 4).unwrap();
    let (v, ed, f) = (m.n_vertices(), m.n_simplices(1), m.n_simplices(2));
    let (r, _) = refine(&m, &e).unwrap();
    assert_eq!((r.n_vertices(), r.n_simplices(1), r.n_simplices(2)), (v + ed, 2 * ed + 3 * f, 4 * f));
    assert!(r.boundary_squares_vanish());
    assert_eq!(r.betti_numbers(), vec![1, 2, 1]);
}

#[test]
fn refined_volumes_converge_at_second_order() {
    for (mut m, mut e) in [clifford_circle(8).unwrap(), clifford_torus(8, 8).unwrap()] {
        let mut vols = Vec::new();
        for _ in 0..4 {
            vols.push(MetricData::induced(&m, &e).unwrap().total_volume);
            (m, e) = refine(&m, &e).unwrap();
        }
        let diffs: Vec<f64> = vols.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        for d in diffs.windows(2) {
            assert!(d[0] / d[1] >= 3.5, "volume differences {diffs:?}");
        }
    }
}

#[test]
fn flat_torus_metric_has_unit_area() {
    let m = torus_complex(8, 8).unwrap();
    let g = flat_unit_torus(&m, 8, 8).unwrap();
    assert!((g.total_volume - 1.0).abs() < 1e-14);
}

#[test]
fn scaled_metric_scales_volumes() {
    let (m, e) = clifford_torus(6, 6).unwrap();
    let g = MetricData::induced(&m, &e).unwrap();
    let a = 5.0 / 3.0;
    let s = g.scaled(a).unwrap();
    assert!((s.total_volume - a * g.total_volume).abs() < 1e-12);
    assert!((s.volumes[1][3] - a.sqrt() * g.volumes[1][3]).abs() < 1e-14);
    assert!(g.scaled(0.0).is_err());
}

#[test]
fn degenerate_simplex_names_the_simplex() {
    let p = vec![1.0, 0.0, 0.0, 0.0];
    let q = vec![0.0, 1.0, 0.0, 0.0];
    let pts = vec![p.clone(), p, q];
    let m = SimplicialComplex::from_tables(1, 3, vec![vec![vec![0, 1], vec![1, 2], vec![2, 0]]]).unwrap();
    let e = Embedding::new(4, pts, DEFAULT_SPHERE_TOL).unwrap();
    match MetricData::induced(&m, &e) {
        Err(Error::SingularMetric { degree: 1, simplex: 0 }) => {}
        other => panic!("expected a singular metric on edge 0, got {other:?}"),
    }
}

#[test]
fn json_round_trip_is_bit_exact() {
    let (m, e) = clifford_torus(5, 7).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    save(&path, &m, &e).unwrap();
    let (m2, e2) = load(&path).unwrap();
    for k in 1..=2 {
        assert_eq!(m.simplices(k), m2.simplices(k));
    }
    assert_eq!(e.flat(), e2.flat());
    assert_eq!(to_json(&m, &e).unwrap(), to_json(&m2, &e2).unwrap());
}

#[test]
fn missing_simplices_is_a_parse_error() {
    let text = r#"{"dim": 1, "ambient_dim": 4, "vertices": [[1,0,0,0]]}"#;
    assert!(matches!(from_json(text), Err(Error::Parse { .. })));
    let text = r#"{"dim": 1, "ambient_dim": 4, "vertices": [[1,0,0,0]], "simplices": {}}"#;
    match from_json(text) {
        Err(Error::Parse { location, .. }) => assert_eq!(location, "simplices.1"),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn off_sphere_vertex_is_a_validation_error() {
    let text = r#"{"dim": 1, "ambient_dim": 4, "sphere_tol": 1e-9,
        "vertices": [[1.2,0,0,0],[0,1,0,0],[0,0,1,0]],
        "simplices": {"1": [[0,1],[1,2],[2,0]]}}"#;
    assert!(matches!(from_json(text), Err(Error::Validation(_))));
}

#[test]
fn resolution_strings() {
    assert_eq!(parse_resolution("256").unwrap(), vec![256]);
    assert_eq!(parse_resolution("64x32").unwrap(), vec![64, 32]);
    assert!(parse_resolution("2").is_err());
    assert!(parse_resolution("a").is_err());
    assert!(by_name("clifford-torus", "8").is_ok());
    assert!(by_name("sphere", "8").is_err());
    assert!(by_name("clifford-circle", "8x8").is_err());
}

#[test]
fn reversed_orientation_negates_the_coboundary() {
    let (m, _) = clifford_circle(6).unwrap();
    let r = m.reversed();
    for (a, b) in m.simplices(1).iter().zip(r.simplices(1)) {
        assert_eq!((a[0], a[1]), (b[1], b[0]));
    }
    let (d, dr) = (m.coboundary(0), r.coboundary(0));
    assert_eq!(d.triplets().len(), dr.triplets().len());
    assert!(d.add(&dr, 1.0, 1.0).is_exact_zero());
    assert_eq!(r.betti_numbers(), m.betti_numbers());
}

#[test]
fn round_circle_rejects_bad_radius() {
    assert!(round_circle(16, 0.0).is_err());
    assert!(round_circle(16, 1.5).is_err());
    assert!(round_circle(16, 0.5).is_ok());
}
