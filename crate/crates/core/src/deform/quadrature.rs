//! Gauss–Legendre rules on `[0, 1]` and collapsed (Duffy) rules on the reference triangle.

/// `m`-point Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    assert!(m >= 1);
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        // Newton iteration on P_m from the Chebyshev guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// Quadrature on the reference n-simplex (`n = 1, 2`): barycentric-free local coordinates
/// `p ∈ ℝⁿ` with weights summing to the simplex measure `1/n!`.
pub fn simplex_rule(n: usize, m: usize) -> Vec<(Vec<f64>, f64)> {
    let g = gauss_legendre(m);
    match n {
        1 => g.into_iter().map(|(x, w)| (vec![x], w)).collect(),
        2 => {
            let mut out = Vec::with_capacity(m * m);
            for &(u, wu) in &g {
                for &(v, wv) in &g {
                    out.push((vec![u, v * (1.0 - u)], wu * wv * (1.0 - u)));
                }
            }
            out
        }
        _ => panic!("simplex rules exist for n = 1, 2"),
    }
}
