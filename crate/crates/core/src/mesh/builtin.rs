//! Builtin meshes: the Clifford circle in S³ and the Clifford torus in S⁵.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::{Embedding, SimplicialComplex, DEFAULT_SPHERE_TOL};

/// Polygon on `t ↦ (e^{it}, e^{−it})/√2` with `segments` equispaced vertices.
pub fn clifford_circle(segments: usize) -> Result<(SimplicialComplex, Embedding)> {
    if segments < 3 {
        return Err(Error::InvalidMesh(format!("a circle needs at least 3 segments, got {segments}")));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let pts = (0..segments)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / segments as f64;
            let (sn, cs) = t.sin_cos();
            vec![s * cs, s * sn, s * cs, -s * sn]
        })
        .collect();
    let edges = (0..segments).map(|j| vec![j, (j + 1) % segments]).collect();
    let mesh = SimplicialComplex::from_tables(1, segments, vec![edges])?;
    Ok((mesh, Embedding::new(4, pts, DEFAULT_SPHERE_TOL)?))
}

/// Index of grid vertex `(i, j)` on an `n1 × n2` periodic grid.
pub fn grid_index(n1: usize, i: usize, j: usize) -> usize {
    j * n1 + i
}

/// Periodic `n1 × n2` grid triangulation, each square split along its (1,1) diagonal.
/// Oriented so the Clifford torus is calibrated by `Re ψ`.
pub fn torus_complex(n1: usize, n2: usize) -> Result<SimplicialComplex> {
    if n1 < 3 || n2 < 3 {
        return Err(Error::InvalidMesh(format!("torus grid {n1}x{n2} is too small (need at least 3x3)")));
    }
    let v = |i: usize, j: usize| grid_index(n1, i % n1, j % n2);
    let mut edges = Vec::with_capacity(3 * n1 * n2);
    let mut tris = Vec::with_capacity(2 * n1 * n2);
    for j in 0..n2 {
        for i in 0..n1 {
            edges.push(vec![v(i, j), v(i + 1, j)]);
            edges.push(vec![v(i, j), v(i, j + 1)]);
            edges.push(vec![v(i, j), v(i + 1, j + 1)]);
            tris.push(vec![v(i, j), v(i + 1, j + 1), v(i + 1, j)]);
            tris.push(vec![v(i, j), v(i, j + 1), v(i + 1, j + 1)]);
        }
    }
    SimplicialComplex::from_tables(2, n1 * n2, vec![edges, tris])
}

/// Point `(e^{iθ₁}, e^{iθ₂}, e^{−i(θ₁+θ₂)})/√3` of the Clifford torus.
pub fn clifford_torus_point(t1: f64, t2: f64) -> Vec<f64> {
    let s = 1.0 / 3f64.sqrt();
    let (s1, c1) = t1.sin_cos();
    let (s2, c2) = t2.sin_cos();
    let (s3, c3) = (t1 + t2).sin_cos();
    vec![s * c1, s * s1, s * c2, s * s2, s * c3, -s * s3]
}

/// Clifford torus sampled on an `n1 × n2` grid of the angles.
pub fn clifford_torus(n1: usize, n2: usize) -> Result<(SimplicialComplex, Embedding)> {
    let mesh = torus_complex(n1, n2)?;
    let mut pts = vec![Vec::new(); n1 * n2];
    for j in 0..n2 {
        for i in 0..n1 {
            let t1 = 2.0 * PI * i as f64 / n1 as f64;
            let t2 = 2.0 * PI * j as f64 / n2 as f64;
            pts[grid_index(n1, i, j)] = clifford_torus_point(t1, t2);
        }
    }
    Ok((mesh, Embedding::new(6, pts, DEFAULT_SPHERE_TOL)?))
}

/// Small round circle of Euclidean radius `rho` on the great 2-sphere `{x₄ = 0}` of S³.
/// Not minimal for `rho < 1`; used as a control case.
pub fn round_circle(segments: usize, rho: f64) -> Result<(SimplicialComplex, Embedding)> {
    if segments < 3 {
        return Err(Error::InvalidMesh(format!("a circle needs at least 3 segments, got {segments}")));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Parameter(format!("radius must lie in (0, 1], got {rho}")));
    }
    let h = (1.0 - rho * rho).sqrt();
    let pts = (0..segments)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / segments as f64;
            vec![rho * t.cos(), rho * t.sin(), h, 0.0]
        })
        .collect();
    let edges = (0..segments).map(|j| vec![j, (j + 1) % segments]).collect();
    let mesh = SimplicialComplex::from_tables(1, segments, vec![edges])?;
    Ok((mesh, Embedding::new(4, pts, DEFAULT_SPHERE_TOL)?))
}

/// Parses a resolution string: `"256"` or `"64x64"`.
pub fn parse_resolution(s: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    let mut out = Vec::with_capacity(parts.len());
    for p in parts {
        let v: usize = p
            .trim()
            .parse()
            .map_err(|_| Error::Parameter(format!("invalid resolution '{s}'")))?;
        if v < 3 {
            return Err(Error::Parameter(format!("resolution {v} must be at least 3")));
        }
        out.push(v);
    }
    if out.is_empty() || out.len() > 2 {
        return Err(Error::Parameter(format!("invalid resolution '{s}'")));
    }
    Ok(out)
}

/// Builds a builtin by name (`clifford-circle`, `clifford-torus`) at a resolution string.
pub fn by_name(name: &str, res: &str) -> Result<(SimplicialComplex, Embedding)> {
    let r = parse_resolution(res)?;
    match name {
        "clifford-circle" => {
            if r.len() != 1 {
                return Err(Error::Parameter("clifford-circle takes a single resolution".into()));
            }
            clifford_circle(r[0])
        }
        "clifford-torus" => {
            let (a, b) = if r.len() == 1 { (r[0], r[0]) } else { (r[0], r[1]) };
            clifford_torus(a, b)
        }
        other => Err(Error::Parameter(format!("unknown builtin '{other}'"))),
    }
}
