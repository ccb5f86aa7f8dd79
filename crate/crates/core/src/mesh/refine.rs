//! Midpoint subdivision with reprojection to the unit sphere.

use crate::error::Result;
use crate::mesh::{Embedding, SimplicialComplex};

/// One level of midpoint subdivision. Edge `e` contributes the new vertex `V + e`,
/// placed at the chord midpoint pushed back onto the sphere.
pub fn refine(mesh: &SimplicialComplex, emb: &Embedding) -> Result<(SimplicialComplex, Embedding)> {
    emb.check_compatible(mesh)?;
    let nv = mesh.n_vertices();
    let edges = mesh.simplices(1);
    let mut pts = emb.points();
    for e in edges {
        let a = emb.point(e[0]);
        let b = emb.point(e[1]);
        let mut m: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
        let r = m.iter().map(|v| v * v).sum::<f64>().sqrt();
        m.iter_mut().for_each(|v| *v /= r);
        pts.push(m);
    }
    let mid = |a: usize, b: usize| nv + mesh.find(&[a, b]).expect("edge of a simplex").0;
    let mut new_edges = Vec::with_capacity(2 * edges.len() + 3 * mesh.n_simplices(2));
    for (k, e) in edges.iter().enumerate() {
        new_edges.push(vec![e[0], nv + k]);
        new_edges.push(vec![nv + k, e[1]]);
    }
    let tables = if mesh.dim() == 1 {
        vec![new_edges]
    } else {
        let mut tris = Vec::with_capacity(4 * mesh.n_simplices(2));
        for t in mesh.simplices(2) {
            let (a, b, c) = (t[0], t[1], t[2]);
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            new_edges.push(vec![ab, bc]);
            new_edges.push(vec![bc, ca]);
            new_edges.push(vec![ca, ab]);
            tris.push(vec![a, ab, ca]);
            tris.push(vec![ab, b, bc]);
            tris.push(vec![ca, bc, c]);
            tris.push(vec![ab, bc, ca]);
        }
        vec![new_edges, tris]
    };
    let total = pts.len();
    let refined = SimplicialComplex::from_tables(mesh.dim(), total, tables)?;
    let emb2 = Embedding::new(emb.ambient_dim(), pts, emb.sphere_tol())?;
    Ok((refined, emb2))
}
