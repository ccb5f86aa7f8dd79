//! JSON mesh files.
//!
//! `{ "dim": n, "ambient_dim": 2n+2, "vertices": [[...], ...], "simplices": { "1": [...], "2": [...] } }`
//! with 0-based indices; tuple order is orientation. An optional `"sphere_tol"` overrides the default.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Embedding, SimplicialComplex, DEFAULT_SPHERE_TOL};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshFile {
    dim: usize,
    ambient_dim: usize,
    vertices: Vec<Vec<f64>>,
    simplices: BTreeMap<String, Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sphere_tol: Option<f64>,
}

/// Serializes a mesh and embedding to a JSON string.
pub fn to_json(mesh: &SimplicialComplex, emb: &Embedding) -> Result<String> {
    emb.check_compatible(mesh)?;
    let simplices = (1..=mesh.dim()).map(|k| (k.to_string(), mesh.simplices(k).to_vec())).collect();
    let f = MeshFile {
        dim: mesh.dim(),
        ambient_dim: emb.ambient_dim(),
        vertices: emb.points(),
        simplices,
        sphere_tol: if emb.sphere_tol() == DEFAULT_SPHERE_TOL { None } else { Some(emb.sphere_tol()) },
    };
    serde_json::to_string(&f).map_err(|e| Error::Parse { location: "serialize".into(), message: e.to_string() })
}

/// Parses and validates a JSON mesh.
pub fn from_json(text: &str) -> Result<(SimplicialComplex, Embedding)> {
    let f: MeshFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    if f.ambient_dim != 2 * f.dim + 2 {
        return Err(Error::Parse {
            location: "ambient_dim".into(),
            message: format!("expected 2n+2 = {}, found {}", 2 * f.dim + 2, f.ambient_dim),
        });
    }
    let mut tables = Vec::with_capacity(f.dim);
    for k in 1..=f.dim {
        let t = f.simplices.get(&k.to_string()).ok_or_else(|| Error::Parse {
            location: format!("simplices.{k}"),
            message: format!("missing table of {k}-simplices"),
        })?;
        tables.push(t.clone());
    }
    if let Some(extra) = f.simplices.keys().find(|k| k.parse::<usize>().map_or(true, |v| v == 0 || v > f.dim)) {
        return Err(Error::Parse { location: format!("simplices.{extra}"), message: "unexpected simplex degree".into() });
    }
    let emb = Embedding::new(f.ambient_dim, f.vertices, f.sphere_tol.unwrap_or(DEFAULT_SPHERE_TOL))?;
    let mesh = SimplicialComplex::from_tables(f.dim, emb.n_vertices(), tables)?;
    Ok((mesh, emb))
}

pub fn save(path: &Path, mesh: &SimplicialComplex, emb: &Embedding) -> Result<()> {
    std::fs::write(path, to_json(mesh, emb)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(SimplicialComplex, Embedding)> {
    from_json(&std::fs::read_to_string(path)?)
}
