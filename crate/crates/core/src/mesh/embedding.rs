//! Vertex coordinates on the unit sphere of ℝ^{2n+2} ≅ ℂ^{n+1}.

use crate::error::{Error, Result};
use crate::mesh::SimplicialComplex;

/// Default tolerance for `|‖x‖ − 1|`.
pub const DEFAULT_SPHERE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    ambient_dim: usize,
    coords: Vec<f64>,
    sphere_tol: f64,
}

impl Embedding {
    /// Validates that every point has the ambient dimension and lies on the unit sphere.
    pub fn new(ambient_dim: usize, points: Vec<Vec<f64>>, sphere_tol: f64) -> Result<Self> {
        if ambient_dim < 4 || ambient_dim % 2 != 0 {
            return Err(Error::Validation(format!("ambient dimension {ambient_dim} must be even and at least 4")));
        }
        if !(sphere_tol >= 0.0) {
            return Err(Error::Validation(format!("sphere_tol must be non-negative, got {sphere_tol}")));
        }
        let mut coords = Vec::with_capacity(points.len() * ambient_dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != ambient_dim {
                return Err(Error::Validation(format!(
                    "vertex {i} has {} coordinates, expected {ambient_dim}",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        let e = Embedding { ambient_dim, coords, sphere_tol };
        e.check_sphere()?;
        Ok(e)
    }

    /// Flat coordinate buffer, `ambient_dim` entries per vertex.
    pub fn from_flat(ambient_dim: usize, coords: Vec<f64>, sphere_tol: f64) -> Result<Self> {
        if ambient_dim == 0 || coords.len() % ambient_dim != 0 {
            return Err(Error::Validation("coordinate buffer length is not a multiple of the ambient dimension".into()));
        }
        let pts = coords.chunks(ambient_dim).map(|c| c.to_vec()).collect();
        Self::new(ambient_dim, pts, sphere_tol)
    }

    fn check_sphere(&self) -> Result<()> {
        for i in 0..self.n_vertices() {
            let r = self.point(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            if !r.is_finite() || (r - 1.0).abs() > self.sphere_tol {
                return Err(Error::Validation(format!(
                    "vertex {i} has norm {r}, off the unit sphere by more than {}",
                    self.sphere_tol
                )));
            }
        }
        Ok(())
    }

    /// Checks dimensions against a complex: `ambient_dim = 2n + 2` and one point per vertex.
    pub fn check_compatible(&self, mesh: &SimplicialComplex) -> Result<()> {
        if self.ambient_dim != 2 * mesh.dim() + 2 {
            return Err(Error::Validation(format!(
                "ambient dimension {} does not match 2n+2 = {}",
                self.ambient_dim,
                2 * mesh.dim() + 2
            )));
        }
        if self.n_vertices() != mesh.n_vertices() {
            return Err(Error::Validation(format!(
                "{} points for {} vertices",
                self.n_vertices(),
                mesh.n_vertices()
            )));
        }
        Ok(())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Complex dimension `n + 1` of the ambient ℂ^{n+1}.
    pub fn complex_dim(&self) -> usize {
        self.ambient_dim / 2
    }

    pub fn n_vertices(&self) -> usize {
        self.coords.len() / self.ambient_dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.ambient_dim..(i + 1) * self.ambient_dim]
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.coords.chunks(self.ambient_dim).map(|c| c.to_vec()).collect()
    }

    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn sphere_tol(&self) -> f64 {
        self.sphere_tol
    }

    /// Maximum `|‖x‖ − 1|` over vertices.
    pub fn max_sphere_defect(&self) -> f64 {
        (0..self.n_vertices())
            .map(|i| (self.point(i).iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}
