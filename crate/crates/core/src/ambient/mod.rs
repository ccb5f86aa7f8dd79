//! Closed-form Sasaki and weighted transverse Calabi–Yau structures on spheres and cones.

pub mod forms;
mod identity;
mod structure;

pub use identity::{identity_check, sample_sphere, sample_tangent, IdentityEntry, IdentityReport, ALGEBRAIC_TOL};
pub use structure::{c_n, cdet, j_apply, j_inner, omega0, AmbientStructure};
