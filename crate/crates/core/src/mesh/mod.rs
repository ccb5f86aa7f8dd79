//! Simplicial complexes of closed curves and surfaces embedded in unit spheres.

pub mod builtin;
mod complex;
mod embedding;
pub mod io;
mod metric;
mod refine;

pub use builtin::{clifford_circle, clifford_torus};
pub use complex::SimplicialComplex;
pub use embedding::{Embedding, DEFAULT_SPHERE_TOL};
pub use metric::{flat_unit_torus, MetricData};
pub use refine::refine;
