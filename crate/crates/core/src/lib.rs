//! Discrete deformation theory of special Legendrian submanifolds in spheres.
//!
//! Modules, bottom-up:
//! - [`mesh`]: oriented simplicial curves and surfaces on unit spheres, refinement, chord metrics.
//! - [`dec`]: Whitney-form Hodge stars, codifferentials, Laplacians, Hodge decomposition, spectra.
//! - [`ambient`]: closed-form contact and transverse Calabi–Yau structures on `S^{2n+1}` and its cone.
//! - [`deform`]: pullback residuals, phases, normal identification, linearized operators,
//!   moduli tangents, Newton–Green correction and continuation.
//!
//! All dense and sparse factorizations run sequentially so repeated runs are bit-identical.

pub mod ambient;
pub mod dec;
pub mod deform;
pub mod error;
pub mod linalg;
pub mod mesh;

pub use error::{Error, Result};
pub use mesh::{Embedding, MetricData, SimplicialComplex};

/// Pins faer to sequential kernels. Called by every entry point that factorizes.
pub fn init_determinism() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}
