//! Linear algebra infrastructure: sparse matrices, factorizations, eigensolvers.

pub mod dense;
pub mod eigs;
pub mod factor;
pub mod rank;
pub mod sparse;
pub mod weighted;

pub use eigs::{IterOptions, Pencil};
pub use sparse::Csr;
pub use weighted::{KernelResult, KernelTol, WeightedOperator, DENSE_LIMIT};
