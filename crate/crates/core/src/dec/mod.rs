//! Discrete exterior calculus on Whitney forms.

mod hodge;
mod ops;
mod spectra;
pub mod whitney;

pub use hodge::{cg, hodge_decompose, HodgeParts};
pub use ops::FormOperators;
pub use spectra::{eigen_cluster, harmonic_basis, kernel_dim, EigenPair, DEFAULT_HARMONIC_TOL, DEFAULT_WINDOW};
