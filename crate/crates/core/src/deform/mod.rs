//! Pullback residuals, phases, normal fields, linearized operators, moduli and continuation.

mod block;
mod map;
mod moduli;
mod newton;
mod normal;
mod phase;
mod pullback;
pub mod quadrature;

pub use block::{assemble_operator, AssembledOperator, BlockOperator, OperatorKind, Prim, Term};
pub use map::{components, evaluate, fd_jacobian_column, hat_pairing, jacobian, Component, Jacobian, MapValue};
pub use moduli::{moduli_tangent, ClusterInfo, ModuliReport, ModuliTolerances};
pub use newton::{
    continuation, linearization_check, newton_green_correct, transverse_kernel, DeformationPath,
    LinearizationReport, NewtonOptions, NewtonResult, PathDirection, StepRecord,
};
pub use normal::{
    coord_selector, exp_deform, identification_matrix, identification_norm, inverse_identification, normal_identification,
    NormalCochains, NormalField, NormalFrames, IDENTIFICATION_REGULARIZATION, MAX_NORMAL_STEP,
};
pub use phase::{
    ambient_gradients, check_phase_curvature_relation, classify, mean_curvature, phase_extract, wrap_angle,
    Classification, ClassifyTolerances, PhaseCurvatureReport, PhaseReport, Status, Verdict, MIN_PHASE_MODULUS,
};
pub use pullback::{pullback, pullback_exact, PulledForm, PullbackResidual};
