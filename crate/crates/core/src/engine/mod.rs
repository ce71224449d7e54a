//! The Lindblad generator and everything computed from it: time evolution,
//! steady states, the uniqueness certificate, and the closed-form residual
//! of the product state.

mod algebra;
mod evolve;
mod generator;
mod integrator;
mod nogo;
mod steady;

use thiserror::Error;

use crate::model::ModelError;
use crate::operators::OperatorError;

pub use algebra::{algebra_closure_dim, algebra_closure_dim_with, generated_algebra_dim, ClosureOptions, RANK_TOL};
pub use evolve::{evolve, evolve_observed, log_time_grid, EvolutionTrace, EvolveOptions, SampleDiagnostics};
pub use generator::{
    apply_liouvillian, build_superoperator, Jump, Liouvillian, Representation, DEFAULT_SUPEROPERATOR_CAP,
};
pub use integrator::IntegratorStats;
pub use nogo::{nogo_residual, NogoResidual, PairCoefficients, NOGO_CROSS_CHECK_TOL};
pub use steady::{
    default_method, kernel_dimension, steady_state, steady_state_with, SteadyMethod, SteadyOptions,
    SteadyStateResult, ZERO_EIGENVALUE_RTOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("Hilbert dimension {dim} exceeds the superoperator cap {cap}")]
    SuperoperatorCap { dim: usize, cap: usize },
    #[error("step size {h:e} underflowed at t = {t}")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("integrator exceeded {max_steps} steps before t = {t}")]
    MaxSteps { t: f64, max_steps: usize },
    #[error("trace drifted by {drift:e} at t = {t}")]
    TraceDrift { t: f64, drift: f64 },
    #[error("invalid sample times: {0}")]
    SampleTimes(String),
    #[error("no eigenvalue within tolerance of zero (smallest |λ| = {smallest:e})")]
    NoZeroEigenvalue { smallest: f64 },
    #[error("kernel vector has vanishing trace; use the long-time method")]
    NonNormalizableKernel,
    #[error("kernel of dimension {dim} has no representative that is a valid state")]
    DegenerateKernel { dim: usize },
    #[error("bordered steady-state system is singular")]
    SingularSystem,
    #[error("steady-state residual {residual:e} exceeds tolerance {tol:e}")]
    Residual { residual: f64, tol: f64 },
    #[error("no convergence by t = {t} (residual {residual:e})")]
    NotConverged { t: f64, residual: f64 },
    #[error("algebra closure did not stabilize within {iterations} iterations")]
    ClosureIterationCap { iterations: usize },
    #[error("{sites} sites exceed the limit of {max}")]
    TooManySites { sites: usize, max: usize },
    #[error("closed form disagrees with the generator by {deviation:e}")]
    CrossCheck { deviation: f64 },
    #[error("eigendecomposition failed to converge")]
    Eigendecomposition,
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
