//! Lindblad dynamics of dissipative interacting qubits.
//!
//! The crate builds the generator `L[ρ] = −i[H, ρ] + ½ Σ_j (Γg_j D[σ_j⁺] +
//! Γd_j D[σ_j⁻])[ρ]` for registers of up to a handful of qubits, integrates
//! it, solves for steady states, and evaluates the correlation and
//! synchronization measures used to study the product steady state that
//! appears when all qubits share one gain/damping ratio.

pub mod engine;
pub mod model;
pub mod observables;
pub mod operators;
pub mod random;
pub mod spin1;
pub mod sync;

pub use model::{
    build_hamiltonian, initial_state, magnetization, product_steady_state, InteractionTerm, ModelError, QubitParams,
    StateInit, SystemSpec, Topology,
};
pub use operators::{
    embed, herm_sqrt, kron, partial_trace, pauli, spin1_op, Axis, ComplexMatrix, DensityMatrix, OperatorError, C64,
};
pub use engine::{
    algebra_closure_dim, apply_liouvillian, build_superoperator, evolve, nogo_residual, steady_state, EngineError,
    EvolutionTrace, EvolveOptions, Liouvillian, NogoResidual, SteadyMethod, SteadyOptions, SteadyStateResult,
};
pub use observables::{connected_correlation, correlation_sums, expectation, fidelity, CorrelationReport, ObservableError};
pub use spin1::{spin1_commutator, spin1_limit_cycle, spin1_steady_state, DissipationScheme, Spin1Spec};
pub use sync::{
    husimi_q_pair, husimi_q_single, s_function_single, s_rel_analytic, s_rel_quadrature, sync_report, two_qubit_analytic,
    PairSync, SyncError, SyncReport, TwoQubitAnalyticParams,
};
