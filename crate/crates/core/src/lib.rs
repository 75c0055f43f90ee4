//! Exact precision limits for estimating a field gradient with a chain of qubits.
//!
//! Each qubit `i` at position `x_i` sees `B(x_i) = B0 + G f(x_i - x0)`, and the
//! gradient `G` is imprinted through `H_G = 1/2 sum_i f_i sigma_z^(i)`. The crate
//! computes quantum and classical Fisher information for the standard probe
//! states, with and without collective phase noise, and the scenario pipelines
//! built on top of them.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bits;
pub mod chain;
pub mod error;
pub mod measurement;
pub mod noise;
pub mod qfi;
pub mod scenarios;
pub mod state;
pub mod validation;

pub use bits::Bitstring;
pub use chain::{
    hamiltonian_eigenvalue, make_chain, ChainConfig, FieldProfile, PhysParams, UnitMode,
};
pub use error::{Error, Result};
pub use measurement::{
    classical_fisher, error_propagation, error_propagation_noisy_ghz, jx_distribution,
    odf_parity_mask, parity_distribution, parity_distribution_on, parity_expectation,
    parity_noisy_ghz, parity_odf, parity_on_with_derivative, parity_with_derivative,
    theta_for_saturation, Observable, Outcome, OutcomeDistribution, StateRef,
};
pub use noise::{
    apply_channel, coherence_factor, correlation_integral, mc_phase_average, mc_trajectory_average,
    steady_twirl, steady_twirl_mixed, NoiseModel, TrajectoryEnsemble,
};
pub use qfi::{
    qfi_dfs_max, qfi_dfs_subspace, qfi_dicke, qfi_general, qfi_ghz, qfi_max_entangled,
    qfi_max_separable, qfi_noisy_ghz, qfi_noisy_psim, qfi_product_steady, qfi_pure, FisherPath,
    FisherReport,
};
pub use scenarios::{
    brute_force_placement_search, critical_time, critical_time_equidistant, crossover_time_exact,
    generate_placement, optimal_time_ghz, sweep_fig3, sweep_fig4, sweep_fig5, table1, Knowledge,
    Objective, PlacementKind, PlacementSpec, SweepResult,
};
pub use state::{evolve, make_named_state, NamedState, SparseState, SpectralState};
pub use validation::{run_validation, ValidationReport, ValidationSettings};
