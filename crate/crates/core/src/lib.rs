//! Bases of coherent-spin-state projectors for the operator space of a
//! spin `s`.
//!
//! Any `(2s+1)^2` directions (a *constellation*) define projectors
//! `|n⟩⟨n|`; when their Gram matrix is nonsingular, the Q-symbol values
//! `⟨n|A|n⟩` on those directions determine a Hermitian operator `A`.
//! This crate builds the projectors, diagnoses the Gram matrix, reconstructs
//! operators, repairs singular constellations, and integrates the flow that
//! treats `det G` as the energy of one spike.
//!
//! Batch workloads (sweeps, repair probes, round-trip batches) run on rayon
//! when the default `parallel` feature is enabled; see [`exec`].

pub mod cli;
pub mod constellation;
pub mod error;
pub mod exec;
pub mod flow;
pub mod gram;
pub mod repair;
pub mod rng;
pub mod spin;
pub mod sweep;
pub mod tomography;

pub use constellation::{fibonacci_constellation, random_constellation, regular_hedgehog, Constellation};
pub use error::{Error, Result};
pub use exec::Backend;
pub use flow::{grad_hamiltonian, hamiltonian, integrate_flow, FlowState, SpikeHamiltonian, Trajectory};
pub use gram::{diagnostics, gram, gram_via_traces, solve, FactoredGram, FrameDiagnostics, GramMatrix, Threshold};
pub use repair::{repair, repair_with, RepairOptions, RepairReport, RepairStrategy};
pub use spin::{
    coherent_projector, coherent_state, overlap_closed_form, overlap_probability, projector, q_symbol,
    spin_matrices, HermitianOperator, SpinLabel, SpinMatrices, StateVector, UnitVector,
};
pub use sweep::{sweep, SweepRow};
pub use tomography::{dual_frame, reconstruct, round_trip_error, sample_q, QSample, Reconstructor};
