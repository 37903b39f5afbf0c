//! Generalized (complex-width) Gaussian wave packets and the machinery built on them:
//! exact propagation under quadratic Hamiltonians, bucket-brigade subspace dynamics for
//! anharmonic potentials, instanton-augmented tunneling in a double well, and a
//! split-step grid solver used as an independent reference.
//!
//! Units are natural with ħ = 1, so `[x, p] = i` and every quantity is dimensionless.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod brigade;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod packets;
pub mod potentials;
pub mod propagators;
pub mod tunneling;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use brigade::{
    assemble_matrices, generate_trajectory_basis, project_and_exponentiate, reconstruct, significant_subspace,
    BasisSet, BrigadeConfig, EffectiveHamiltonian, SubspaceTransform,
};
pub use oracle::{GridSpec, GridState};
pub use packets::{kinetic_element, moment, overlap, GeneralizedGaussian};
pub use potentials::{effective_quadratic, EffectiveQuadraticParams, PotentialSpec};
pub use propagators::{
    coherent_trajectory, driven_harmonic_step, free_evolve, harmonic_evolve, ClassicalPoint, QuadraticHamiltonian,
};
pub use tunneling::{
    augmented_basis, find_stationary_gaussians, instanton_basis, instanton_from, instanton_trajectory,
    smoothed_hamiltonian, splitting_and_transfer, InstantonPath, MomentumMode, StationaryWell, TunnelingSummary,
    WellSide,
};
