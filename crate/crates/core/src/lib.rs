//! Periodically driven Tavis-Cummings model in a fixed excitation sector.
//!
//! The crate evolves the exact quantum state, maps it at any instant onto
//! `M` complex Bethe rapidities, integrates the equivalent classical rapidity
//! flow, and measures how close cycle-averaged eigenstate populations come to
//! a Boltzmann distribution.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the `f64`
//! aliases below are what the experiment runner and the CLI use.

pub mod bethe;
pub mod classical;
pub mod error;
pub mod experiment;

pub mod poly;
pub mod propagator;
pub mod scalar;
pub mod sector;
pub mod selftest;

pub mod spectral;
pub mod thermo;

pub use error::{Error, HaltReason, Result};
pub use scalar::{Cplx, Real};

pub use bethe::{
    bethe_amplitudes, bethe_energy, bethe_residual, extract_rapidities, offshell_identity_check, refine_static_roots,
    BetheResidual, RapiditySet, Root,
};
pub use classical::{
    gamma, inozemtsev_force, inozemtsev_potential, integrate_flow, pair_roots, rapidity_flow, x_flow, x_variables,
    ClassicalTrajectory, FlowOptions,
};
pub use propagator::{run, step, DriveProtocol, StroboscopicRecord};
pub use sector::{
    boson_number, build_hamiltonian, energy_expectation, sector_dimension, spin_excitation_number, QuantumState,
    SectorParams, Tridiagonal,
};
pub use spectral::{diagonalize, ground_state, SpectralDecomposition};
pub use thermo::{compare_runs, cycle_weights, fit_boltzmann, BoltzmannFit, WeightDistribution};

/// Double-precision complex number.
pub type C64 = Cplx<f64>;
pub type Sector = SectorParams<f64>;
pub type State = QuantumState<f64>;
pub type Hamiltonian = Tridiagonal<f64>;
pub type Spectrum = SpectralDecomposition<f64>;
pub type Rapidities = RapiditySet<f64>;
pub type Drive = DriveProtocol<f64>;
pub type Record = StroboscopicRecord<f64>;
pub type Trajectory = ClassicalTrajectory<f64>;
pub type Weights = WeightDistribution<f64>;
pub type Boltzmann = BoltzmannFit<f64>;
