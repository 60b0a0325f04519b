//! Simulation and analysis of a few superconducting qubits resonantly sharing
//! a single photon in a microwave resonator.
//!
//! The crate covers the whole chain of a desk-scale cavity-QED experiment:
//!
//! * [`hilbert`]: dense operators on `N` qubits ⊗ one truncated cavity mode.
//! * [`device`]: transmon and resonator parameters, coherence rates, flux crosstalk.
//! * [`dynamics`]: Tavis-Cummings Hamiltonian, unitary and Lindblad propagation.
//! * [`protocols`]: vacuum Rabi scans and collective/sequential W-state preparation.
//! * [`tomography`]: joint-readout measurement sets, Gaussian noise, reconstruction.
//! * [`entanglement`]: fidelity, W witness, three-tangle and its convex roof.
//! * [`analysis`]: oscillation fits and the `f² ∝ N` regression.
//!
//! The linear-algebra core is generic over the real scalar type (see
//! [`Real`]); the aliases below fix it to `f64` or `f32`.

pub mod analysis;
pub mod device;
pub mod dynamics;
pub mod entanglement;
mod error;
pub mod hilbert;
mod optim;
pub mod protocols;
mod scalar;
pub mod tomography;

pub use error::{Error, Result};
pub use scalar::Real;

pub use nalgebra::Complex;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type State = hilbert::QuantumState<f64>;
pub type Density = hilbert::DensityMatrix<f64>;
pub type Operator = hilbert::OperatorMatrix<f64>;

pub type State32 = hilbert::QuantumState<f32>;
pub type Density32 = hilbert::DensityMatrix<f32>;
pub type Operator32 = hilbert::OperatorMatrix<f32>;

pub type Target = entanglement::TargetState<f64>;
pub type Readout = tomography::ReadoutOperator<f64>;
pub type Tomography = tomography::TomographySet<f64>;
