//! Numerical twin of a two-photon exchange-phase interferometer.
//!
//! Two Mach-Zehnder interferometers share their input ports and are coupled
//! by a polarizing "swap" beam splitter. Interfering a two-photon reference
//! state with its physically permuted copy yields a coincidence fringe whose
//! horizontal position encodes the particle exchange phase.
//!
//! The crate is split into:
//!
//! * [`circuit`]: mode transforms, the 4x4 transfer matrix and two-photon amplitudes.
//! * [`observables`]: closed-form click and coincidence expectations with losses.
//! * [`swapphase`]: dynamic and geometric phase of the two-particle SWAP evolution.
//! * [`simulate`]: seeded Monte Carlo generator of calibration and pair steps.
//! * [`analysis`]: calibration, arccos phase retrieval, binning and the cosine fit.
//!
//! The analytic modules are generic over the scalar type ([`Real`]); the
//! Monte Carlo and estimation layers work in `f64`.

pub mod analysis;
pub mod circuit;
pub mod observables;
pub mod scalar;
pub mod simulate;
pub mod swapphase;

pub use scalar::Real;

/// Double-precision aliases for the generic analytic types.
pub type TransferMatrix64 = circuit::TransferMatrix<f64>;
pub type TwoPhotonAmplitudes64 = circuit::TwoPhotonAmplitudes<f64>;
pub type DetectorParams64 = observables::DetectorParams<f64>;
pub type CoherentInput64 = observables::CoherentInput<f64>;
pub type PiValue64 = observables::PiValue<f64>;
pub type TwoQubitState64 = swapphase::TwoQubitState<f64>;
pub type SwapHamiltonian64 = swapphase::SwapHamiltonian<f64>;

/// Single-precision aliases.
pub type TransferMatrix32 = circuit::TransferMatrix<f32>;
pub type DetectorParams32 = observables::DetectorParams<f32>;
