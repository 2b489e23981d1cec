//! Simulation toolkit for driven-dissipative arrays of coupled cavities, each holding one qubit
//! (Jaynes-Cummings-Hubbard model). Energies are in units of the qubit-cavity coupling `g`.
//!
//! * [`hilbert`]: truncated product basis and named entangled states
//! * [`model`]: Hamiltonians and collapse operators in the drive frame
//! * [`liouvillian`]: sparse Lindblad superoperators
//! * [`spectral`]: dressed spectra, overlap quality and drive-frequency maps
//! * [`dynamics`]: tailored Gaussian pulses and master-equation evolution
//! * [`steady`]: steady states of continuously driven arrays
//! * [`effective`]: dispersive effective model and Bloch-Redfield rates

pub mod dynamics;
pub mod effective;
pub mod error;
pub mod hilbert;
pub mod liouvillian;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod spectral;
pub mod steady;

pub use error::{Error, Result};
pub use linalg::C64;
