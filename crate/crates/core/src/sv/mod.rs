//! Dense statevector simulation.
//!
//! Amplitude index bit `q` holds qubit `q` (qubit 0 is least significant).

mod circuit;
mod entanglement;
mod gate;
mod observable;
mod state;

pub use circuit::{Block, Circuit, Occurrence, Override};
pub use entanglement::{concentrable_entanglement, purity_sum, purity_sum_direction, subsystem_purity, MAX_CE_QUBITS};
pub use gate::{Angle, Gate, Mat2, Mat4};
pub use observable::{Observable, Pauli, PauliString};
pub use state::{ProductState, Statevector};

pub type C64 = num_complex::Complex64;

/// Norm tolerance enforced after gate application.
pub const NORM_TOL: f64 = 1e-10;
