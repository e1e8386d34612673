//! Classically split parametrized quantum circuits.
//!
//! The crate is organised bottom-up:
//!
//! - [`sv`]: dense statevector simulator, gates, circuits, Pauli observables
//!   and entanglement measures.
//! - [`ansatz`]: circuit builders for ladder, EfficientSU2 and HEA families,
//!   split (CS) and extended split (ECS) layouts.
//! - [`grad`]: parameter-shift and finite-difference gradients, ADAM, SPSA.
//! - [`haar`]: Haar-random unitaries and Monte-Carlo checks of Haar integrals.
//! - [`bp`]: variance scans used to study barren plateaus.
//! - [`datasets`]: hypercube classification data and CE-labelled quantum states.
//! - [`tasks`]: classifier training and VQE drivers.
//! - [`router`]: SWAP routing onto square-lattice devices.
//!
//! Qubit 0 is the least-significant bit of an amplitude index throughout.

pub mod ansatz;
pub mod bp;
pub mod datasets;
pub mod error;
pub mod grad;
pub mod haar;
pub mod router;
pub mod seed;
pub mod stats;
pub mod sv;
pub mod tasks;
pub mod table;

pub use error::{Error, Result};
pub use sv::{Circuit, Gate, Observable, Pauli, PauliString, Statevector, C64};
