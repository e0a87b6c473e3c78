//! Gaussian-state simulation and estimation for reflectivity sensing with
//! entangled transmitters and induced-coherence receivers.
//!
//! The crate is organised bottom-up:
//!
//! * [`symplectic`]: states, symplectic transforms, Williamson decomposition.
//! * [`hamiltonian`]: quadratic Hamiltonians and their quadrature flows.
//! * [`channels`]: the transmitter/receiver schemes.
//! * [`metrology`] and [`closed_form`]: fidelity and quantum Fisher information.
//! * [`detection`]: Chernoff exponents and error-probability envelopes.
//! * [`fock`]: truncated Fock-space oracle used to cross-check everything above.
//! * [`equivalence`]: circuit ↔ quadratic-Hamiltonian decomposition.

pub mod channels;
pub mod closed_form;
pub mod detection;
pub mod equivalence;
pub mod error;
pub mod fock;
pub mod hamiltonian;
pub mod linalg;
pub mod metrology;
pub mod symplectic;

pub use error::{Error, Result};
