//! Pauli-frame simulator and analytics for hiding quantum information in channel noise.
//!
//! Two hiding schemes are modelled: payload slots disguised as depolarized qubits inside a
//! codeword, and messages carried by the choice of a typical-error syndrome. Alongside the
//! simulators sit closed-form calculators for key consumption, achievable rates and the
//! diamond-norm security quantities, plus a Monte-Carlo eavesdropper.

pub mod adversary;
pub mod channels;
pub mod codes;
pub mod combinatorics;
pub mod error;
pub mod experiment;
pub mod keysource;
pub mod montecarlo;
pub mod numeric;
pub mod pauli;
pub mod protocol1;
pub mod protocol2;
pub mod security;
pub mod stats;

pub use error::{Result, StegoError};
pub use pauli::{Pauli, PauliString};
