//! Shortest-vector toolkit: exact lattice arithmetic, basis reduction,
//! enumeration, qubit-bounded integer encodings with QUBO/Ising Hamiltonians,
//! and a state-vector VQE emulator.
//!
//! The crate is `no_std` (with `alloc`); the `std` feature only adds
//! wall-clock timing to reduction reports.

#![no_std]
extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod encoding;
pub mod enumeration;
pub mod error;
mod exact;
pub mod lattice;
pub mod reduction;
pub mod rng;
pub mod vqe;

pub use error::{Error, Result};
pub use lattice::{Basis, GramMatrix};
