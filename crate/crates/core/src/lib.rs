//! Exact simulation and verification toolkit for diagonal quantum circuits.
//!
//! Everything here operates on dense statevectors at desk scale (up to 14
//! qubits). The crate is organized around six building blocks:
//!
//! * [`state`] — statevectors, diagonal unitaries, reduced states, entropies
//!   and distance measures.
//! * [`circuits`] — phase-random circuits over the gate sets `G_r` and
//!   `G_CZ`, and their reduction to a single diagonal unitary.
//! * [`moments`] — exact moment operators of diagonal ensembles, design
//!   checks for `G_r`, and the convergence analysis of the `G_CZ` circuit.
//! * [`designs`] — state-ensemble moments: phase-random states, their gap to
//!   Haar-random states, and the exact state 2-design protocol.
//! * [`iqp`] — IQP circuit semantics: output distributions, sampling, and the
//!   Ising partition-sum amplitude oracle.
//! * [`thermo`] — energy shells of classical Hamiltonians and the QPE-based
//!   thermalizing algorithm.
//!
//! All operations are pure functions of their inputs; sampled objects take an
//! explicit RNG so runs are reproducible bit for bit.

pub mod circuits;
pub mod designs;
pub mod error;
pub mod iqp;
pub mod moments;
pub mod state;
pub mod thermo;

pub use error::{Error, Result};
