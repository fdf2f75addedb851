//! Measurement-based and blind quantum computing with prime-power-dimensional
//! qudits.
//!
//! The crate is organized bottom-up:
//!
//! * [`galois`] — exact arithmetic in `GF(p^m)` and the Galois rings
//!   `GR(4,m)`, `GR(8,m)`, `GR(9,m)`, with the characters that parameterize
//!   every diagonal gate.
//! * [`gates`] — dense-matrix constructors for the finite-field Clifford
//!   generators, generalized T gates and integer-ring gates.
//! * [`sim`] — a dense state-vector engine with adaptive projective
//!   measurements and forced-outcome support.
//! * [`resources`] — declarative resource-state specs: cluster, open-ended
//!   cluster, brickwork, decorated cluster, hidden graphs, `G_E` resources.
//! * [`mbqc`] — measurement patterns, byproduct-frame tracking and the
//!   branch-enumeration oracle that certifies every gadget.
//! * [`blind`] — the client/server hiding protocol, trap verification,
//!   blindness audits and overhead reports.
//! * [`verify`] — the named invariant suites fronted by the CLI.

pub mod blind;
mod error;
pub mod galois;
pub mod gates;
pub mod mbqc;
pub mod resources;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};

/// Resource limits threaded through state construction and branch
/// enumeration. Exceeding a cap is an explicit error, never silent
/// truncation.
#[derive(Debug, Clone, Copy)]
pub struct Caps {
    /// Maximum number of amplitudes a state vector may hold.
    pub max_amps: usize,
    /// Maximum number of outcome branches `enumerate_branches` will visit.
    pub max_branches: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_amps: 1 << 28, max_branches: 1 << 20 }
    }
}
