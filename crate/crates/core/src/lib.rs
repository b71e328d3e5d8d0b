//! Spin-boson ground states on a truncated photon Fock space and the spatial
//! asymptotics of their photon density.

pub mod asymptotics;
pub mod config;
pub mod error;
pub mod fixture;
pub mod fock;
pub mod groundstate;
pub mod hamiltonian;
pub mod krylov;
pub mod modes;
pub mod pullthrough;
pub mod quadrature;
pub mod sparse;
pub mod spectral;
pub mod spin;
pub mod verify;

pub use error::{Error, Result};
pub use sparse::{SparseHermitianOperator, StateVector};
