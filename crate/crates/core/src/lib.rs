//! Fermionic Fock-space engine for the reduced BCS pairing Hamiltonian.
//!
//! The crate builds a discretized momentum shell around the Fermi surface,
//! represents second-quantized operators symbolically with exact rational
//! coefficients, and constructs the pair state built from antisymmetric
//! `(k, -k)` pair creators that is annihilated by the pairing interaction
//! for every coupling strength. Around that core it offers exact
//! diagonalization in particle-number sectors, a variational product-state
//! energy, and a verification battery that checks every operator identity
//! the construction relies on.
//!
//! Module map:
//! - [`lattice`]: momentum grid, shell classification and global mode order.
//! - [`fock`]: occupation bitstrings, fermionic signs and sparse state vectors.
//! - [`operator`]: normal-ordered operator algebra and its action on states.
//! - [`model`]: free Hamiltonian, pairing interaction, number/momentum and
//!   pair operators.
//! - [`sector`]: operator matrices in fixed particle-number sectors.
//! - [`states`]: vacuum, Fermi, core, pair-state and BCS product states.
//! - [`spectra`]: eigensolvers and energy placement of the pair state.
//! - [`verify`]: the identity battery and its report.
//! - [`continuum`]: lattice-counting energies against continuum integrals.
//! - [`config`] and [`cli`]: run configuration and the command-line driver.

pub mod cli;
pub mod config;
pub mod continuum;
pub mod error;
pub mod exact;
pub mod fock;
pub mod lattice;
pub mod model;
pub mod operator;
pub mod sector;
pub mod spectra;
pub mod states;
pub mod verify;

pub use error::{Error, Result};
pub use exact::Rational;
pub use fock::{FockState, Scalar, StateVector};
pub use lattice::{KVector, LatticeConfig, ModeTable, Partition, Spin};
pub use operator::{Factor, FactorKind, Monomial, OperatorExpr};
