//! Semidefinite programming for variational two-electron reduced density
//! matrices.
//!
//! The crate solves ground-state-energy lower-bound problems for small
//! electron systems. An electron-integral set is assembled into a
//! standard-form SDP over a product of positive-semidefinite and vector
//! blocks, which is then solved either by a Douglas-Rachford splitting /
//! ADMM first-order loop ([`firstorder`]) or by an adaptive semi-smooth
//! Newton method on the splitting's fixed-point residual ([`ssnewton`]).
//! A brute-force full-CI oracle ([`rdm::fci_oracle`]) provides exact
//! reference energies and representable density matrices for verification.
//!
//! Start with the runnable programs under `examples/`; each one exercises
//! a major capability end to end.

pub mod cli;
pub mod firstorder;
pub mod instances;
pub mod io;
pub mod rdm;
pub mod sdpmodel;
pub mod ssnewton;
pub mod symcore;
pub mod trace;

mod error;

pub use error::{Error, Result};
