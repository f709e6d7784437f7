//! Numerical thermodynamic formalism for transfer operators.
//!
//! The crate builds transfer operators on a fixed zoo of dynamical systems
//! (shifts of finite type, finite maps, piecewise monotone interval and circle
//! maps, and a few planar counterexample fixtures) and estimates the quantities
//! tied together by the variational principles: spectral potential, t-entropy,
//! topological entropy and pressure, inverse rami-rate, forward entropy,
//! essential spectral potential and essential sets.
//!
//! Every estimator returns its finite-`n` data alongside the headline value so
//! that certified bounds and extrapolations can be told apart.

#![forbid(unsafe_code)]

pub mod cli;
pub mod complexity;
pub mod error;
pub mod graph;
pub mod measures;
pub mod observable;
pub mod systems;
pub mod tentropy;
pub mod trace;
pub mod transfer;

pub use error::{Error, Result};
