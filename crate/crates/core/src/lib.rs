//! Statevector simulation of parameterized circuits and gradient-free
//! training with directional derivatives read off inner-product circuits.
//!
//! The crate is organised bottom-up:
//!
//! - [`sim`]: dense statevector simulator, gates and Pauli observables.
//! - [`circuit`]: parameterized ansätze, data encoders and counted evaluation.
//! - [`deriv`]: parameter-shift gradients, RSGF and SPSA estimators.
//! - [`ipc`]: inner-product circuits and the shadow directional derivative.
//! - [`optim`]: optimizers and step-size calculators.
//! - [`harness`]: datasets, classifier training, metrics, plots and self-checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod deriv;
pub mod error;
pub mod harness;
pub mod ipc;
pub mod optim;
pub mod rng;
pub mod sim;

pub use circuit::{ExecutionCounter, ParamCircuit, Shots};
pub use error::{Error, Result};
pub use sim::{ObservableExpr, StateVector};
