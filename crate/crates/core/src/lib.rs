//! Periodic solutions of Lagrangian systems of relativistic oscillators,
//! found by direct minimization of the discretized action, certified by
//! Euler–Lagrange residuals and an independent shooting solver, and counted
//! across a scan of the perturbation strength.

pub mod cli;
pub mod error;
pub mod functional;
pub mod hypotheses;
pub mod model;
pub mod multiplicity;
pub mod optimizer;
pub mod path;
pub mod plot;
pub mod sampling;
pub mod verify;
pub mod wellposed;

pub use error::{Error, Result};
