//! Statevector simulation of layered random circuits, adjoint gradients, and
//! three training strategies for them: neural-PID step control (NPID),
//! network-generated parameters (NEQP) and plain gradient descent (QV),
//! plus a seeded harness for convergence sweeps.

pub mod circuit;
pub mod error;
pub mod grad;
pub mod harness;
pub mod neural;
pub mod optim;
pub mod qsim;
pub mod seed;

pub use error::{Error, Result};
