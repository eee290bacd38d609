//! Propagators of quadratic Hamiltonians built by operator ordering, with a
//! split-step reference evolver to check them against.

// `!(x > y)` is used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod closed_forms;
pub mod coefficients;
pub mod error;
pub mod grid;
pub mod kernel_builder;
pub mod operator_ordering;
pub mod phase_dynamics;
pub mod quadrature;
pub mod reference_evolver;
pub mod verification;

pub use error::{Error, Result};
pub use kernel_builder::{build_kernel, compose, evaluate_kernel, GaussianKernel};
pub use phase_dynamics::{QuadraticHamiltonian, Representation};
