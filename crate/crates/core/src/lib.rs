//! Robin-to-Robin transparent-boundary solver for the 1D Helmholtz equation
//! −(μu′)′ − ρ(ω² + iε)u = f with locally perturbed quasiperiodic coefficients.
//!
//! Outside a bounded interval the coefficients are traces μ_p(θx), ρ_p(θx) of 1-periodic
//! functions of two variables along an irrational direction θ. Each half-line is handled
//! through the periodic lift: cell problems on fibers, weighted shift operators in a
//! Fourier basis, a generalized eigenproblem for the propagation operator, and a
//! cell-by-cell reconstruction. Both the absorbing case ε > 0 and the limit ε = 0
//! (selection by energy flux) are supported.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cell_solver;
pub mod cli;
pub mod config;
pub mod error;
pub mod fem;
pub mod fourier;
pub mod halfline;
pub mod interior;
pub mod medium;
pub mod oracle;
pub mod riccati;
pub mod shift_ops;
pub mod svg;

pub use error::{Error, Result};
