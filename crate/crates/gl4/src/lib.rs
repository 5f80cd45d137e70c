//! Numerical workbench for entire magnetic Ginzburg-Landau solutions in R⁴ whose
//! zero set follows a minimal surface: vortex profiles, the saddle system, Fermi
//! geometry, the Jacobi operator and the residual of the approximate solution.

pub mod cli;
pub mod error;
pub mod fermi;
pub mod fermi_check;
pub mod jacobi;
pub mod residual;
pub mod saddle;
pub mod vortex;

pub use error::{Gl4Error, Result};
