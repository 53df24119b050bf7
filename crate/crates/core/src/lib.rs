//! Sparse spectral laboratory for norm inflation in the generalized
//! improved Boussinesq equation
//! `u_tt - u_xx - u_ttxx = (u^k)_xx` on the torus and on wide periodic boxes.

pub mod chebyshev;
pub mod cli;
pub mod construction;
pub mod error;
pub mod flow;
pub mod harness;
pub mod ktree;
pub mod lattice;
pub mod norms;
pub mod oracle;
pub mod series;
pub mod verify;

pub use error::{GibqError, Result};
