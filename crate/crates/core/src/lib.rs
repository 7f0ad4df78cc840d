//! Reduced-order models for the 1D viscous Burgers equation.
//!
//! Snapshots of the analytical solution feed a POD basis; the reduced
//! dynamics are closed by full-space Galerkin projection, by DEIM, or by an
//! LSTM trained on the DEIM nonlinear-term series.

pub mod analysis;
pub mod deim;
pub mod error;
pub mod io;
pub mod linalg;
pub mod pde;
pub mod pipeline;
pub mod pod;
pub mod rom;
pub mod surrogate;

pub use error::{Error, Result};
