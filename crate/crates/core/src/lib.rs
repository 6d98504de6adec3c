//! Exact single-particle solution of the N-site tight-binding chain with
//! conjugate imaginary end potentials `±iγ`.

pub mod bethe;
pub mod cli;
pub mod error;
pub mod exceptional;
pub mod metric;
pub mod model;
pub mod oracle;
pub mod states;
pub mod verify;

pub use error::{Error, Result};
pub use model::{ChainSpec, Phase, StateVector};
