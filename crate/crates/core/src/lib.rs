pub mod cli;
pub mod error;
pub mod experiments;
pub mod kernels;
pub mod potentials;
pub mod quadrature;

pub use error::{Error, Result};
