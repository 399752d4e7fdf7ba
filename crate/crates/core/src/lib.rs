pub mod cli;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod quad;
pub mod solver;
pub mod specfun;
pub mod spectral;

pub use error::{Error, Result};
