pub mod cli;
pub mod config;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod ode;
pub mod quadrature;
pub mod spatial;
pub mod stability;
pub mod system;
pub mod temporal;
pub mod verification;

pub use error::{FemError, Result};
