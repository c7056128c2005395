pub mod asymptotics;
pub mod covmodels;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod hermite;
pub mod quadrature;
pub mod rng;
pub mod simulator;
pub mod special;
pub mod stats;
pub mod window;

pub use error::{Error, Result};
