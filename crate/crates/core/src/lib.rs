pub mod artifacts;
pub mod config;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod hypgeom;
pub mod surface;
pub mod symfun;
pub mod verify;

pub use error::{Error, Result};
