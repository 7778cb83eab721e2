//! Kinetic-formulation laboratory for the 1-D isentropic Euler equations
//! with γ = 3.

pub mod characteristics;
pub mod entropy;
pub mod error;
pub mod io;
pub mod regularity;
pub mod riemann;
pub mod solver;
pub mod state;
pub mod velocity;

pub use error::{Error, Result};
