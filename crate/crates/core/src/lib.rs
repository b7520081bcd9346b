//! Pseudospectral laboratory for the KdV-Burgers equation
//! `u_t + u_xxx + eps |d/dx|^(2 alpha) u + (u^2)_x = 0` on a periodic box.

pub mod error;
pub mod evolve;
pub mod experiments;
pub mod fit;
pub mod imethod;
pub mod norms;
pub mod output;
pub mod propagator;
pub mod sharpness;
pub mod snapshot;
pub mod spectral;

pub use error::{Error, Result};
