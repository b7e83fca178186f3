//! Numerical laboratory for generalized Gibbons-Hawking metrics: explicit
//! solutions, form identities checked by finite differences, Ronkin functions
//! and tropical limits, partial Legendre transforms, and collapse probes.

pub mod decay;
pub mod error;
pub mod fd;
pub mod gh;
pub mod intlin;
pub mod lattice;
pub mod legendre;
pub mod quad;
pub mod solutions;
pub mod tropical;

pub use error::{Error, Result};
