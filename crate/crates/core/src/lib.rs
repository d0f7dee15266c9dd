pub mod elastica;
pub mod error;
pub mod linear_problem;
pub mod recovery;
pub mod selftest;
pub mod sphere_curve;
pub mod stencil;
pub mod vec3;

pub use error::{Error, Result};
