//! Numerical smoothness of piecewise polynomial fields.
//!
//! Scaled derivative jumps across element interfaces (Type A) and scaled
//! interior derivative differences (Type I), the quadratic form that turns
//! jumps into local L² lower bounds, covolume dual meshes, safe-ball radii,
//! and h-refinement studies of the resulting necessary conditions for
//! optimal-order convergence.

pub mod error;
pub mod geometry;
pub mod harness;
pub mod mesh;
pub mod poly;
pub mod qform;
pub mod quadrature;
pub mod smoothness;

pub use error::{Error, Result};
pub use mesh::{ElementKind, Interface, Mesh};
