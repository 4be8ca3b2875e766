//! Numerical laboratory for the resolution of generalized Radon transform
//! inversion from gridded data, on the family of spheres tangent to the
//! plane `x_3 = 0`.
//!
//! The pipeline: a ball phantom gives exact forward data
//! ([`phantom`]), which is sampled on an offset lattice and interpolated
//! with a compactly supported B-spline kernel ([`grid`], [`kernel`]). The
//! microlocal inversion ([`reconstruct`]) is evaluated across the ball
//! boundary near a tangency chart ([`geometry`]) and compared with the
//! predicted edge response ([`predict`]).

pub mod config;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod grid;
pub mod kernel;
pub mod phantom;
pub mod predict;
pub mod reconstruct;
pub mod validate;

pub use error::{GrtError, Result};
