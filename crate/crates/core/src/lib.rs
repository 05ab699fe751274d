//! Atomistic and Peierls–Nabarro models of a straight edge dislocation in an
//! AB-stacked bilayer hexagonal lattice.
//!
//! Displacements are scalar x-displacements per atom. Lengths inside the
//! atomistic model are in lattice units; continuum quantities use the rescaled
//! coordinate `x̄ = ε x / a`.

pub mod atomistic;
pub mod banded;
pub mod config;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod interp;
pub mod lanczos;
pub mod lattice;
pub mod material;
pub mod norms;
pub mod ode;
pub mod output;
pub mod pn;
pub mod potential;
pub mod stability;
pub mod terms;

pub use error::{Error, Result};

/// In-plane vector.
pub type Vec2 = nalgebra::Vector2<f64>;
/// In-plane 2×2 matrix.
pub type Mat2 = nalgebra::Matrix2<f64>;
