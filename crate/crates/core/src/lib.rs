//! Equiaffine differential invariants of parametrized surfaces, and
//! generation of hyperbolic affine-flat, affine-minimal surfaces from two
//! functions of one variable.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod expr;
pub mod frames;
pub mod grid;
pub mod invariants;
pub mod io;
pub mod generator;
pub mod linalg;
pub mod ode;
pub mod stencil;
pub mod verify;

pub use error::{Error, Result};
