#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod control;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod geometry;
pub mod heat_kernel;
pub mod lattice;
pub mod potentials;
pub mod schrodinger;

pub use error::{Error, Result};
