//! Lattice domains, fields and the difference calculus.

pub mod calculus;
mod domain;
mod field;
pub mod io;

pub use calculus::{
    backward_diff, central_diff, forward_diff, inner_product, laplacian, mean_op, sbp_residual,
    SbpReport, Side,
};
pub use domain::LatticeBox;
pub(crate) use domain::lattice_multiple;
pub use field::{Scalar, ScalarField};
