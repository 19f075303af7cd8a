//! The free lattice heat kernel and its bounds.

mod feynman_kac;
mod kernel;
mod norms;
pub mod quadrature;

pub use feynman_kac::{feynman_kac_sandwich_check, FeynmanKacReport};
pub use kernel::{
    kernel, kernel_1d, kernel_displacement, log_kernel_1d, pang_bounds_check, zeta,
    zeta_bounds_check, PangRatios,
};
pub use norms::{ell2_norm_asymptotic_check, kernel_sq_sum, tail_fit, tail_mass_sq, Ell2Report, TailFit};
