//! Measured spectral-inequality constants and the Carleman functional.

mod carleman;
mod spectral;
mod weight;

pub use carleman::{carleman_sides, uniform_times, CarlemanDials, CarlemanSides, CarlemanTerm, SpaceTimeField};
pub use spectral::{
    kappa_fit, optimal_constant, restricted_gram, KappaFit, KappaRegressor, SpectralCertificate,
    SINGULAR_SIGMA,
};
pub use weight::{build_weight, CarlemanGeometry, CarlemanWeight, WeightReport};
