use serde::{Deserialize, Serialize};

use super::observability::observed_energy_coeffs;
use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinearFit};
use crate::geometry::ObservationMask;
use crate::heat_kernel::tail_mass_sq;
use crate::lattice::ScalarField;
use crate::schrodinger::SpectralDecomposition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessityPoint {
    pub radius: f64,
    pub mask_nodes: usize,
    /// `∫_0^T ‖u(t)‖^2_{ω_R} dt`.
    pub observed_energy: f64,
    /// `‖u(T)‖^2`.
    pub final_energy: f64,
    /// `max(‖u(T)‖^2 - r ‖u_0‖^2, 0) / observed_energy`.
    pub constant: f64,
    /// Free-kernel `ℓ^2` mass beyond distance `R/2` at time 1.
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessityCurve {
    pub h: f64,
    pub t: f64,
    pub points: Vec<NecessityPoint>,
    pub strictly_increasing: bool,
    /// `log C(R)` against `R^2` over the points with a finite positive constant.
    pub fit: Option<LinearFit>,
}

/// Observability constants implied when the mask loses the cube `|x - x_0|_∞ < R/2`,
/// for the datum `u_0 = h^{d/2} p_{V,h}(1, ·, x_0)` evolved over `[0, T]`.
pub fn necessity_experiment(
    dec: &SpectralDecomposition,
    base: &ObservationMask,
    x0: &[f64],
    radii: &[f64],
    t: f64,
    remainder: f64,
) -> Result<NecessityCurve> {
    let domain = dec.domain();
    let h = domain.h();
    let d = domain.dim();
    if !(t > 0.0) {
        return Err(Error::Domain(format!("horizon T = {t} must be positive")));
    }
    let k0 = domain.lattice_index(x0)?;
    let delta = ScalarField::delta(domain, &k0)?;
    let lambda = dec.eigenvalues();
    let mut c = dec.coefficients(&delta)?;
    let scale = h.powf(-(d as f64) / 2.0);
    c.iter_mut().zip(lambda).for_each(|(ci, l)| *ci *= scale * (-l).exp());
    let initial = c.norm_squared();
    let final_energy: f64 = c
        .iter()
        .zip(lambda)
        .map(|(ci, l)| (-2.0 * l * t).exp() * ci * ci)
        .sum();
    let mut points = Vec::with_capacity(radii.len());
    for &r in radii {
        let mask = base.punctured(x0, r);
        let energy = observed_energy_coeffs(dec, &mask, &c, t)?;
        let adjusted = (final_energy - remainder * initial).max(0.0);
        points.push(NecessityPoint {
            radius: r,
            mask_nodes: mask.count(),
            observed_energy: energy,
            final_energy,
            constant: if energy > 0.0 { adjusted / energy } else { f64::INFINITY },
            tail_bound: tail_mass_sq(d, h, 1.0, r / 2.0)?,
        });
    }
    let strictly_increasing = points.windows(2).all(|w| w[1].constant > w[0].constant);
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.constant.is_finite() && p.constant > 0.0)
        .map(|p| (p.radius * p.radius, p.constant.ln()))
        .unzip();
    let fit = if x.len() >= 3 { Some(linear_fit(&x, &y)?) } else { None };
    Ok(NecessityCurve {
        h,
        t,
        points,
        strictly_increasing,
        fit,
    })
}
