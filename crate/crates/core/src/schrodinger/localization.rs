use serde::{Deserialize, Serialize};

use super::SpectralDecomposition;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    /// `‖φ_k‖^2 / ‖φ_k‖^2_{Q_Λ}` for each basis element of `E_μ`.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// `(2μ / c)^{1/β}`.
    pub required_radius: f64,
    /// `Λ >= required_radius`.
    pub radius_admissible: bool,
    /// Every ratio is at most 2.
    pub passes: bool,
}

/// Mass of each eigenvector of `E_μ` relative to its mass on the closed cube
/// `[-Λ, Λ]^d`, for potentials bounded below by `c |x|^β`.
pub fn localization_check(
    dec: &SpectralDecomposition,
    mu: f64,
    beta: f64,
    c: f64,
    lambda: f64,
) -> Result<LocalizationReport> {
    if !(beta > 0.0 && c > 0.0) {
        return Err(Error::Domain("β and c must be positive".into()));
    }
    let dom = dec.domain();
    for axis in 0..dom.dim() {
        let (lo, hi) = dom.extent(axis);
        if lo > -lambda || hi < lambda {
            return Err(Error::Domain(format!(
                "box extent [{lo}, {hi}] on axis {axis} does not contain [-{lambda}, {lambda}]"
            )));
        }
    }
    let inside: Vec<bool> = (0..dom.len())
        .map(|p| dom.point(p).iter().all(|x| x.abs() <= lambda * (1.0 + 1e-12)))
        .collect();
    let m = dec.count_at_most(mu);
    let ratios: Vec<f64> = (0..m)
        .map(|k| {
            let phi = dec.eigenvector(k);
            phi.norm_sq() / phi.masked_norm_sq(&inside)
        })
        .collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let required_radius = if mu > 0.0 {
        (2.0 * mu / c).powf(1.0 / beta)
    } else {
        0.0
    };
    Ok(LocalizationReport {
        passes: ratios.iter().all(|&r| r <= 2.0),
        radius_admissible: lambda >= required_radius,
        ratios,
        max_ratio,
        required_radius,
    })
}
