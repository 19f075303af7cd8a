//! Sharp constant of the spectral inequality on E_μ for an equidistributed mask,
//! and the fit of log C against sqrt(μ).

use lattice_control::certificates::{kappa_fit, optimal_constant, KappaRegressor};
use lattice_control::geometry::{periodic_equidistributed, thickness_report};
use lattice_control::lattice::{LatticeBox, ScalarField};
use lattice_control::schrodinger::SpectralDecomposition;

fn main() -> lattice_control::Result<()> {
    let h = 0.05;
    let dom = LatticeBox::centered(1, h, 8.0)?;
    let mask = periodic_equidistributed(&dom, 2.0, 0.5, |_| vec![0.0])?;
    let thick = thickness_report(&mask, 4.0)?;
    println!("mask: {} of {} nodes, thickness {:.3}", mask.count(), dom.len(), thick.gamma_min);

    let dec = SpectralDecomposition::new(&ScalarField::zeros(&dom))?;
    let lam = dec.eigenvalues();
    let top = dec.count_at_most(1.0 / (h * h));
    let mut points = Vec::new();
    for m in (4..=top).step_by(4) {
        let mu = 0.5 * (lam[m - 1] + lam[m]);
        let cert = optimal_constant(&dec, mu, &mask)?;
        println!("mu = {mu:9.2}  dim E = {:3}  C = {:.4e}", cert.dim, cert.constant);
        points.push((mu, cert.constant));
    }
    let fit = kappa_fit(&points, KappaRegressor::Plain)?;
    println!("log C ≈ {:.3} + {:.4} sqrt(mu); sqrt(mu) preferred over mu: {}", fit.offset, fit.kappa, fit.sublinear);
    Ok(())
}
