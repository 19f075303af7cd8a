//! Removing a growing cube from the observation region around a kernel bump
//! makes the observability constant blow up like exp(c R²).

use lattice_control::control::necessity_experiment;
use lattice_control::geometry::ObservationMask;
use lattice_control::lattice::{LatticeBox, ScalarField};
use lattice_control::schrodinger::SpectralDecomposition;

fn main() -> lattice_control::Result<()> {
    let dom = LatticeBox::centered(1, 0.25, 10.0)?;
    let dec = SpectralDecomposition::new(&ScalarField::zeros(&dom))?;
    let base = ObservationMask::full(&dom);
    let radii: Vec<f64> = (1..=8).map(|k| k as f64).collect();
    let curve = necessity_experiment(&dec, &base, &[0.0], &radii, 1.0, 0.0)?;
    for p in &curve.points {
        println!("R = {:4.1}  nodes {:3}  C(R) = {:.4e}", p.radius, p.mask_nodes, p.constant);
    }
    if let Some(fit) = &curve.fit {
        println!("log C(R) ≈ {:.3} + {:.4} R²  (R² of fit {:.4})", fit.intercept, fit.slope, fit.r2);
    }
    Ok(())
}
