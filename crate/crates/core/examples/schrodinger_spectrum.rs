//! Spectrum of -Δ_h + V on a box, checked against the closed form for V = 0,
//! and the localization of low modes for a confining potential.

use std::f64::consts::PI;

use lattice_control::lattice::{LatticeBox, ScalarField};
use lattice_control::potentials::{assumption_a_check, restrict, PotentialSpec};
use lattice_control::schrodinger::{localization_check, SpectralDecomposition};

fn main() -> lattice_control::Result<()> {
    let h = 0.1;
    let dom = LatticeBox::centered(1, h, 3.0)?;
    let n = dom.len();
    let dec = SpectralDecomposition::new(&ScalarField::zeros(&dom))?;
    let worst = (0..n)
        .map(|k| {
            let s = (PI * (k + 1) as f64 / (2.0 * (n + 1) as f64)).sin();
            (dec.eigenvalues()[k] - 4.0 / (h * h) * s * s).abs()
        })
        .fold(0.0, f64::max);
    println!("V=0, {n} nodes: max eigenvalue error {worst:.2e}, gram defect {:.2e}", dec.gram_defect());

    let spec = PotentialSpec::power_law(2.0);
    let dom = LatticeBox::centered(1, h, 6.0)?;
    let a = assumption_a_check(&spec, &dom)?;
    println!("|x|^2 growth assumptions hold: {} over {} nodes", a.holds, a.nodes_checked);
    let dec = SpectralDecomposition::new(&restrict(&spec, &dom))?;
    let lambda0 = dec.eigenvalues()[0];
    println!("ground state {lambda0:.6} (continuum value 1)");
    for m in [2.0, 5.0, 10.0] {
        let mu = m * lambda0;
        let radius = (2.0 * mu).sqrt();
        let r = localization_check(&dec, mu, 2.0, 1.0, radius)?;
        println!("mu = {mu:.3}: {} modes, worst mass ratio {:.4} on [-{radius:.3}, {radius:.3}]", r.ratios.len(), r.max_ratio);
    }
    Ok(())
}
