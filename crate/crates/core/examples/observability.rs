//! Observability constants of low-frequency subspaces and the relaxed
//! observability inequality with a high-frequency remainder.

use lattice_control::control::{observability_constant, relaxed_observability_check};
use lattice_control::geometry::periodic_equidistributed;
use lattice_control::lattice::{LatticeBox, ScalarField};
use lattice_control::schrodinger::SpectralDecomposition;

fn main() -> lattice_control::Result<()> {
    let h = 0.1;
    let dom = LatticeBox::centered(1, h, 4.0)?;
    let dec = SpectralDecomposition::new(&ScalarField::zeros(&dom))?;
    let mask = periodic_equidistributed(&dom, 2.0, 0.5, |_| vec![0.0])?;
    for j in 0..4 {
        for t in [0.05, 0.2, 1.0] {
            let c = observability_constant(&dec, &mask, j, t)?;
            println!("j = {j}  T = {t:4}  modes {:3}  C_obs = {:.4e}", c.modes, c.value);
        }
    }
    let v_f = ScalarField::from_fn(&dom, |x| (-x[0] * x[0]).exp() * (5.0 * x[0]).cos());
    for t in [0.1, 0.5, 1.0] {
        let r = relaxed_observability_check(&dec, &mask, &v_f, t, 1.0 / (h * h))?;
        println!(
            "T = {t}: |v(0)|² = {:.4e} ≤ {:.4e} + {:.4e}  ({})",
            r.lhs,
            r.rhs_observation,
            r.rhs_remainder,
            if r.passes { "holds" } else { "fails" }
        );
    }
    Ok(())
}
