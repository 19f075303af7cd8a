//! Caccioppoli inequality for discrete harmonic functions of -Δ_h + V with
//! random boundary data.

use lattice_control::lattice::LatticeBox;
use lattice_control::potentials::{PotentialExpr, PotentialSpec};
use lattice_control::schrodinger::caccioppoli_check;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> lattice_control::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (l, h) in [(1.5, 0.25), (2.0, 0.125), (3.0, 0.1)] {
        let dom = LatticeBox::centered(2, h, l + h)?;
        let spec = PotentialSpec::bounded(PotentialExpr::Sine {
            amplitude: 2.0,
            frequency: 1.0,
        });
        let r = caccioppoli_check(&dom, &spec, l, &[0.0, 0.0], |_| rng.random_range(-1.0..=1.0))?;
        println!(
            "L = {l}, h = {h}: |D+φ|² = {:.4e}  |D-φ|² = {:.4e}  bound {:.4e}  solve residual {:.1e}",
            r.lhs_plus, r.lhs_minus, r.rhs, r.solve_residual
        );
    }
    Ok(())
}
