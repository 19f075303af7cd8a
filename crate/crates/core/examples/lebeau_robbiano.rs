//! Dyadic control strategy driving a random datum to a small high-frequency
//! remainder from an equidistributed control region.

use lattice_control::control::{lr_control, LrOptions};
use lattice_control::geometry::periodic_equidistributed;
use lattice_control::lattice::{LatticeBox, ScalarField};
use lattice_control::potentials::{restrict, PotentialSpec};
use lattice_control::schrodinger::SpectralDecomposition;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> lattice_control::Result<()> {
    let dom = LatticeBox::centered(1, 0.1, 4.0)?;
    let dec = SpectralDecomposition::new(&restrict(&PotentialSpec::sine(1.0), &dom))?;
    let mask = periodic_equidistributed(&dom, 2.0, 0.5, |_| vec![0.0])?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u0 = ScalarField::from_fn(&dom, |_| rng.random_range(-1.0..=1.0));

    let out = lr_control(&dec, &mask, &u0, 1.0, LrOptions::default())?;
    for w in &out.report.windows {
        println!(
            "j = {}  [{:.4}, {:.4}]  modes {:3}  C_obs {:.3e}  cost {:.3e}  annihilation {:.1e}",
            w.j,
            w.start,
            w.start + 2.0 * w.duration,
            w.modes,
            w.c_obs,
            w.cost,
            w.annihilation
        );
    }
    let r = &out.report;
    println!(
        "|u(T)|/|u0| = {:.3e}  high part {:.3e}  low residual {:.1e}  total cost {:.3e}",
        r.final_ratio, r.high_ratio, r.low_residual, r.total_cost
    );
    Ok(())
}
