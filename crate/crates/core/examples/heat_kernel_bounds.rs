//! Free lattice heat kernel: two-sided envelope ratios, ℓ² asymptotics, and
//! the Feynman–Kac comparison for a bounded potential.

use lattice_control::heat_kernel::{
    ell2_norm_asymptotic_check, feynman_kac_sandwich_check, kernel_1d, pang_bounds_check, tail_fit,
};
use lattice_control::lattice::LatticeBox;
use lattice_control::potentials::{restrict, PotentialSpec};
use lattice_control::schrodinger::SpectralDecomposition;

fn main() -> lattice_control::Result<()> {
    for (tau, u) in [(0.5, 0), (10.0, 3), (100.0, 40), (1.0, 20)] {
        let r = pang_bounds_check(tau, u)?;
        println!(
            "p1({tau}, {u}) = {:.4e}  envelope ratio {:.4}  upper {:.4e}  lower {:.4e}",
            kernel_1d(tau, u)?,
            r.ratio_pang,
            r.ratio_upper,
            r.ratio_lower
        );
    }
    for d in [1, 2, 3] {
        let r = ell2_norm_asymptotic_check(d, 0.05, 1.0)?;
        println!("d = {d}: squared ℓ² norm {:.6} vs asymptotic {:.6}", r.norm, r.predicted);
    }
    let tail = tail_fit(1, 0.1, 1.0, &[1.0, 2.0, 3.0, 4.0, 5.0])?;
    println!("tail mass ≤ γ exp(-ν L²) with ν ≈ {:.4}", tail.nu);

    let dom = LatticeBox::centered(1, 0.25, 20.0)?;
    let dec = SpectralDecomposition::new(&restrict(&PotentialSpec::sine(1.0), &dom))?;
    let fk = feynman_kac_sandwich_check(&dec, 1.0, &[0.0])?;
    println!(
        "V = sin x: e^(-t|V|) p ≤ p_V ≤ e^(t|V|) p at {} certified nodes, {} violations",
        fk.certified_nodes, fk.violations
    );
    Ok(())
}
