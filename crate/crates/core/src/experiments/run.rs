use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::*;
use super::table::Table;
use crate::certificates::{
    build_weight, carleman_sides, kappa_fit, optimal_constant, uniform_times, CarlemanDials, CarlemanGeometry,
    KappaRegressor, SpaceTimeField,
};
use crate::control::{
    fit_observability, lr_control, necessity_experiment, observability_constant, relaxed_observability_check,
    LrOptions,
};
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::geometry::periodic_equidistributed;
use crate::heat_kernel::{
    ell2_norm_asymptotic_check, feynman_kac_sandwich_check, kernel_1d, pang_bounds_check, tail_fit, zeta_bounds_check,
};
use crate::lattice::{backward_diff, forward_diff, laplacian, mean_op, sbp_residual, LatticeBox, ScalarField, Side};
use crate::potentials::{restrict_expr, PotentialExpr, PotentialSpec};
use crate::schrodinger::{caccioppoli_check, localization_check, SpectralDecomposition};

/// Results of one run: summary values and tables.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub results: Value,
    pub tables: Vec<Table>,
}

pub(crate) fn execute(config: &RunConfig) -> Result<RunOutput> {
    match &config.experiment {
        Experiment::Calculus(p) => calculus(p, config.seed),
        Experiment::Operator(p) => operator(p, config.seed),
        Experiment::Localization(p) => localization(p),
        Experiment::Caccioppoli(p) => caccioppoli(p, config.seed),
        Experiment::HeatKernel(p) => heat_kernel(p),
        Experiment::FeynmanKac(p) => feynman_kac(p),
        Experiment::Spectral(p) => spectral(p),
        Experiment::Control(p) => control(p, config.seed),
        Experiment::Observability(p) => observability(p, config.seed),
        Experiment::Carleman(p) => carleman(p),
        Experiment::Necessity(p) => necessity(p),
    }
}

fn decompose(expr: &PotentialExpr, domain: &LatticeBox) -> Result<SpectralDecomposition> {
    SpectralDecomposition::new(&restrict_expr(expr, domain))
}

fn random_field(domain: &LatticeBox, rng: &mut ChaCha8Rng) -> ScalarField<f64> {
    ScalarField::from_fn(domain, |_| rng.random_range(-1.0..=1.0))
}

fn max_abs_diff(a: &ScalarField<f64>, b: &ScalarField<f64>) -> Result<f64> {
    Ok(a.sub(b)?.max_abs())
}

fn calculus(p: &CalculusParams, seed: u64) -> Result<RunOutput> {
    let mut table = Table::new(
        "identities",
        &["dim", "trial", "d_plus_product", "d_minus_product", "laplacian_product", "sbp"],
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &d in &p.dims {
        let domain = LatticeBox::centered(d, p.h, p.half_width)?;
        for trial in 0..p.fields {
            let u = random_field(&domain, &mut rng);
            let v = random_field(&domain, &mut rng);
            let uv = u.mul(&v)?;
            let mut errs = [0.0f64; 3];
            let mut correction = ScalarField::zeros(&domain);
            for axis in 0..d {
                for (slot, side) in [(0, Side::Forward), (1, Side::Backward)] {
                    let diff = |f: &ScalarField<f64>| match side {
                        Side::Forward => forward_diff(f, axis),
                        Side::Backward => backward_diff(f, axis),
                    };
                    let lhs = diff(&uv)?;
                    let rhs = diff(&u)?
                        .mul(&mean_op(&v, axis, side)?)?
                        .add(&mean_op(&u, axis, side)?.mul(&diff(&v)?)?)?;
                    errs[slot] = errs[slot].max(max_abs_diff(&lhs, &rhs)? / lhs.max_abs().max(1.0));
                }
                let grad = forward_diff(&u, axis)?.mul(&forward_diff(&v, axis)?)?;
                correction = correction.add(&mean_op(&grad, axis, Side::Backward)?.restrict_to(&domain)?)?;
            }
            let lhs = laplacian(&uv);
            let rhs = v
                .mul(&laplacian(&u))?
                .add(&u.mul(&laplacian(&v))?)?
                .add(&correction.scaled(2.0))?;
            errs[2] = max_abs_diff(&lhs, &rhs)? / lhs.max_abs().max(1.0);
            let inner = |f: &ScalarField<f64>| {
                ScalarField::from_index_fn(&domain, |k| {
                    let interior = (0..d).all(|a| {
                        let lo = domain.lo()[a];
                        k[a] > lo && k[a] < lo + domain.counts()[a] as i64 - 1
                    });
                    if interior { f.at(k) } else { 0.0 }
                })
            };
            let (uc, vc) = (inner(&u), inner(&v));
            let mut sbp = 0.0f64;
            for axis in 0..d {
                let r = sbp_residual(&uc, &vc, axis)?;
                sbp = sbp.max(r.residual.abs() / (uc.norm() * vc.norm()).max(f64::MIN_POSITIVE));
            }
            table.push(vec![d as f64, trial as f64, errs[0], errs[1], errs[2], sbp]);
        }
    }
    let max_col = |name: &str| table.column(name).unwrap_or_default().into_iter().fold(0.0, f64::max);
    let results = json!({
        "max_d_plus_product": max_col("d_plus_product"),
        "max_d_minus_product": max_col("d_minus_product"),
        "max_laplacian_product": max_col("laplacian_product"),
        "max_sbp": max_col("sbp"),
    });
    Ok(RunOutput {
        results,
        tables: vec![table],
    })
}

/// `4 h^{-2} sin^2(kπ / (2(n+1)))`, `k = 1..=n`.
fn path_eigenvalues(n: usize, h: f64) -> Vec<f64> {
    (1..=n)
        .map(|k| 4.0 / (h * h) * (k as f64 * PI / (2.0 * (n as f64 + 1.0))).sin().powi(2))
        .collect()
}

/// Random probe pairs per threshold in the projector algebra checks.
const ALGEBRA_PROBES: usize = 8;

fn operator(p: &OperatorParams, seed: u64) -> Result<RunOutput> {
    let mut spectra = Table::new("path_spectra", &["n", "k", "eigenvalue", "closed_form"]);
    let mut path_err = 0.0f64;
    for &n in &p.path_sizes {
        let domain = LatticeBox::from_parts(p.h, vec![1], vec![n])?;
        let dec = SpectralDecomposition::new(&ScalarField::zeros(&domain))?;
        for (k, (a, b)) in dec.eigenvalues().iter().zip(path_eigenvalues(n, p.h)).enumerate() {
            path_err = path_err.max((a - b).abs());
            spectra.push(vec![n as f64, k as f64 + 1.0, *a, b]);
        }
    }
    let mut tensor_err = 0.0f64;
    for &n in &p.tensor_sizes {
        let line = LatticeBox::from_parts(p.h, vec![1], vec![n])?;
        let one = SpectralDecomposition::new(&ScalarField::zeros(&line))?;
        let square = LatticeBox::from_parts(p.h, vec![1, 1], vec![n, n])?;
        let two = SpectralDecomposition::new(&ScalarField::zeros(&square))?;
        let mut sums: Vec<f64> = one
            .eigenvalues()
            .iter()
            .flat_map(|a| one.eigenvalues().iter().map(move |b| a + b))
            .collect();
        sums.sort_by(f64::total_cmp);
        for (a, b) in two.eigenvalues().iter().zip(&sums) {
            tensor_err = tensor_err.max((a - b).abs());
        }
    }

    let domain = p.algebra_box.build(p.h)?;
    let dec = decompose(&p.potential, &domain)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lam = dec.eigenvalues();
    let (lo, hi) = (lam[0], lam[lam.len() - 1]);
    let mut algebra = Table::new(
        "projector_algebra",
        &["mu", "rank", "idempotence", "self_adjointness", "commutation", "additivity"],
    );
    for &f in &p.mu_fractions {
        let mu = lo + f * (hi - lo);
        let proj = dec.projector(mu);
        let (mut idem, mut adj, mut comm, mut add) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..ALGEBRA_PROBES {
            let u = random_field(&domain, &mut rng);
            let w = random_field(&domain, &mut rng);
            let pu = proj.apply(&u)?;
            idem = idem.max(max_abs_diff(&proj.apply(&pu)?, &pu)? / u.max_abs());
            let pw = proj.apply(&w)?;
            adj = adj.max((pu.dot(&w)? - u.dot(&pw)?).abs() / (u.norm() * w.norm()));
            for &t in &p.times {
                let lhs = proj.apply(&dec.semigroup_apply(t, &u)?)?;
                let rhs = dec.semigroup_apply(t, &pu)?;
                comm = comm.max(max_abs_diff(&lhs, &rhs)? / u.max_abs());
                for &t2 in &p.times {
                    let lhs = dec.semigroup_apply(t, &dec.semigroup_apply(t2, &u)?)?;
                    let rhs = dec.semigroup_apply(t + t2, &u)?;
                    add = add.max(max_abs_diff(&lhs, &rhs)? / u.max_abs());
                }
            }
        }
        algebra.push(vec![mu, dec.count_at_most(mu) as f64, idem, adj, comm, add]);
    }
    let max_col = |name: &str| algebra.column(name).unwrap_or_default().into_iter().fold(0.0, f64::max);
    let results = json!({
        "path_max_error": path_err,
        "tensor_max_error": tensor_err,
        "max_residual": dec.residuals().into_iter().fold(0.0, f64::max),
        "gram_defect": dec.gram_defect(),
        "idempotence": max_col("idempotence"),
        "self_adjointness": max_col("self_adjointness"),
        "commutation": max_col("commutation"),
        "additivity": max_col("additivity"),
    });
    Ok(RunOutput {
        results,
        tables: vec![spectra, algebra],
    })
}

fn localization(p: &LocalizationParams) -> Result<RunOutput> {
    let mut table = Table::new(
        "localization",
        &["h", "multiple", "mu", "radius", "modes", "max_ratio", "passes"],
    );
    let rows = p
        .hs
        .par_iter()
        .map(|&h| -> Result<Vec<Vec<f64>>> {
            let domain = p.domain.build(h)?;
            let dec = decompose(&p.potential, &domain)?;
            let lambda0 = dec.eigenvalues()[0];
            p.mu_multiples
                .iter()
                .map(|&m| {
                    let mu = m * lambda0;
                    let radius = (2.0 * mu / p.c).powf(1.0 / p.beta);
                    let r = localization_check(&dec, mu, p.beta, p.c, radius)?;
                    Ok(vec![h, m, mu, radius, r.ratios.len() as f64, r.max_ratio, r.passes as u8 as f64])
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    rows.into_iter().flatten().for_each(|r| table.push(r));
    let ratios = table.column("max_ratio").unwrap_or_default();
    let results = json!({
        "max_ratio": ratios.iter().copied().fold(0.0, f64::max),
        "all_pass": table.column("passes").unwrap_or_default().iter().all(|&v| v == 1.0),
        "cases": ratios.len(),
    });
    Ok(RunOutput {
        results,
        tables: vec![table],
    })
}

fn caccioppoli(p: &CaccioppoliParams, seed: u64) -> Result<RunOutput> {
    let mut combos = Vec::new();
    for &l in &p.cube_sides {
        for &h in &p.hs {
            for (k, _) in p.potentials.iter().enumerate() {
                combos.push((l, h, k));
            }
        }
    }
    if combos.is_empty() {
        return Err(Error::Config(vec!["caccioppoli needs sides, meshes and potentials".into()]));
    }
    let rows = (0..p.solves)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let (l, h, k) = combos[i % combos.len()];
            let domain = LatticeBox::centered(p.dim, h, l + h)?;
            let spec = PotentialSpec::bounded(p.potentials[k].clone());
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let r = caccioppoli_check(&domain, &spec, l, &vec![0.0; p.dim], |_| rng.random_range(-1.0..=1.0))?;
            Ok(vec![i as f64, l, h, k as f64, r.lhs_plus, r.lhs_minus, r.rhs, r.passes as u8 as f64, r.solve_residual])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(
        "caccioppoli",
        &["solve", "side", "h", "potential", "lhs_plus", "lhs_minus", "rhs", "passes", "solve_residual"],
    );
    rows.into_iter().for_each(|r| table.push(r));
    let passes = table.column("passes").unwrap_or_default().iter().filter(|&&v| v == 1.0).count();
    let worst = table
        .rows
        .iter()
        .map(|r| r[4].max(r[5]) / r[6])
        .fold(0.0, f64::max);
    let results = json!({ "passes": passes, "solves": p.solves, "worst_ratio": worst });
    Ok(RunOutput {
        results,
        tables: vec![table],
    })
}

/// `|Σ_u p1(τ, u) - 1|`, summing outward until terms are negligible.
fn mass_defect(tau: f64) -> Result<f64> {
    let mut total = kernel_1d(tau, 0)?;
    let mut u = 1i64;
    loop {
        let term = kernel_1d(tau, u)?;
        total += 2.0 * term;
        if term < 1e-20 * total && (u as f64) > tau.sqrt() || term == 0.0 {
            break;
        }
        u += 1;
    }
    Ok((total - 1.0).abs())
}

fn heat_kernel(p: &HeatKernelParams) -> Result<RunOutput> {
    let mut kernel = Table::new("kernel", &["tau", "u", "p1", "ratio_pang", "ratio_upper", "ratio_lower"]);
    for &tau in &p.taus {
        for &u in &p.displacements {
            let value = kernel_1d(tau, u)?;
            let (a, b, c) = if tau > 0.0 {
                let r = pang_bounds_check(tau, u)?;
                (r.ratio_pang, r.ratio_upper, r.ratio_lower)
            } else {
                (f64::NAN, f64::NAN, f64::NAN)
            };
            kernel.push(vec![tau, u as f64, value, a, b, c]);
        }
    }
    let mut mass = Table::new("mass", &["tau", "defect"]);
    for &tau in &p.taus {
        mass.push(vec![tau, mass_defect(tau)?]);
    }
    let mut ell2 = Table::new("ell2", &["d", "h", "t", "tau", "norm", "predicted", "ratio"]);
    for &(d, h, t) in &p.ell2 {
        let r = ell2_norm_asymptotic_check(d, h, t)?;
        ell2.push(vec![d as f64, h, t, r.tau, r.norm, r.predicted, r.ratio]);
    }
    let zeta_failures = p
        .zeta_grid
        .iter()
        .map(|&s| zeta_bounds_check(s))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|ok| !ok)
        .count();
    let tail = tail_fit(p.tail_dim, p.tail_h, p.tail_t, &p.tail_radii)?;
    let mut tails = Table::new("tail", &["radius", "tail_mass_sq"]);
    for (l, v) in tail.l_values.iter().zip(&tail.tails) {
        tails.push(vec![*l, *v]);
    }
    let ell2_dev = ell2
        .column("ratio")
        .unwrap_or_default()
        .iter()
        .map(|r| (r - 1.0).abs())
        .fold(0.0, f64::max);
    let results = json!({
        "max_mass_defect": mass.column("defect").unwrap_or_default().into_iter().fold(0.0, f64::max),
        "max_ell2_deviation": ell2_dev,
        "zeta_failures": zeta_failures,
        "zeta_points": p.zeta_grid.len(),
        "tail_nu": tail.nu,
        "tail_log_gamma": tail.log_gamma,
        "tail_r2": tail.fit.r2,
    });
    Ok(RunOutput {
        results,
        tables: vec![kernel, mass, ell2, tails],
    })
}

fn feynman_kac(p: &FeynmanKacParams) -> Result<RunOutput> {
    let domain = p.domain.build(p.h)?;
    let mut table = Table::new(
        "feynman_kac",
        &["potential", "t", "certified_nodes", "violations", "lower_margin", "upper_margin", "max_rel_deviation"],
    );
    let rows = p
        .potentials
        .par_iter()
        .enumerate()
        .map(|(k, expr)| -> Result<Vec<Vec<f64>>> {
            let dec = decompose(expr, &domain)?;
            p.times
                .iter()
                .map(|&t| {
                    let r = feynman_kac_sandwich_check(&dec, t, &p.x0)?;
                    Ok(vec![
                        k as f64,
                        t,
                        r.certified_nodes as f64,
                        r.violations as f64,
                        r.lower_margin,
                        r.upper_margin,
                        r.max_rel_deviation,
                    ])
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    rows.into_iter().flatten().for_each(|r| table.push(r));
    let col = |n: &str| table.column(n).unwrap_or_default();
    let results = json!({
        "violations": col("violations").iter().sum::<f64>(),
        "min_certified_nodes": col("certified_nodes").into_iter().fold(f64::INFINITY, f64::min),
    });
    Ok(RunOutput {
        results,
        tables: vec![table],
    })
}

fn regressor_for(expr: &PotentialExpr, domain: &LatticeBox) -> KappaRegressor {
    let v = expr.linf_on(domain);
    if v == 0.0 {
        KappaRegressor::Plain
    } else {
        KappaRegressor::Bounded { v_linf: v }
    }
}

fn spectral(p: &SpectralParams) -> Result<RunOutput> {
    let jobs: Vec<(usize, f64)> = (0..p.potentials.len())
        .flat_map(|k| p.hs.iter().map(move |&h| (k, h)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(k, h)| -> Result<(Vec<Vec<f64>>, Value, f64)> {
            let domain = p.domain.build(h)?;
            let dec = decompose(&p.potentials[k], &domain)?;
            let mask = p.mask.build(&domain)?;
            let cap = p.eps0 / (h * h);
            let mut rows = Vec::new();
            let mut points = Vec::new();
            for &mu in dec.eigenvalues().iter().filter(|&&l| l <= cap) {
                let cert = optimal_constant(&dec, mu, &mask)?;
                rows.push(vec![k as f64, h, mu, cert.dim as f64, cert.sigma_min, cert.constant]);
                points.push((mu, cert.constant));
            }
            let fit = kappa_fit(&points, regressor_for(&p.potentials[k], &domain))?;
            let summary = json!({
                "h": h,
                "kappa": fit.kappa,
                "offset": fit.offset,
                "sqrt_rss": fit.sqrt_fit.rss,
                "linear_rss": fit.linear_fit.rss,
                "sublinear": fit.sublinear,
                "all_finite": points.iter().all(|p| p.1.is_finite()),
                "points": points.len(),
            });
            Ok((rows, summary, fit.kappa))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new("certificates", &["potential", "h", "mu", "dim", "sigma_min", "constant"]);
    let mut per_potential: BTreeMap<String, Value> = BTreeMap::new();
    for k in 0..p.potentials.len() {
        let mine: Vec<&(Vec<Vec<f64>>, Value, f64)> = jobs
            .iter()
            .zip(&outcomes)
            .filter(|(j, _)| j.0 == k)
            .map(|(_, o)| o)
            .collect();
        let kappas: Vec<f64> = mine.iter().map(|o| o.2).collect();
        let (lo, hi) = kappas
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        per_potential.insert(
            format!("potential_{k}"),
            json!({
                "fits": mine.iter().map(|o| o.1.clone()).collect::<Vec<_>>(),
                "kappa_spread": hi / lo,
                "all_sublinear": mine.iter().all(|o| o.1["sublinear"] == true),
                "all_finite": mine.iter().all(|o| o.1["all_finite"] == true),
            }),
        );
    }
    outcomes.into_iter().flat_map(|o| o.0).for_each(|r| table.push(r));
    Ok(RunOutput {
        results: serde_json::to_value(per_potential)?,
        tables: vec![table],
    })
}

fn control(p: &ControlParams, seed: u64) -> Result<RunOutput> {
    let per_h = p
        .hs
        .par_iter()
        .map(|&h| -> Result<Vec<(f64, f64, crate::control::LrReport)>> {
            let domain = p.domain.build(h)?;
            let dec = decompose(&p.potential, &domain)?;
            let mask = p.mask.build(&domain)?;
            let u0 = p.initial.build(&domain, seed, |k| {
                if k < dec.len() {
                    Ok(dec.eigenvector(k))
                } else {
                    Err(Error::Config(vec![format!("params.initial.k = {k} exceeds {} modes", dec.len())]))
                }
            })?;
            p.horizons
                .iter()
                .map(|&t| {
                    let out = lr_control(
                        &dec,
                        &mask,
                        &u0,
                        t,
                        LrOptions {
                            rho: p.rho,
                            eps0: p.eps0,
                            kappa: p.kappa,
                        },
                    )?;
                    Ok((h, t, out.report))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let runs: Vec<(f64, f64, crate::control::LrReport)> = per_h.into_iter().flatten().collect();

    let mut summary = Table::new(
        "runs",
        &[
            "h", "T", "j_h", "final_ratio", "high_ratio", "low_residual", "total_cost", "max_annihilation",
            "decay_ok",
        ],
    );
    let mut windows = Table::new(
        "windows",
        &["h", "T", "j", "start", "duration", "modes", "min_eig", "c_obs", "cost", "annihilation"],
    );
    for (h, t, r) in &runs {
        let ann = r.windows.iter().map(|w| w.annihilation).fold(0.0, f64::max);
        let ok = r.terminal_decay_holds && r.windows.iter().all(|w| w.decay_bound_holds);
        summary.push(vec![
            *h,
            *t,
            r.j_h as f64,
            r.final_ratio,
            r.high_ratio,
            r.low_residual,
            r.total_cost,
            ann,
            ok as u8 as f64,
        ]);
        for w in &r.windows {
            windows.push(vec![*h, *t, w.j as f64, w.start, w.duration, w.modes as f64, w.min_eig, w.c_obs, w.cost, w.annihilation]);
        }
    }
    let mut decay_fits = Vec::new();
    if p.hs.len() >= 2 {
        for &t in &p.horizons {
            let (x, y): (Vec<f64>, Vec<f64>) = runs
                .iter()
                .filter(|r| r.1 == t && r.2.high_ratio > 0.0)
                .map(|r| (t / (r.0 * r.0), r.2.high_ratio.ln()))
                .unzip();
            if x.len() >= 2 {
                let f = linear_fit(&x, &y)?;
                decay_fits.push(json!({ "T": t, "slope": f.slope, "intercept": f.intercept, "r2": f.r2 }));
            }
        }
    }
    let mut cost_regimes = Vec::new();
    if p.horizons.len() >= 4 {
        for &h in &p.hs {
            let mut pts: Vec<(f64, f64)> = runs.iter().filter(|r| r.0 == h).map(|r| (r.1, r.2.total_cost)).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let large = &pts[pts.len() / 2..];
            let nonincreasing = large.windows(2).all(|w| w[1].1 <= w[0].1);
            let small = &pts[..3];
            let f = linear_fit(
                &small.iter().map(|p| 1.0 / p.0).collect::<Vec<_>>(),
                &small.iter().map(|p| p.1.ln()).collect::<Vec<_>>(),
            )?;
            cost_regimes.push(json!({
                "h": h,
                "large_time_nonincreasing": nonincreasing,
                "small_time_slope": f.slope,
                "small_time_r2": f.r2,
            }));
        }
    }
    let col = |n: &str| summary.column(n).unwrap_or_default();
    let results = json!({
        "max_annihilation": col("max_annihilation").into_iter().fold(0.0, f64::max),
        "max_low_residual": col("low_residual").into_iter().fold(0.0, f64::max),
        "decay_bounds_hold": col("decay_ok").iter().all(|&v| v == 1.0),
        "max_duality_defect": windows.rows.iter().filter(|r| r[5] > 0.0).map(|r| (r[6] * r[7] - 1.0).abs()).fold(0.0, f64::max),
        "decay_fits": decay_fits,
        "cost_regimes": cost_regimes,
        "diagnostics": runs.iter().filter_map(|r| r.2.diagnostics.clone()).collect::<Vec<_>>(),
    });
    Ok(RunOutput {
        results,
        tables: vec![summary, windows],
    })
}

fn observability(p: &ObservabilityParams, seed: u64) -> Result<RunOutput> {
    let domain = p.domain.build(p.h)?;
    let dec = decompose(&p.potential, &domain)?;
    let mask = p.mask.build(&domain)?;
    let mut consts = Table::new("constants", &["j", "T", "c_obs", "min_eig", "modes", "singular"]);
    let mut samples = Vec::new();
    for &j in &p.levels {
        for &t in &p.horizons {
            let c = observability_constant(&dec, &mask, j, t)?;
            consts.push(vec![j as f64, t, c.value, c.min_eig, c.modes as f64, c.singular as u8 as f64]);
            if c.modes > 0 {
                samples.push((j, t, c.value));
            }
        }
    }
    let monotone = p.levels.iter().all(|&j| {
        let mut v: Vec<(f64, f64)> = consts.rows.iter().filter(|r| r[0] == j as f64).map(|r| (r[1], r[2])).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-10))
    });
    let v_linf = dec.potential().max_abs();
    let fit = fit_observability(&samples, v_linf).ok();
    let v_f = p.terminal.build(&domain, seed, |k| Ok(dec.eigenvector(k.min(dec.len() - 1))))?;
    let mut relaxed = Table::new(
        "relaxed",
        &["T", "lhs", "rhs_observation", "rhs_remainder", "k_t", "remainder_coefficient", "passes"],
    );
    for &t in &p.horizons {
        let r = relaxed_observability_check(&dec, &mask, &v_f, t, p.eps0 / (p.h * p.h))?;
        relaxed.push(vec![t, r.lhs, r.rhs_observation, r.rhs_remainder, r.k_t, r.remainder_coefficient, r.passes as u8 as f64]);
    }
    let results = json!({
        "nonincreasing_in_t": monotone,
        "fit": fit.map(|f| json!({ "log_c": f.log_c, "kappa": f.kappa, "r2": f.fit.r2 })),
        "relaxed_all_pass": relaxed.column("passes").unwrap_or_default().iter().all(|&v| v == 1.0),
    });
    Ok(RunOutput {
        results,
        tables: vec![consts, relaxed],
    })
}

type Profile = fn(f64, f64) -> (f64, f64, f64);

/// Time profiles vanishing at `t = 0`; the second argument is `T*`.
pub(crate) const CARLEMAN_PROFILES: [(&str, Profile); 4] = [
    ("t", |t, _| (t, 1.0, 0.0)),
    ("t sin(pi t / T*)", |t, ts| {
        let w = PI / ts;
        let (s, c) = (w * t).sin_cos();
        (t * s, s + t * w * c, 2.0 * w * c - t * w * w * s)
    }),
    ("t^2", |t, _| (t * t, 2.0 * t, 2.0)),
    ("sinh t", |t, _| (t.sinh(), t.cosh(), t.sinh())),
];

fn carleman(p: &CarlemanParams) -> Result<RunOutput> {
    let zero = PotentialExpr::Constant { value: 0.0 };
    let per_h = p
        .hs
        .par_iter()
        .map(|&h| -> Result<Vec<Vec<f64>>> {
            let q = LatticeBox::open_cube(h, &[0.0], 1.0)?;
            let mask_box = LatticeBox::centered(1, h, 3.0)?;
            let mask = periodic_equidistributed(&mask_box, p.cell, p.gamma, |_| vec![0.0])?;
            let geometry = CarlemanGeometry {
                center: vec![0.0],
                side: 2.0,
                t_star: p.t_star,
            };
            let weight = build_weight(&geometry, &mask, p.lambda, p.target)?;
            let mut rows = Vec::new();
            for k in 1..=p.modes {
                let spatial = ScalarField::from_fn(&q, |x| (k as f64 * PI * (x[0] + 1.0) / 2.0).sin());
                for (i, (_, profile)) in CARLEMAN_PROFILES.iter().enumerate() {
                    let ts = p.t_star;
                    let field = SpaceTimeField::separable(&spatial, uniform_times(ts, p.time_samples), |t| profile(t, ts));
                    let r = carleman_sides(&field, &weight, p.s, &zero, &zero, &mask, CarlemanDials { s0: p.s0, eps0: p.eps0 })?;
                    let admissible = r.admissible_s && r.admissible_h && r.initial_zero;
                    rows.push(vec![h, k as f64, i as f64, r.lhs, r.rhs, r.ratio, r.log_scale, admissible as u8 as f64]);
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(
        "carleman",
        &["h", "mode", "profile", "lhs", "rhs", "ratio", "log_scale", "admissible"],
    );
    per_h.into_iter().flatten().for_each(|r| table.push(r));
    let maxima: Vec<f64> = p
        .hs
        .iter()
        .map(|&h| table.rows.iter().filter(|r| r[0] == h).map(|r| r[5]).fold(0.0, f64::max))
        .collect();
    let spread = maxima.iter().copied().fold(0.0, f64::max) / maxima.iter().copied().fold(f64::INFINITY, f64::min);
    let results = json!({
        "fields_per_h": p.modes * CARLEMAN_PROFILES.len(),
        "all_finite": table.column("ratio").unwrap_or_default().iter().all(|r| r.is_finite()),
        "all_admissible": table.column("admissible").unwrap_or_default().iter().all(|&v| v == 1.0),
        "hs": p.hs,
        "max_ratio": maxima,
        "max_ratio_spread": spread,
    });
    Ok(RunOutput {
        results,
        tables: vec![table],
    })
}

fn necessity(p: &NecessityParams) -> Result<RunOutput> {
    let curves = p
        .hs
        .par_iter()
        .map(|&h| {
            let domain = p.domain.build(h)?;
            let dec = decompose(&p.potential, &domain)?;
            let base = p.mask.build(&domain)?;
            necessity_experiment(&dec, &base, &p.x0, &p.radii, p.horizon, p.remainder)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(
        "necessity",
        &["h", "radius", "mask_nodes", "observed_energy", "final_energy", "constant", "tail_bound"],
    );
    let mut fits = Vec::new();
    for c in &curves {
        for pt in &c.points {
            table.push(vec![c.h, pt.radius, pt.mask_nodes as f64, pt.observed_energy, pt.final_energy, pt.constant, pt.tail_bound]);
        }
        fits.push(json!({
            "h": c.h,
            "strictly_increasing": c.strictly_increasing,
            "slope": c.fit.as_ref().map(|f| f.slope),
            "r2": c.fit.as_ref().map(|f| f.r2),
        }));
    }
    Ok(RunOutput {
        results: json!({ "curves": fits }),
        tables: vec![table],
    })
}
