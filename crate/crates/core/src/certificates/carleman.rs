use serde::{Deserialize, Serialize};

use super::weight::CarlemanWeight;
use crate::error::{Error, Result};
use crate::geometry::ObservationMask;
use crate::lattice::{backward_diff, forward_diff, laplacian, LatticeBox, ScalarField};
use crate::potentials::PotentialExpr;

/// A real field `u(t, x)` on `[0, T*] × Q` sampled on a time grid together
/// with `∂_t u` and `∂_t^2 u`. `Q` is the box's interior; `u` vanishes on its
/// boundary by the Dirichlet extension.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    domain: LatticeBox,
    times: Vec<f64>,
    u: Vec<ScalarField<f64>>,
    du: Vec<ScalarField<f64>>,
    ddu: Vec<ScalarField<f64>>,
}

/// Uniform grid of `n` points on `[0, t_end]`.
pub fn uniform_times(t_end: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect()
}

impl SpaceTimeField {
    pub fn zero(domain: &LatticeBox, times: Vec<f64>) -> Self {
        let z = ScalarField::zeros(domain);
        let n = times.len();
        Self {
            domain: domain.clone(),
            u: vec![z.clone(); n],
            du: vec![z.clone(); n],
            ddu: vec![z; n],
            times,
        }
    }

    /// `u(t, x) = g(t) v(x)`; `profile(t)` returns `(g, g', g'')`.
    pub fn separable(
        spatial: &ScalarField<f64>,
        times: Vec<f64>,
        profile: impl Fn(f64) -> (f64, f64, f64),
    ) -> Self {
        let mut out = Self::zero(spatial.domain(), times);
        for (k, &t) in out.times.iter().enumerate() {
            let (g, dg, ddg) = profile(t);
            out.u[k] = spatial.scaled(g);
            out.du[k] = spatial.scaled(dg);
            out.ddu[k] = spatial.scaled(ddg);
        }
        out
    }

    /// Samples `u` on `times`; time derivatives by second-order finite differences.
    pub fn from_samples(times: Vec<f64>, u: Vec<ScalarField<f64>>) -> Result<Self> {
        let n = times.len();
        if n < 3 || u.len() != n {
            return Err(Error::Domain("need at least 3 time samples, one field each".into()));
        }
        let domain = u[0].domain().clone();
        let dt = times[1] - times[0];
        if times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-12 * dt.abs().max(1.0)) {
            return Err(Error::Domain("finite differences need a uniform time grid".into()));
        }
        let comb = |coef: &[(usize, f64)], scale: f64| -> Result<ScalarField<f64>> {
            let mut acc = ScalarField::zeros(&domain);
            for &(i, c) in coef {
                acc = acc.add(&u[i].scaled(c))?;
            }
            Ok(acc.scaled(scale))
        };
        let mut du = Vec::with_capacity(n);
        let mut ddu = Vec::with_capacity(n);
        for k in 0..n {
            let (d1, d2) = if k == 0 {
                (
                    comb(&[(0, -3.0), (1, 4.0), (2, -1.0)], 0.5 / dt)?,
                    comb(&[(0, 1.0), (1, -2.0), (2, 1.0)], 1.0 / (dt * dt))?,
                )
            } else if k == n - 1 {
                (
                    comb(&[(n - 1, 3.0), (n - 2, -4.0), (n - 3, 1.0)], 0.5 / dt)?,
                    comb(&[(n - 1, 1.0), (n - 2, -2.0), (n - 3, 1.0)], 1.0 / (dt * dt))?,
                )
            } else {
                (
                    comb(&[(k + 1, 1.0), (k - 1, -1.0)], 0.5 / dt)?,
                    comb(&[(k + 1, 1.0), (k, -2.0), (k - 1, 1.0)], 1.0 / (dt * dt))?,
                )
            };
            du.push(d1);
            ddu.push(d2);
        }
        Ok(Self {
            domain,
            times,
            u,
            du,
            ddu,
        })
    }

    /// Pointwise sum of fields sharing box and time grid.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.times != other.times {
            return Err(Error::Domain("time grids differ".into()));
        }
        let zip = |a: &[ScalarField<f64>], b: &[ScalarField<f64>]| -> Result<Vec<ScalarField<f64>>> {
            a.iter().zip(b).map(|(x, y)| x.add(y)).collect()
        };
        Ok(Self {
            domain: self.domain.clone(),
            times: self.times.clone(),
            u: zip(&self.u, &other.u)?,
            du: zip(&self.du, &other.du)?,
            ddu: zip(&self.ddu, &other.ddu)?,
        })
    }

    pub fn domain(&self) -> &LatticeBox {
        &self.domain
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn sample(&self, k: usize) -> (&ScalarField<f64>, &ScalarField<f64>, &ScalarField<f64>) {
        (&self.u[k], &self.du[k], &self.ddu[k])
    }
}

/// Constants of the admissibility predicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlemanDials {
    pub s0: f64,
    pub eps0: f64,
}

impl Default for CarlemanDials {
    fn default() -> Self {
        Self { s0: 1.0, eps0: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlemanTerm {
    pub name: String,
    /// Term value times `e^{-log_scale}`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlemanSides {
    pub lhs_terms: Vec<CarlemanTerm>,
    pub rhs_terms: Vec<CarlemanTerm>,
    pub lhs: f64,
    pub rhs: f64,
    /// Every term is reported divided by `e^{log_scale}`, `log_scale = 2 s max φ`.
    pub log_scale: f64,
    /// `lhs / rhs`; infinite when `rhs = 0 < lhs`, zero when both vanish.
    pub ratio: f64,
    /// `s >= s0 (‖V1‖_{W^{1,∞}}^{1/2} + ‖V2‖_∞^{2/3} + 1)`.
    pub admissible_s: bool,
    /// `s h <= ε0`.
    pub admissible_h: bool,
    /// `u(0) = 0` up to `1e-12` relative.
    pub initial_zero: bool,
}

fn trapezoid(times: &[f64], vals: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(vals.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// `Σ_x e^{2s(φ(t,x) - φ_max)} |f(x)|^2` over the nodes of `f`'s box.
fn weighted_sq(f: &ScalarField<f64>, weight: &CarlemanWeight, s: f64, t: f64, phi_max: f64, keep: Option<&dyn Fn(usize) -> bool>) -> f64 {
    let dom = f.domain();
    let mut acc = 0.0;
    for (p, v) in f.values().iter().enumerate() {
        if keep.is_some_and(|k| !k(p)) || *v == 0.0 {
            continue;
        }
        let phi = weight.phi(t, &dom.point(p));
        acc += (2.0 * s * (phi - phi_max)).exp() * v * v;
    }
    acc
}

/// Both sides of the Carleman inequality for `∂_t^2 - P_h`, `P_h = -Δ_h + V1 + V2`,
/// with weight `e^{sφ}`, each term reported separately.
pub fn carleman_sides(
    field: &SpaceTimeField,
    weight: &CarlemanWeight,
    s: f64,
    v1: &PotentialExpr,
    v2: &PotentialExpr,
    mask: &ObservationMask,
    dials: CarlemanDials,
) -> Result<CarlemanSides> {
    let dom = field.domain();
    let h = dom.h();
    let d = dom.dim();
    let times = field.times();
    let nt = times.len();
    if nt < 2 {
        return Err(Error::Domain("need at least two time samples".into()));
    }
    let v1_norm = v1.w1inf_on(dom)?;
    let v2_norm = v2.linf_on(dom);
    let potential = ScalarField::from_fn(dom, |x| v1.value(x) + v2.value(x));

    let mut grown = dom.clone();
    for a in 0..d {
        grown = grown.grown(a, 1, 1);
    }
    let phi_max = times
        .iter()
        .flat_map(|&t| (0..grown.len()).map(move |p| (t, p)))
        .map(|(t, p)| weight.phi(t, &grown.point(p)))
        .fold(f64::NEG_INFINITY, f64::max);
    let log_scale = 2.0 * s * phi_max;

    let mut bulk = vec![[0.0f64; 5]; nt];
    for (k, &t) in times.iter().enumerate() {
        let (u, du, ddu) = field.sample(k);
        let mut dp = 0.0;
        let mut dm = 0.0;
        for a in 0..d {
            dp += weighted_sq(&forward_diff(u, a)?, weight, s, t, phi_max, None);
            dm += weighted_sq(&backward_diff(u, a)?, weight, s, t, phi_max, None);
        }
        let pu = laplacian(u).scaled(-1.0).add(&potential.mul(u)?)?;
        let residual = ddu.sub(&pu)?;
        bulk[k] = [
            weighted_sq(u, weight, s, t, phi_max, None),
            weighted_sq(du, weight, s, t, phi_max, None),
            dp,
            dm,
            weighted_sq(&residual, weight, s, t, phi_max, None),
        ];
    }
    let integral = |i: usize| trapezoid(times, &bulk.iter().map(|b| b[i]).collect::<Vec<_>>());

    let (u0, du0, _) = field.sample(0);
    let (ut, dut, _) = field.sample(nt - 1);
    let t_end = times[nt - 1];
    let in_omega = |p: usize| mask.domain().lattice_index(&dom.point(p)).is_ok_and(|k| mask.contains(&k));
    let mut dp_end = 0.0;
    let mut dm_end = 0.0;
    for a in 0..d {
        dp_end += weighted_sq(&forward_diff(ut, a)?, weight, s, t_end, phi_max, None);
        dm_end += weighted_sq(&backward_diff(ut, a)?, weight, s, t_end, phi_max, None);
    }
    let s3 = s * s * s;
    let term = |name: &str, value: f64| CarlemanTerm {
        name: name.into(),
        value,
    };
    let lhs_terms = vec![
        term("s^3 |e^{s phi} u|^2", s3 * integral(0)),
        term("s |e^{s phi} dt u|^2", s * integral(1)),
        term("s |e^{s phi} D+ u|^2", s * integral(2)),
        term("s |e^{s phi} D- u|^2", s * integral(3)),
        term("s |e^{s phi(0)} dt u(0)|^2_Q", s * weighted_sq(du0, weight, s, times[0], phi_max, None)),
        term("s e^{2s phi(T*)} |dt u(T*)|^2_Q", s * weighted_sq(dut, weight, s, t_end, phi_max, None)),
        term("s^3 e^{2s phi(T*)} |u(T*)|^2_Q", s3 * weighted_sq(ut, weight, s, t_end, phi_max, None)),
    ];
    let rhs_terms = vec![
        term("|e^{s phi} (dt^2 - P_h) u|^2", integral(4)),
        term("s e^{2s phi(T*)} |D+ u(T*)|^2_Q", s * dp_end),
        term("s e^{2s phi(T*)} |D- u(T*)|^2_Q", s * dm_end),
        term(
            "s |e^{s phi(0)} dt u(0)|^2_omega",
            s * weighted_sq(du0, weight, s, times[0], phi_max, Some(&in_omega)),
        ),
    ];
    let lhs: f64 = lhs_terms.iter().map(|t| t.value).sum();
    let rhs: f64 = rhs_terms.iter().map(|t| t.value).sum();
    let ratio = if rhs > 0.0 {
        lhs / rhs
    } else if lhs > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let u_scale = (0..nt).map(|k| field.sample(k).0.max_abs()).fold(0.0, f64::max);
    Ok(CarlemanSides {
        lhs_terms,
        rhs_terms,
        lhs,
        rhs,
        log_scale,
        ratio,
        admissible_s: s >= dials.s0 * (v1_norm.sqrt() + v2_norm.powf(2.0 / 3.0) + 1.0),
        admissible_h: s * h <= dials.eps0,
        initial_zero: u0.max_abs() <= 1e-12 * u_scale,
    })
}
