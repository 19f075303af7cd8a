use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ObservationMask;

/// The cube `Q_L` (centre, side `L`) and the time horizon `T*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlemanGeometry {
    pub center: Vec<f64>,
    pub side: f64,
    pub t_star: f64,
}

/// Sampled minima of the weight conditions for the normalized `ψ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    /// `min |∇_{t,x} ψ|` over `(0, T*) × Q_2L`.
    pub grad_min: f64,
    /// `min ψ` over `(0, T*) × Q_2L`.
    pub psi_min: f64,
    /// `min ∂_t ψ(0, ·)` over `Q_L \ ω`.
    pub dt_start_min: f64,
    /// `max ψ(T*, ·) - min ψ(T*, ·)` over `Q_L`.
    pub terminal_spread: f64,
    /// `min -∂_t ψ(T*, ·)` over `Q_L`.
    pub dt_end_min: f64,
    pub target: f64,
    pub passes: bool,
}

impl WeightReport {
    fn failing(&self) -> Option<(&'static str, f64)> {
        let half = self.target / 2.0;
        [
            ("|grad psi| >= c on (0,T*) x Q_2L", self.grad_min),
            ("psi > 0 on (0,T*) x Q_2L", self.psi_min),
            ("dt psi >= c on {0} x (Q_L minus omega)", self.dt_start_min),
            ("-dt psi >= c on {T*} x Q_L", self.dt_end_min),
        ]
        .into_iter()
        .find(|(_, v)| *v < half)
        .or_else(|| (self.terminal_spread > 1e-12).then_some(("psi constant on {T*} x Q_L", -self.terminal_spread)))
    }
}

/// Weight `φ = e^{λ ψ}` with
/// `ψ = (K + (T* - t) G(x) - β (T* - t)^2) / scale`, `G = a - b |x - x_ω|^2`,
/// centred at the point `x_ω` of `ω ∩ Q_L` deepest inside `ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlemanWeight {
    pub lambda: f64,
    pub t_star: f64,
    pub x_omega: Vec<f64>,
    /// Distance from `x_ω` to the nearest lattice node outside `ω`.
    pub r_omega: f64,
    pub a: f64,
    pub b: f64,
    pub beta: f64,
    pub k: f64,
    pub scale: f64,
    pub report: WeightReport,
}

impl CarlemanWeight {
    fn g(&self, x: &[f64]) -> f64 {
        self.a - self.b * dist_sq(x, &self.x_omega)
    }

    pub fn psi(&self, t: f64, x: &[f64]) -> f64 {
        let s = self.t_star - t;
        (self.k + s * self.g(x) - self.beta * s * s) / self.scale
    }

    pub fn dpsi_dt(&self, t: f64, x: &[f64]) -> f64 {
        let s = self.t_star - t;
        (-self.g(x) + 2.0 * self.beta * s) / self.scale
    }

    pub fn grad_psi(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let s = self.t_star - t;
        x.iter()
            .zip(&self.x_omega)
            .map(|(xi, oi)| -2.0 * self.b * s * (xi - oi) / self.scale)
            .collect()
    }

    pub fn phi(&self, t: f64, x: &[f64]) -> f64 {
        (self.lambda * self.psi(t, x)).exp()
    }
}

fn dist_sq(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum()
}

/// Lattice nodes of the closed cube `center + [-r, r]^d` with mesh `h`.
pub(crate) fn cube_nodes(center: &[f64], r: f64, h: f64) -> Vec<Vec<f64>> {
    let ranges: Vec<(i64, i64)> = center
        .iter()
        .map(|&c| {
            (
                ((c - r) / h - 1e-9).ceil() as i64,
                ((c + r) / h + 1e-9).floor() as i64,
            )
        })
        .collect();
    let mut out = Vec::new();
    let mut k: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if ranges.iter().any(|(a, b)| a > b) {
        return out;
    }
    loop {
        out.push(k.iter().map(|&i| i as f64 * h).collect());
        let mut axis = k.len();
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if k[axis] < ranges[axis].1 {
                k[axis] += 1;
                break;
            }
            k[axis] = ranges[axis].0;
        }
    }
}

fn in_mask(mask: &ObservationMask, x: &[f64]) -> bool {
    mask.domain()
        .lattice_index(x)
        .map(|k| mask.contains(&k))
        .unwrap_or(false)
}

/// Builds a weight for the geometry, searching a small grid of shape
/// multipliers for the one with the best normalized condition margins.
/// `target` is the constant `c` the sampled conditions must reach to within
/// a factor 2.
pub fn build_weight(
    geometry: &CarlemanGeometry,
    mask: &ObservationMask,
    lambda: f64,
    target: f64,
) -> Result<CarlemanWeight> {
    let h = mask.domain().h();
    let t_star = geometry.t_star;
    if !(t_star > 0.0 && geometry.side > 0.0 && lambda > 0.0 && target > 0.0) {
        return Err(Error::Domain("T*, L, λ and c must be positive".into()));
    }
    let half = geometry.side / 2.0;
    let q_l = cube_nodes(&geometry.center, half, h);
    let q_2l = cube_nodes(&geometry.center, geometry.side, h);
    let omega_nodes: Vec<&Vec<f64>> = q_l.iter().filter(|x| in_mask(mask, x)).collect();
    if omega_nodes.is_empty() {
        return Err(Error::Construction {
            condition: "omega meets Q_L".into(),
            measured: 0.0,
            needed: 1.0,
        });
    }
    let outside: Vec<Vec<f64>> = cube_nodes(&geometry.center, geometry.side + h, h)
        .into_iter()
        .filter(|x| !in_mask(mask, x))
        .collect();
    let (x_omega, r_omega) = omega_nodes
        .iter()
        .map(|x| {
            let r = outside
                .iter()
                .map(|y| dist_sq(x, y))
                .fold(f64::INFINITY, f64::min)
                .sqrt();
            ((*x).clone(), r)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty");
    let r_omega = if r_omega.is_finite() { r_omega } else { geometry.side };
    let d2_2l = corner_dist_sq(&geometry.center, geometry.side, &x_omega);
    let q_l_minus_omega: Vec<&Vec<f64>> = q_l.iter().filter(|x| !in_mask(mask, x)).collect();

    let nt = 65;
    let times: Vec<f64> = (1..nt - 1).map(|i| t_star * i as f64 / (nt - 1) as f64).collect();
    let mut best: Option<CarlemanWeight> = None;
    for mb in [1.0, 1.5, 2.0, 3.0, 4.0] {
        for mbeta in [1.0, 1.25, 1.5, 2.0, 3.0] {
            let c_a = 1.0;
            let b = mb * 2.0 * c_a / (r_omega * r_omega);
            let beta = mbeta * (1.0 + b * d2_2l) / (2.0 * t_star);
            let a = 2.0 * beta * t_star + c_a;
            let k = beta * t_star * t_star + 1.0;
            let mut w = CarlemanWeight {
                lambda,
                t_star,
                x_omega: x_omega.clone(),
                r_omega,
                a,
                b,
                beta,
                k,
                scale: 1.0,
                report: WeightReport {
                    grad_min: 0.0,
                    psi_min: 0.0,
                    dt_start_min: 0.0,
                    terminal_spread: 0.0,
                    dt_end_min: 0.0,
                    target,
                    passes: false,
                },
            };
            let mut psi_max = 0.0f64;
            for x in &q_2l {
                for &t in times.iter().chain([0.0, t_star].iter()) {
                    psi_max = psi_max.max(w.psi(t, x));
                }
            }
            w.scale = psi_max;
            w.report = measure(&w, &times, &q_l, &q_2l, &q_l_minus_omega, target);
            let score = score(&w.report);
            if best.as_ref().is_none_or(|bw| score > self::score(&bw.report)) {
                best = Some(w);
            }
        }
    }
    let best = best.expect("search grid nonempty");
    if let Some((condition, measured)) = best.report.failing() {
        return Err(Error::Construction {
            condition: condition.into(),
            measured,
            needed: target / 2.0,
        });
    }
    Ok(best)
}

fn score(r: &WeightReport) -> f64 {
    r.grad_min.min(r.psi_min).min(r.dt_start_min).min(r.dt_end_min)
}

fn corner_dist_sq(center: &[f64], r: f64, x: &[f64]) -> f64 {
    center
        .iter()
        .zip(x)
        .map(|(c, xi)| ((c - r - xi).abs().max((c + r - xi).abs())).powi(2))
        .sum()
}

fn measure(
    w: &CarlemanWeight,
    times: &[f64],
    q_l: &[Vec<f64>],
    q_2l: &[Vec<f64>],
    q_l_minus_omega: &[&Vec<f64>],
    target: f64,
) -> WeightReport {
    let mut grad_min = f64::INFINITY;
    let mut psi_min = f64::INFINITY;
    for x in q_2l {
        for &t in times {
            let g = w.grad_psi(t, x);
            let dt = w.dpsi_dt(t, x);
            let norm = (g.iter().map(|v| v * v).sum::<f64>() + dt * dt).sqrt();
            grad_min = grad_min.min(norm);
            psi_min = psi_min.min(w.psi(t, x));
        }
    }
    let dt_start_min = q_l_minus_omega
        .iter()
        .map(|x| w.dpsi_dt(0.0, x))
        .fold(f64::INFINITY, f64::min);
    let term: Vec<f64> = q_l.iter().map(|x| w.psi(w.t_star, x)).collect();
    let spread = term.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - term.iter().copied().fold(f64::INFINITY, f64::min);
    let dt_end_min = q_l
        .iter()
        .map(|x| -w.dpsi_dt(w.t_star, x))
        .fold(f64::INFINITY, f64::min);
    let mut r = WeightReport {
        grad_min,
        psi_min,
        dt_start_min,
        terminal_spread: spread,
        dt_end_min,
        target,
        passes: false,
    };
    r.passes = r.failing().is_none();
    r
}
