use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `c_ρ = (1 - 2^{-ρ}) / (4 (2^{2-ρ} - 1))`.
pub fn c_rho(rho: f64) -> f64 {
    (1.0 - 2f64.powf(-rho)) / (4.0 * (2f64.powf(2.0 - rho) - 1.0))
}

/// `ρ_ε = ε / (1 + ε)`.
pub fn rho_for_epsilon(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("ε = {eps} must lie in (0, 1]")));
    }
    Ok(eps / (1.0 + eps))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub j: usize,
    /// `a_j`.
    pub start: f64,
    /// `T_j`; control acts on `(a_j, a_j + T_j]`, free decay on `(a_j + T_j, a_j + 2 T_j]`.
    pub duration: f64,
}

impl Window {
    pub fn control_end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn end(&self) -> f64 {
        self.start + 2.0 * self.duration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPlan {
    pub t: f64,
    pub rho: f64,
    /// `L = (1 - 2^{-ρ}) T / 4`.
    pub l: f64,
    pub windows: Vec<Window>,
    /// `a_{J_h + 1}`; free decay on `[a_{J_h+1}, T]`.
    pub terminal_start: f64,
    pub c_rho: f64,
}

/// Dyadic Lebeau–Robbiano schedule with `T_j = L 2^{-jρ}`, `j = 0..=J_h`.
pub fn lr_schedule(t: f64, rho: f64, j_h: usize) -> Result<ControlPlan> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!("ρ = {rho} must lie in (0, 1)")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("horizon T = {t} must be positive")));
    }
    let l = (1.0 - 2f64.powf(-rho)) * t / 4.0;
    let mut start = 0.0;
    let mut windows = Vec::with_capacity(j_h + 1);
    for j in 0..=j_h {
        let duration = l * 2f64.powf(-(j as f64) * rho);
        windows.push(Window { j, start, duration });
        start += 2.0 * duration;
    }
    Ok(ControlPlan {
        t,
        rho,
        l,
        windows,
        terminal_start: start,
        c_rho: c_rho(rho),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostRegime {
    /// `T > K_ε (1 + ‖V‖^{2/3})`.
    LargeTime,
    SmallTime,
}

/// Small-time bookkeeping of the dyadic argument, for a given `κ` and `‖V‖_∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseDiagnostics {
    pub kappa: f64,
    pub v_linf: f64,
    /// `ε = ρ / (1 - ρ)`.
    pub epsilon: f64,
    pub c_rho: f64,
    /// `(2^{ρ} - 1) / (2 (4 - 2^{ρ}))`, the closed form quoted for `c_ε`; equals `2 c_ρ`.
    pub c_eps_printed: f64,
    /// `K_ε = 2 κ / c_ε` with `c_ε = c_{ρ_ε}`.
    pub k_eps: f64,
    pub threshold_time: f64,
    pub regime: CostRegime,
    /// Large-time threshold `7 κ (1 + ‖V‖^{2/3}) / c_ρ` of the proof.
    pub large_time_threshold: f64,
    pub x1: f64,
    pub x2: f64,
    /// `g(x_2)`, the maximum of `g(x) = 6κ(1+‖V‖^{2/3}) x - c_ρ T x^{2-ρ}` on `x > 0`.
    pub g_max: f64,
    /// `min{j : 2^j >= x_1}`.
    pub j_star: u32,
    /// `6 κ (2^{1/(1+ε)} - 1)(1 + ‖V‖^{2/3})`.
    pub b_eps_from_root: f64,
    /// `c_ε^{-ε}`.
    pub b_eps_from_power: f64,
}

impl ControlPlan {
    pub fn diagnostics(&self, kappa: f64, v_linf: f64) -> Result<CaseDiagnostics> {
        if !(kappa > 0.0 && v_linf >= 0.0) {
            return Err(Error::Domain("κ must be positive and ‖V‖ nonnegative".into()));
        }
        let rho = self.rho;
        let eps = rho / (1.0 - rho);
        let growth = 1.0 + v_linf.powf(2.0 / 3.0);
        let a = 6.0 * kappa * growth;
        let c = self.c_rho;
        let x1 = (a / (c * self.t)).powf(1.0 / (1.0 - rho));
        let x2 = (a / ((2.0 - rho) * c * self.t)).powf(1.0 / (1.0 - rho));
        let g_max = a * x2 - c * self.t * x2.powf(2.0 - rho);
        let mut j_star = 0u32;
        while 2f64.powi(j_star as i32) < x1 {
            j_star += 1;
        }
        let p = 2f64.powf(eps / (1.0 + eps));
        let c_eps_printed = (p - 1.0) / (2.0 * (4.0 - p));
        let k_eps = 2.0 * kappa / c;
        let threshold_time = k_eps * growth;
        Ok(CaseDiagnostics {
            kappa,
            v_linf,
            epsilon: eps,
            c_rho: c,
            c_eps_printed,
            k_eps,
            threshold_time,
            regime: if self.t > threshold_time {
                CostRegime::LargeTime
            } else {
                CostRegime::SmallTime
            },
            large_time_threshold: 7.0 * kappa * growth / c,
            x1,
            x2,
            g_max,
            j_star,
            b_eps_from_root: 6.0 * kappa * (2f64.powf(1.0 / (1.0 + eps)) - 1.0) * growth,
            b_eps_from_power: c.powf(-eps),
        })
    }
}
