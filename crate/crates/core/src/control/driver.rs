use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::gramian::{constant_from_gramian, exp_integral, gramian_from_overlap, mask_overlap};
use super::schedule::{lr_schedule, CaseDiagnostics, ControlPlan, Window};
use crate::error::{Error, Result};
use crate::geometry::ObservationMask;
use crate::lattice::ScalarField;
use crate::schrodinger::{dyadic_threshold, mesh_cap, SpectralDecomposition};

/// Control on one window: `f(t) = 1_ω S(a_j + T_j - t) w` for `t ∈ (a_j, a_j + T_j]`,
/// with `w = Σ_{k < modes} w_k φ_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowControl {
    pub window: Window,
    pub modes: usize,
    pub w: Vec<f64>,
    /// `‖f‖^2_{L^2(window; ℓ^2(ω))} = ⟨w, G w⟩`.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    pub windows: Vec<WindowControl>,
}

impl ControlSignal {
    pub fn cost(&self) -> f64 {
        self.windows.iter().map(|w| w.cost).sum()
    }

    /// `f(t)`; zero off the controlled windows and outside the mask.
    pub fn sample(&self, dec: &SpectralDecomposition, mask: &ObservationMask, t: f64) -> Result<ScalarField<f64>> {
        let active = self
            .windows
            .iter()
            .find(|wc| t > wc.window.start && t <= wc.window.control_end());
        let Some(wc) = active else {
            return Ok(ScalarField::zeros(dec.domain()));
        };
        let lag = wc.window.control_end() - t;
        let lambda = dec.eigenvalues();
        let c = DVector::from_iterator(wc.modes, (0..wc.modes).map(|k| (-lambda[k] * lag).exp() * wc.w[k]));
        let full = dec.synthesize(&c);
        let inside = mask.inside();
        let values = full.values().iter().zip(inside).map(|(v, &i)| if i { *v } else { 0.0 }).collect();
        ScalarField::from_values(dec.domain(), values)
    }

    /// `n` uniformly spaced samples on each controlled window, endpoints included.
    pub fn sample_grid(
        &self,
        dec: &SpectralDecomposition,
        mask: &ObservationMask,
        n: usize,
    ) -> Result<Vec<(f64, ScalarField<f64>)>> {
        let mut out = Vec::new();
        for wc in &self.windows {
            for i in 0..n.max(2) {
                let t = wc.window.start + wc.window.duration * i as f64 / (n.max(2) - 1) as f64;
                let t = if i == 0 { t + wc.window.duration * 1e-12 } else { t };
                out.push((t, self.sample(dec, mask, t)?));
            }
        }
        Ok(out)
    }
}

struct WindowSolve {
    w: DVector<f64>,
    cost: f64,
    min_eig: f64,
    end: DVector<f64>,
}

/// Solves the HUM problem on one window. `overlap` is `n × m`.
fn solve_window(
    lambda: &[f64],
    overlap: &DMatrix<f64>,
    c: &DVector<f64>,
    j: usize,
    tau: f64,
) -> Result<WindowSolve> {
    let n = lambda.len();
    let m = overlap.ncols();
    let decay = |i: usize| (-lambda[i] * tau).exp();
    if m == 0 {
        return Ok(WindowSolve {
            w: DVector::zeros(0),
            cost: 0.0,
            min_eig: f64::INFINITY,
            end: DVector::from_fn(n, |i, _| decay(i) * c[i]),
        });
    }
    let g = gramian_from_overlap(overlap, lambda, m, tau);
    let info = constant_from_gramian(&g);
    if info.singular {
        return Err(Error::NonObservable {
            window: j,
            min_eig: info.min_eig,
            threshold: info.threshold,
        });
    }
    let rhs = DVector::from_fn(m, |i, _| -decay(i) * c[i]);
    let solve = |b: &DVector<f64>| -> Result<DVector<f64>> {
        match g.clone().cholesky() {
            Some(ch) => Ok(ch.solve(b)),
            None => g.clone().lu().solve(b).ok_or_else(|| Error::Solver {
                message: format!("window {j} Gramian solve failed"),
                residuals: vec![],
            }),
        }
    };
    let mut w = solve(&rhs)?;
    let correction = solve(&(&rhs - &g * &w))?;
    w += correction;
    let cost = w.dot(&(&g * &w));
    let end = DVector::from_fn(n, |i, _| {
        let forced: f64 = (0..m)
            .map(|k| overlap[(i, k)] * exp_integral(lambda[i] + lambda[k], tau) * w[k])
            .sum();
        decay(i) * c[i] + forced
    });
    Ok(WindowSolve {
        w,
        cost,
        min_eig: info.min_eig,
        end,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialControl {
    pub control: WindowControl,
    /// State at `a_j + T_j`.
    pub end_state: ScalarField<f64>,
    /// `‖Π_{E_j} u(a_j + T_j)‖ / ‖u(a_j)‖`.
    pub residual: f64,
    pub min_eig: f64,
}

/// Minimal-norm control on `(a_j, a_j + T_j]` steering `Π_{E_j} u` to zero.
pub fn partial_control(
    dec: &SpectralDecomposition,
    mask: &ObservationMask,
    state: &ScalarField<f64>,
    window: Window,
) -> Result<PartialControl> {
    let m = dec.count_at_most(dyadic_threshold(window.j));
    let overlap = mask_overlap(dec, mask, m)?;
    let c = dec.coefficients(state)?;
    let sol = solve_window(dec.eigenvalues(), &overlap, &c, window.j, window.duration)?;
    let low = sol.end.rows(0, m).norm();
    Ok(PartialControl {
        control: WindowControl {
            window,
            modes: m,
            w: sol.w.as_slice().to_vec(),
            cost: sol.cost,
        },
        end_state: dec.synthesize(&sol.end),
        residual: relative(low, c.norm()),
        min_eig: sol.min_eig,
    })
}

fn relative(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrOptions {
    pub rho: f64,
    pub eps0: f64,
    /// Spectral-inequality rate used for the regime diagnostics.
    pub kappa: Option<f64>,
}

impl Default for LrOptions {
    fn default() -> Self {
        Self {
            rho: 0.5,
            eps0: 1.0,
            kappa: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub j: usize,
    pub start: f64,
    pub duration: f64,
    pub modes: usize,
    pub min_eig: f64,
    /// `1 / min_eig`.
    pub c_obs: f64,
    pub cost: f64,
    /// `‖Π_{E_j} u(a_j + T_j)‖ / ‖u(a_j)‖`.
    pub annihilation: f64,
    pub norm_start: f64,
    pub norm_after_control: f64,
    pub norm_after_decay: f64,
    /// Smallest eigenvalue above `2^{2j}`.
    pub lambda_plus: Option<f64>,
    pub decay_bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrReport {
    pub j_h: usize,
    pub windows: Vec<WindowReport>,
    pub initial_norm: f64,
    pub final_norm: f64,
    /// `‖u(T)‖ / ‖u_0‖`.
    pub final_ratio: f64,
    /// `‖Π_{2^{2J_h}} u(T)‖ / ‖u_0‖`.
    pub low_residual: f64,
    /// `‖(1 - Π_{2^{2J_h}}) u(T)‖ / ‖u_0‖`, the norm of `u(T)` without its rounding-level low part.
    pub high_ratio: f64,
    pub total_cost: f64,
    pub terminal_decay_holds: bool,
    pub v_linf: f64,
    pub diagnostics: Option<CaseDiagnostics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrOutcome {
    pub plan: ControlPlan,
    pub signal: ControlSignal,
    pub report: LrReport,
    /// Coefficients of `u(a_j)` for each window, then of `u(a_{J_h+1})`.
    checkpoints: Vec<DVector<f64>>,
}

/// Lebeau–Robbiano driver: HUM control on `E_j` over each window, free decay between.
pub fn lr_control(
    dec: &SpectralDecomposition,
    mask: &ObservationMask,
    u0: &ScalarField<f64>,
    t: f64,
    options: LrOptions,
) -> Result<LrOutcome> {
    let j_h = mesh_cap(dec.domain().h(), options.eps0)?;
    let plan = lr_schedule(t, options.rho, j_h)?;
    let lambda = dec.eigenvalues();
    let mut c = dec.coefficients(u0)?;
    let initial_norm = c.norm();
    let mut windows = Vec::with_capacity(plan.windows.len());
    let mut reports = Vec::with_capacity(plan.windows.len());
    let mut checkpoints = Vec::with_capacity(plan.windows.len() + 1);
    for &window in &plan.windows {
        checkpoints.push(c.clone());
        let mu = dyadic_threshold(window.j);
        let m = dec.count_at_most(mu);
        let overlap = mask_overlap(dec, mask, m)?;
        let norm_start = c.norm();
        let sol = solve_window(lambda, &overlap, &c, window.j, window.duration)?;
        let low = sol.end.rows(0, m).norm();
        let norm_after_control = sol.end.norm();
        c = DVector::from_fn(lambda.len(), |i, _| (-lambda[i] * window.duration).exp() * sol.end[i]);
        let norm_after_decay = c.norm();
        let lambda_plus = dec.next_above(mu);
        let low_growth = lambda.first().map_or(1.0, |l0| (-l0 * window.duration).exp().max(1.0));
        let bound = lambda_plus.map_or(0.0, |lp| (-lp * window.duration).exp()) * norm_after_control
            + low * low_growth;
        reports.push(WindowReport {
            j: window.j,
            start: window.start,
            duration: window.duration,
            modes: m,
            min_eig: sol.min_eig,
            c_obs: 1.0 / sol.min_eig,
            cost: sol.cost,
            annihilation: relative(low, norm_start),
            norm_start,
            norm_after_control,
            norm_after_decay,
            lambda_plus,
            decay_bound_holds: norm_after_decay <= bound * (1.0 + 1e-12) + 1e-300,
        });
        windows.push(WindowControl {
            window,
            modes: m,
            w: sol.w.as_slice().to_vec(),
            cost: sol.cost,
        });
    }
    checkpoints.push(c.clone());
    let before = c.norm();
    let tail = t - plan.terminal_start;
    let m_final = dec.count_at_most(dyadic_threshold(j_h));
    let low_before = c.rows(0, m_final).norm();
    c = DVector::from_fn(lambda.len(), |i, _| (-lambda[i] * tail).exp() * c[i]);
    let final_norm = c.norm();
    let lp = dec.next_above(dyadic_threshold(j_h));
    let terminal_bound = lp.map_or(0.0, |l| (-l * tail).exp()) * before
        + low_before * lambda.first().map_or(1.0, |l0| (-l0 * tail).exp().max(1.0));
    let v_linf = dec.potential().max_abs();
    let diagnostics = options.kappa.map(|k| plan.diagnostics(k, v_linf)).transpose()?;
    let signal = ControlSignal { windows };
    let report = LrReport {
        j_h,
        windows: reports,
        initial_norm,
        final_norm,
        final_ratio: relative(final_norm, initial_norm),
        low_residual: relative(c.rows(0, m_final).norm(), initial_norm),
        high_ratio: relative(c.rows(m_final, c.len() - m_final).norm(), initial_norm),
        total_cost: signal.cost(),
        terminal_decay_holds: final_norm <= terminal_bound * (1.0 + 1e-12) + 1e-300,
        v_linf,
        diagnostics,
    };
    Ok(LrOutcome {
        plan,
        signal,
        report,
        checkpoints,
    })
}

impl LrOutcome {
    /// Controlled state `u(t)`, exact in the eigenbasis, at each requested time in `[0, T]`.
    pub fn trajectory(
        &self,
        dec: &SpectralDecomposition,
        mask: &ObservationMask,
        times: &[f64],
    ) -> Result<Vec<ScalarField<f64>>> {
        let lambda = dec.eigenvalues();
        let n = lambda.len();
        let overlaps = self
            .signal
            .windows
            .iter()
            .map(|wc| mask_overlap(dec, mask, wc.modes))
            .collect::<Result<Vec<_>>>()?;
        times
            .iter()
            .map(|&t| {
                if !(0.0..=self.plan.t).contains(&t) {
                    return Err(Error::Domain(format!("time {t} outside [0, {}]", self.plan.t)));
                }
                let idx = self.signal.windows.iter().position(|wc| t < wc.window.end());
                let c = match idx {
                    None => {
                        let c0 = self.checkpoints.last().expect("terminal checkpoint");
                        let s = t - self.plan.terminal_start;
                        DVector::from_fn(n, |i, _| (-lambda[i] * s).exp() * c0[i])
                    }
                    Some(j) => {
                        let wc = &self.signal.windows[j];
                        let c0 = &self.checkpoints[j];
                        let s = (t - wc.window.start).min(wc.window.duration);
                        let tau = wc.window.duration;
                        let mut c = DVector::from_fn(n, |i, _| {
                            let forced: f64 = (0..wc.modes)
                                .map(|k| {
                                    overlaps[j][(i, k)]
                                        * (-lambda[k] * (tau - s)).exp()
                                        * exp_integral(lambda[i] + lambda[k], s)
                                        * wc.w[k]
                                })
                                .sum();
                            (-lambda[i] * s).exp() * c0[i] + forced
                        });
                        let free = t - wc.window.control_end();
                        if free > 0.0 {
                            c.iter_mut()
                                .zip(lambda)
                                .for_each(|(ci, l)| *ci *= (-l * free).exp());
                        }
                        c
                    }
                };
                Ok(dec.synthesize(&c))
            })
            .collect()
    }
}
