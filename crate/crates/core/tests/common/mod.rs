#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `e^{-x} I_n(x)` by Miller's downward recurrence, normalized with
/// `e^{-x} (I_0(x) + 2 Σ_{k>=1} I_k(x)) = 1`.
pub fn scaled_bessel_i(n: u64, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let start = n.max(x.ceil() as u64) + 60 + (25.0 * x.sqrt()) as u64;
    let mut next = 0.0f64;
    let mut cur = 1e-280f64;
    let mut sum = 2.0 * cur;
    let mut val = if start == n { cur } else { 0.0 };
    for k in (1..=start).rev() {
        let prev = (2.0 * k as f64 / x) * cur + next;
        next = cur;
        cur = prev;
        let idx = k - 1;
        if idx == n {
            val = cur;
        }
        sum += if idx == 0 { cur } else { 2.0 * cur };
        if cur > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            sum *= 1e-250;
            val *= 1e-250;
        }
    }
    val / sum
}

/// Lattice heat kernel oracle `p1(τ, u) = e^{-2τ} I_|u|(2τ)`.
pub fn kernel_oracle(tau: f64, u: i64) -> f64 {
    scaled_bessel_i(u.unsigned_abs(), 2.0 * tau)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Dirichlet path-graph spectrum `4 h^-2 sin^2(kπ / 2(n+1))`, `k = 1..n`.
pub fn path_spectrum(n: usize, h: f64) -> Vec<f64> {
    (1..=n)
        .map(|k| {
            let s = (k as f64 * std::f64::consts::PI / (2.0 * (n as f64 + 1.0))).sin();
            4.0 * s * s / (h * h)
        })
        .collect()
}
