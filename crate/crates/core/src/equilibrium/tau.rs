//! Closed-form transmission probability of one station's contention chain.
//!
//! The chain has backoff stages `0..=r` with windows `W_i = min(2^i, 2^m) W0`,
//! a post-backoff stage `(P, 0..W0)` entered after every success or drop, and
//! the idle state `(P, 0)` from which a fresh packet is sent immediately when
//! the channel is idle. Balancing probability flows stage by stage gives the
//! stationary masses in closed form. Writing `x = 1 - q`, the post-backoff
//! stage contributes geometric sums in `x` which are evaluated through the
//! binomial tails in [`BinomialTails`]; the unnormalised solution is scaled so
//! that the idle state carries mass `1 - q`, which keeps every term finite as
//! `q -> 1`.

use crate::error::{Error, Result};

/// Lower clamp applied to the queue probability.
pub const Q_MIN: f64 = 1e-9;
/// Upper clamp applied to the queue probability.
pub const Q_MAX: f64 = 1.0 - 1e-6;

/// `h_k(n, q) = sum_{j >= k} (-1)^(j-k) C(n, j) q^(j-k)` for k = 1, 2, 3.
///
/// `h_1 = (1 - (1-q)^n) / q`, `h_2 = (n - h_1) / q`, `h_3 = (C(n,2) - h_2) / q`.
/// The recursive forms cancel catastrophically when `q n` is small, where the
/// series is used instead. `n` may be fractional.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BinomialTails {
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
}

impl BinomialTails {
    pub(crate) fn new(n: f64, q: f64) -> Self {
        if q * n < 0.05 {
            // Generalised binomial coefficients C(n, j), j = 0..
            let mut coeffs = [0.0f64; 48];
            coeffs[0] = 1.0;
            for j in 1..coeffs.len() {
                coeffs[j] = coeffs[j - 1] * (n - (j - 1) as f64) / j as f64;
            }
            let tail = |order: usize| {
                let mut sum = 0.0;
                let mut pow = 1.0;
                for (j, c) in coeffs.iter().enumerate().skip(order) {
                    let sign = if (j - order).is_multiple_of(2) {
                        1.0
                    } else {
                        -1.0
                    };
                    let term = sign * c * pow;
                    sum += term;
                    if term.abs() <= 1e-18 * sum.abs() {
                        break;
                    }
                    pow *= q;
                }
                sum
            };
            BinomialTails {
                h1: tail(1),
                h2: tail(2),
                h3: tail(3),
            }
        } else {
            let a = -(n * (-q).ln_1p()).exp_m1();
            let h1 = a / q;
            let h2 = (n - h1) / q;
            let h3 = (0.5 * n * (n - 1.0) - h2) / q;
            BinomialTails { h1, h2, h3 }
        }
    }
}

/// Probability that a station transmits in a randomly chosen slot.
///
/// * `q` - probability that a packet arrived during the last slot (clamped to
///   `[Q_MIN, Q_MAX]`; exactly zero yields zero),
/// * `p_eq` - probability that an attempt fails (collision or channel error),
/// * `p_idle` - probability that every other station is silent,
/// * `w0` - minimum contention window (may be fractional when inverting),
/// * `m` - number of window doublings, `r` - last backoff stage.
pub fn closed_form_tau(q: f64, p_eq: f64, p_idle: f64, w0: f64, m: u32, r: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!(
            "queue probability {q} outside [0, 1]"
        )));
    }
    if !(0.0..1.0).contains(&p_eq) {
        return Err(Error::Domain(format!(
            "failure probability {p_eq} outside [0, 1)"
        )));
    }
    if !(0.0..=1.0).contains(&p_idle) {
        return Err(Error::Domain(format!(
            "idle probability {p_idle} outside [0, 1]"
        )));
    }
    if !(w0.is_finite() && w0 >= 1.0) {
        return Err(Error::Domain(format!("minimum window {w0} must be >= 1")));
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    let q = q.clamp(Q_MIN, Q_MAX);
    let p = p_eq;
    let idle_mass = 1.0 - q;
    let tails = BinomialTails::new(w0, q);

    // Immediate attempts out of the idle state, and the part of them that
    // leaves the backoff stages (success, or any outcome when r = 0).
    let immediate = q * p_idle * idle_mass;
    let immediate_fail = if r >= 1 { immediate * p } else { 0.0 };

    // Uniform inflow into stage 0 and post-backoff masses for counters >= 1.
    let stage0_uniform = q * q * w0 / tails.h1 + q * (1.0 - p_idle) * idle_mass;
    let post_mass = idle_mass * q * tails.h2 / tails.h1;
    let post_weighted = idle_mass * q * (0.5 * w0 * (w0 - 1.0) + (1.0 - q) * tails.h3) / tails.h1;

    // Entry rate into (0, 0): every stage-0 state is eventually drained there.
    let stage0_entry = stage0_uniform + q * post_mass;
    let mut attempts = stage0_entry + immediate;
    let mut total = stage0_uniform * (w0 + 1.0) / 2.0 + q * post_weighted + idle_mass + post_mass;

    let mut entry = p * stage0_entry + immediate_fail;
    for stage in 1..=r {
        let window = w0 * (1u64 << stage.min(m)) as f64;
        attempts += entry;
        total += entry * (window + 1.0) / 2.0;
        entry *= p;
    }

    let tau = attempts / total;
    if !tau.is_finite() || total <= 0.0 {
        return Err(Error::Domain(format!(
            "closed form degenerate at q={q}, p_eq={p_eq}, p_idle={p_idle}, w0={w0}"
        )));
    }
    Ok(tau.clamp(0.0, 1.0))
}
