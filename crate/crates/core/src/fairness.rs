//! Load-weighted proportional-fairness allocations.
//!
//! Station `s` gets weight `w_s` and the allocation maximises
//! `U = sum_s w_s log S_s` over the transmission probabilities. With
//! `S_s = tau_s prod_{k != s}(1 - tau_k) (1 - P_e) 8 PL / T_av` and
//! `C = sum_s w_s`, the stationarity conditions read
//!
//! ```text
//! w_j / tau_j - (sum_{k != j} w_k) / (1 - tau_j) - (C / T_av) dT_av/dtau_j = 0
//! ```
//!
//! The derivative of `T_av` is taken numerically. The optimal `tau*` is then
//! mapped to per-station minimum contention windows through the closed form.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{
    closed_form_tau, slot_breakdown, throughput, EquilibriumState, ThroughputReport,
};
use crate::error::{Error, Result};
use crate::scenario::{build_duration_classes, DurationClassMap, Scenario, StationProfile};

/// Solver domain for each `tau_j`.
pub const TAU_LOWER: f64 = 1e-6;
pub const TAU_UPPER: f64 = 0.5;
/// Search interval for the minimum contention window.
pub const CW_RANGE: (f64, f64) = (1.0, 65536.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// Plain proportional fairness, all weights 1.
    Pf,
    /// Weights `lambda_s / lambda_max`.
    Lpf,
    /// Weights `lambda*_s / lambda*_max` with rates truncated to what the
    /// station's bit rate can carry.
    Mlpf,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Pf, Criterion::Lpf, Criterion::Mlpf];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Pf => "pf",
            Criterion::Lpf => "lpf",
            Criterion::Mlpf => "mlpf",
        }
    }

    pub fn weights(self, sc: &Scenario) -> Result<Vec<f64>> {
        let rates: Vec<f64> = match self {
            Criterion::Pf => return Ok(vec![1.0; sc.len()]),
            Criterion::Lpf => sc.stations.iter().map(|s| s.packet_rate).collect(),
            Criterion::Mlpf => mlpf_truncate(&sc.stations),
        };
        normalise_by_max(&rates)
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pf" => Ok(Criterion::Pf),
            "lpf" => Ok(Criterion::Lpf),
            "mlpf" => Ok(Criterion::Mlpf),
            other => Err(format!(
                "unknown criterion `{other}` (expected pf, lpf or mlpf)"
            )),
        }
    }
}

fn normalise_by_max(rates: &[f64]) -> Result<Vec<f64>> {
    let max = rates.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::Infeasible("every weight is zero".into()));
    }
    Ok(rates.iter().map(|r| r / max).collect())
}

/// Packet rates capped at what each station's bit rate can physically carry:
/// `lambda*_s = min(lambda_s, R_s / (8 PL_s))`.
pub fn mlpf_truncate(stations: &[StationProfile]) -> Vec<f64> {
    stations
        .iter()
        .map(|s| {
            if s.offered_load() <= s.bit_rate {
                s.packet_rate
            } else {
                s.bit_rate / s.payload_bits()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Utility {
    /// `sum w_s log S_s`; `-inf` when a weighted station gets nothing.
    pub value: f64,
    /// Set when some station with positive weight has zero throughput.
    pub degenerate: bool,
}

/// Weighted log utility. Stations with zero weight contribute nothing.
pub fn utility(weights: &[f64], throughputs: &[f64]) -> Utility {
    let mut value = 0.0;
    for (&w, &s) in weights.iter().zip(throughputs) {
        if w == 0.0 {
            continue;
        }
        if !(s > 0.0) {
            return Utility {
                value: f64::NEG_INFINITY,
                degenerate: true,
            };
        }
        value += w * s.ln();
    }
    Utility {
        value,
        degenerate: false,
    }
}

/// `(sum x)^2 / (N sum x^2)`.
pub fn jain_index(values: &[f64]) -> Result<f64> {
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Domain(
            "Jain index needs finite non-negative values".into(),
        ));
    }
    let sum: f64 = values.iter().sum();
    let sq: f64 = values.iter().map(|v| v * v).sum();
    if !(sq > 0.0) {
        return Err(Error::Domain("Jain index of an all-zero vector".into()));
    }
    Ok(sum * sum / (values.len() as f64 * sq))
}

/// Central finite-difference step for `dT_av/dtau_j`.
pub fn derivative_step(tau_j: f64) -> f64 {
    (1e-4 * tau_j).max(1e-7)
}

/// `dT_av/dtau_j` by a central difference with step `h`.
pub fn t_av_derivative(
    j: usize,
    tau: &[f64],
    h: f64,
    sc: &Scenario,
    classes: &DurationClassMap,
) -> f64 {
    let mut probe = tau.to_vec();
    probe[j] = tau[j] + h;
    let up = slot_breakdown(&probe, sc, classes).t_av;
    probe[j] = tau[j] - h;
    let down = slot_breakdown(&probe, sc, classes).t_av;
    (up - down) / (2.0 * h)
}

/// Residual of the `j`-th stationarity equation.
pub fn stationarity_residual(
    j: usize,
    tau: &[f64],
    weights: &[f64],
    sc: &Scenario,
    classes: &DurationClassMap,
) -> Result<f64> {
    let tj = tau[j];
    if !(tj > 0.0 && tj < 1.0) {
        return Err(Error::Domain(format!("tau[{j}] = {tj} outside (0, 1)")));
    }
    let c: f64 = weights.iter().sum();
    let others = c - weights[j];
    let t_av = slot_breakdown(tau, sc, classes).t_av;
    let dt = t_av_derivative(j, tau, derivative_step(tj), sc, classes);
    Ok(weights[j] / tj - others / (1.0 - tj) - c / t_av * dt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationOptions {
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub initial_tau: f64,
}

impl Default for AllocationOptions {
    fn default() -> Self {
        AllocationOptions {
            tolerance: 1e-7,
            max_sweeps: 2000,
            initial_tau: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub criterion: Criterion,
    pub weights: Vec<f64>,
    pub tau_star: Vec<f64>,
    /// Minimum contention windows realising `tau_star`.
    pub cw_min: Vec<u32>,
    /// Stations whose `tau_star` is capped by their traffic (window 1).
    pub window_limited: Vec<bool>,
    /// Throughput predicted by the model at `tau_star`.
    pub predicted: ThroughputReport,
    pub utility: Utility,
    /// Jain index of the predicted throughputs normalised by bit rate.
    pub jain: f64,
    /// Largest stationarity residual over stations not pinned to a bound.
    pub residual: f64,
    pub sweeps: usize,
}

/// Root of a decreasing-through-zero function on `[lo, hi]` by bisection.
/// Returns the bound itself when the function does not change sign.
fn bisect_root(mut f: impl FnMut(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let f_lo = f(lo)?;
    if f_lo <= 0.0 {
        return Ok(lo);
    }
    let f_hi = f(hi)?;
    if f_hi >= 0.0 {
        return Ok(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest `tau_j` any window can produce: the closed form at `W0 = 1`
/// with queue and failure probabilities taken at `tau`.
pub fn reachable_tau(
    j: usize,
    tau: &[f64],
    sc: &Scenario,
    classes: &DurationClassMap,
) -> Result<f64> {
    let (state, _) = EquilibriumState::at_tau(tau.to_vec(), sc, classes);
    let p = &sc.params;
    closed_form_tau(
        state.q[j].clamp(0.0, 1.0),
        state.p_eq[j].min(1.0 - 1e-12),
        state.p_idle_others[j],
        CW_RANGE.0,
        p.max_backoff_stage,
        p.retry_limit,
    )
}

/// Upper end of the feasible interval of `tau_j`.
fn upper_bound(
    j: usize,
    tau: &[f64],
    sc: &Scenario,
    classes: &DurationClassMap,
    window_limited: bool,
) -> Result<f64> {
    Ok(if window_limited {
        reachable_tau(j, tau, sc, classes)?.min(TAU_UPPER)
    } else {
        TAU_UPPER
    })
}

/// Stationarity residual restricted to `[TAU_LOWER, upper]`: zero when a
/// coordinate sits on a bound and the gradient pushes it outwards.
fn projected_residual(
    j: usize,
    tau: &[f64],
    weights: &[f64],
    sc: &Scenario,
    classes: &DurationClassMap,
    upper: f64,
) -> Result<f64> {
    if upper <= TAU_LOWER {
        return Ok(0.0);
    }
    let r = stationarity_residual(j, tau, weights, sc, classes)?;
    let at_upper = tau[j] >= upper * (1.0 - 1e-9);
    Ok(if tau[j] <= TAU_LOWER && r < 0.0 || at_upper && r > 0.0 {
        0.0
    } else {
        r
    })
}

pub fn solve_allocation(criterion: Criterion, sc: &Scenario) -> Result<Allocation> {
    solve_allocation_with(criterion, sc, &AllocationOptions::default())
}

/// Allocation for `criterion`. The box is additionally capped per station
/// by [`reachable_tau`]: a station that rarely has a packet cannot reach an
/// arbitrary `tau` whatever its window, and stations held at that cap get
/// `W0 = 1`.
pub fn solve_allocation_with(
    criterion: Criterion,
    sc: &Scenario,
    opts: &AllocationOptions,
) -> Result<Allocation> {
    let weights = criterion.weights(sc)?;
    let classes = build_duration_classes(sc);
    let sol = solve_box(&weights, sc, &classes, opts, true)?;
    let tau = sol.tau;

    let slots = slot_breakdown(&tau, sc, &classes);
    let predicted = throughput(&slots, sc);
    for (st, s) in sc.stations.iter().zip(&predicted.per_station) {
        if *s > st.bit_rate {
            return Err(Error::Infeasible(format!(
                "station {} would get {s:.0} bit/s above its bit rate {:.0}",
                st.id, st.bit_rate
            )));
        }
    }
    let (state, _) = EquilibriumState::at_tau(tau.clone(), sc, &classes);
    let cw_min = (0..sc.len())
        .map(|s| {
            if sol.window_limited[s] {
                Ok(CW_RANGE.0 as u32)
            } else {
                invert_tau_to_cw(tau[s], s, &state, sc)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let utility = utility(&weights, &predicted.per_station);
    let jain = jain_index(&predicted.normalized)?;
    Ok(Allocation {
        criterion,
        weights,
        tau_star: tau,
        cw_min,
        window_limited: sol.window_limited,
        predicted,
        utility,
        jain,
        residual: sol.residual,
        sweeps: sol.sweeps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stationarity {
    pub tau: Vec<f64>,
    /// Largest projected residual at `tau`.
    pub residual: f64,
    pub sweeps: usize,
    /// Stations held at the largest `tau` their traffic allows.
    pub window_limited: Vec<bool>,
}

/// Solves the stationarity system on `[TAU_LOWER, TAU_UPPER]^N` by
/// Gauss-Seidel sweeps, each coordinate solved exactly (by bisection) with
/// the others held fixed. The reported residual is that of the weights
/// rescaled to a largest weight of 1.
pub fn solve_stationarity(
    weights: &[f64],
    sc: &Scenario,
    classes: &DurationClassMap,
    opts: &AllocationOptions,
) -> Result<Stationarity> {
    solve_box(weights, sc, classes, opts, false)
}

fn solve_box(
    weights: &[f64],
    sc: &Scenario,
    classes: &DurationClassMap,
    opts: &AllocationOptions,
    reach_limited: bool,
) -> Result<Stationarity> {
    if weights.len() != sc.len() {
        return Err(Error::Domain(format!(
            "{} weights for {} stations",
            weights.len(),
            sc.len()
        )));
    }
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::Infeasible("every weight is zero".into()));
    }
    // The optimum does not depend on the weights' scale, but the residual
    // does; solve with the largest weight at 1 so the tolerance means the same
    // thing for every scale.
    let top = weights.iter().cloned().fold(0.0, f64::max);
    let scaled: Vec<f64> = weights.iter().map(|w| w / top).collect();
    let weights = scaled.as_slice();
    let n = sc.len();
    let mut tau = vec![opts.initial_tau.clamp(TAU_LOWER, TAU_UPPER); n];
    let mut limited = vec![false; n];
    let mut best = f64::INFINITY;
    for sweep in 1..=opts.max_sweeps {
        for j in 0..n {
            let upper = upper_bound(j, &tau, sc, classes, reach_limited)?;
            if upper <= TAU_LOWER {
                tau[j] = upper;
                limited[j] = true;
                continue;
            }
            let mut probe = tau.clone();
            tau[j] = bisect_root(
                |x| {
                    probe[j] = x;
                    stationarity_residual(j, &probe, weights, sc, classes)
                },
                TAU_LOWER,
                upper,
            )?;
            limited[j] = reach_limited && upper < TAU_UPPER && tau[j] == upper;
        }
        let mut norm: f64 = 0.0;
        for j in 0..n {
            let upper = upper_bound(j, &tau, sc, classes, reach_limited)?;
            norm = norm.max(projected_residual(j, &tau, weights, sc, classes, upper)?.abs());
        }
        best = best.min(norm);
        if norm < opts.tolerance {
            return Ok(Stationarity {
                tau,
                residual: norm,
                sweeps: sweep,
                window_limited: limited,
            });
        }
    }
    Err(Error::AllocationNoConvergence {
        sweeps: opts.max_sweeps,
        residual: best,
    })
}

/// Minimum contention window of station `s` whose closed-form transmission
/// probability equals `target`, with queue and failure probabilities taken
/// from `state` (the equilibrium at the optimal `tau` vector).
pub fn invert_tau_to_cw(
    target: f64,
    s: usize,
    state: &EquilibriumState,
    sc: &Scenario,
) -> Result<u32> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Domain(format!("target tau {target} outside (0, 1)")));
    }
    let p = &sc.params;
    let q = state.q[s].clamp(0.0, 1.0);
    let p_eq = state.p_eq[s].min(1.0 - 1e-12);
    let f = |w0: f64| {
        closed_form_tau(
            q,
            p_eq,
            state.p_idle_others[s],
            w0,
            p.max_backoff_stage,
            p.retry_limit,
        )
    };
    let (mut lo, mut hi) = CW_RANGE;
    let tau_max = f(lo)?;
    let tau_min = f(hi)?;
    if !(target <= tau_max && target >= tau_min) {
        return Err(Error::UnreachableTau {
            target,
            min: tau_min,
            max: tau_max,
        });
    }
    // tau decreases with the window; bisect on a log scale.
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if f(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-12 {
            break;
        }
    }
    Ok(((lo * hi).sqrt().round() as u32).max(1))
}
