//! Coupled per-station equilibrium of the multirate DCF model.
//!
//! Each station's transmission probability depends on its queue probability
//! and failure probability, which in turn depend on what every other station
//! does. [`solve_equilibrium`] iterates the coupling to a fixed point:
//!
//! 1. slot-outcome probabilities and expected slot time from `tau`,
//! 2. queue probabilities `q` from the expected slot mix,
//! 3. collision / failure probabilities from `tau`,
//! 4. new `tau` from the closed form, relaxed against the previous iterate.

mod chain;
mod slots;
mod tau;

pub use chain::{
    build_contention_chain, chain_oracle, chain_stationary, ChainIndex, ChainState, SparseChain,
    MAX_CHAIN_STATES,
};
pub use slots::{slot_breakdown, SlotBreakdown};
pub use tau::{closed_form_tau, Q_MAX, Q_MIN};

use crate::error::{Error, Result};
use crate::scenario::{
    build_duration_classes, error_duration, success_duration, DurationClassMap, Scenario,
};

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumState {
    pub tau: Vec<f64>,
    /// Probability of at least one arrival during a slot (unclamped).
    pub q: Vec<f64>,
    /// Failure probability per attempt: `1 - (1 - P_e)(1 - P_col)`.
    pub p_eq: Vec<f64>,
    /// `1 - prod_{j != s}(1 - tau_j)`.
    pub p_col: Vec<f64>,
    /// `prod_{j != s}(1 - tau_j)`.
    pub p_idle_others: Vec<f64>,
}

impl EquilibriumState {
    /// Consistent state for a given `tau` vector: `q` from the slot mix and
    /// failure probabilities from the other stations' `tau`.
    pub fn at_tau(
        tau: Vec<f64>,
        sc: &Scenario,
        classes: &DurationClassMap,
    ) -> (Self, SlotBreakdown) {
        let slots = slot_breakdown(&tau, sc, classes);
        let q = (0..sc.len())
            .map(|t| queue_nonempty_prob(t, &slots, sc))
            .collect();
        let p_idle_others = slots.p_idle_others.clone();
        let p_col: Vec<f64> = p_idle_others.iter().map(|i| 1.0 - i).collect();
        let p_eq = sc
            .stations
            .iter()
            .zip(&p_col)
            .map(|(st, pc)| 1.0 - (1.0 - st.packet_error_rate) * (1.0 - pc))
            .collect();
        (
            EquilibriumState {
                tau,
                q,
                p_eq,
                p_col,
                p_idle_others,
            },
            slots,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport {
    /// Per-station throughput, bit/s.
    pub per_station: Vec<f64>,
    pub aggregate: f64,
    /// Throughput divided by the station's bit rate.
    pub normalized: Vec<f64>,
}

/// Per-station throughput `P_s (1 - P_e) 8 PL / T_av`.
pub fn throughput(slots: &SlotBreakdown, sc: &Scenario) -> ThroughputReport {
    let per_station: Vec<f64> = sc
        .stations
        .iter()
        .zip(&slots.per_station_success)
        .map(|(st, ps)| ps * (1.0 - st.packet_error_rate) * st.payload_bits() / slots.t_av)
        .collect();
    let normalized = per_station
        .iter()
        .zip(&sc.stations)
        .map(|(s, st)| s / st.bit_rate)
        .collect();
    ThroughputReport {
        aggregate: per_station.iter().sum(),
        per_station,
        normalized,
    }
}

/// Probability that station `t` sees at least one Poisson arrival during a
/// slot, averaged over idle, success, error and collision slots.
pub fn queue_nonempty_prob(t: usize, slots: &SlotBreakdown, sc: &Scenario) -> f64 {
    let lambda = sc.stations[t].packet_rate;
    let arrival = |duration: f64| -(-lambda * duration).exp_m1();
    let p = &sc.params;
    let mut q = (1.0 - slots.p_tr) * arrival(p.slot_time);
    for (st, ps) in sc.stations.iter().zip(&slots.per_station_success) {
        let pe = st.packet_error_rate;
        q += ps * (1.0 - pe) * arrival(success_duration(st, p));
        q += ps * pe * arrival(error_duration(st, p));
    }
    for (pc, tc) in slots
        .per_class_collision
        .iter()
        .zip(&slots.per_class_duration)
    {
        q += pc * arrival(*tc);
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Weight of the new iterate in the relaxation step.
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial_tau: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            damping: 0.5,
            tolerance: 1e-9,
            max_iterations: 10_000,
            initial_tau: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub classes: DurationClassMap,
    pub state: EquilibriumState,
    pub slots: SlotBreakdown,
    pub throughput: ThroughputReport,
    pub iterations: usize,
}

pub fn solve_equilibrium(sc: &Scenario) -> Result<Equilibrium> {
    solve_equilibrium_with(sc, &SolverOptions::default())
}

pub fn solve_equilibrium_with(sc: &Scenario, opts: &SolverOptions) -> Result<Equilibrium> {
    let classes = build_duration_classes(sc);
    let p = &sc.params;
    let n = sc.len();
    let mut tau = vec![opts.initial_tau; n];
    let mut q = vec![0.0; n];
    let mut residual = f64::INFINITY;

    for iteration in 1..=opts.max_iterations {
        let (state, _) = EquilibriumState::at_tau(tau.clone(), sc, &classes);
        let mut next = Vec::with_capacity(n);
        for (s, st) in sc.stations.iter().enumerate() {
            next.push(closed_form_tau(
                state.q[s].clamp(0.0, 1.0),
                state.p_eq[s].min(1.0 - 1e-12),
                state.p_idle_others[s],
                st.cw_min as f64,
                p.max_backoff_stage,
                p.retry_limit,
            )?);
        }
        let d_tau = tau
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let d_q = q
            .iter()
            .zip(&state.q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        residual = d_tau.max(d_q);
        q = state.q;
        if residual < opts.tolerance {
            // The closed form evaluated at the current state is the fixed point.
            let (state, slots) = EquilibriumState::at_tau(next, sc, &classes);
            let throughput = throughput(&slots, sc);
            return Ok(Equilibrium {
                classes,
                state,
                slots,
                throughput,
                iterations: iteration,
            });
        }
        for (t, nx) in tau.iter_mut().zip(&next) {
            *t = (1.0 - opts.damping) * *t + opts.damping * nx;
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        residual,
    })
}
