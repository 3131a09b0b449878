//! Saturation service times and loaded/unloaded classification.
//!
//! A station is unloaded when its packet rate does not exceed its service
//! rate. The exact service rate is hard to obtain, so the saturation service
//! rate (service always starting from a post-backoff) is used as the bound.

use crate::equilibrium::{slot_breakdown, solve_equilibrium, Equilibrium};
use crate::error::{Error, Result};
use crate::scenario::{collision_duration, success_duration, Scenario};

/// Mean number of backoff slots drawn at stage `j`: `(2^min(j,m) W0 - 1) / 2`.
pub fn mean_backoff_window(j: u32, w0: f64, m: u32) -> f64 {
    (w0 * (1u64 << j.min(m)) as f64 - 1.0) / 2.0
}

/// Expected slot duration seen by station `t` while it counts down: the
/// network's expected slot with station `t` silent.
pub fn residual_slot_time(t: usize, eq: &Equilibrium, sc: &Scenario) -> f64 {
    let mut tau = eq.state.tau.clone();
    tau[t] = 0.0;
    slot_breakdown(&tau, sc, &eq.classes).t_av
}

/// Saturation service time of station `t`: average time from the start of
/// service to success or drop, over all retry outcomes.
pub fn saturation_service_time(t: usize, eq: &Equilibrium, sc: &Scenario) -> Result<f64> {
    let p = &sc.params;
    let st = &sc.stations[t];
    let p_eq = eq.state.p_eq[t];
    if !(p_eq < 1.0 - 1e-12) {
        return Err(Error::Domain(format!(
            "station {} fails every attempt (p_eq = {p_eq}); service time diverges",
            st.id
        )));
    }
    let r = p.retry_limit;
    let m = p.max_backoff_stage;
    let w0 = st.cw_min as f64;
    let t_bo = residual_slot_time(t, eq, sc);
    let t_c = collision_duration(eq.classes.classes[eq.classes.class_of(t)].duration, p);
    let t_s = success_duration(st, p);

    let mut numerator = 0.0;
    let mut normaliser = 0.0;
    let mut backoff_slots = 0.0;
    let mut weight = 1.0;
    for i in 0..=r {
        backoff_slots += mean_backoff_window(i, w0, m);
        numerator += weight * (i as f64 * t_c + backoff_slots * t_bo + t_s);
        normaliser += weight;
        weight *= p_eq;
    }
    // Drop after r + 1 failed attempts.
    numerator += weight * ((r + 1) as f64 * t_c + backoff_slots * t_bo);
    normaliser += weight;
    Ok(numerator / normaliser)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationLoad {
    pub service_time: f64,
    /// Saturation service rate, pkt/s.
    pub service_rate: f64,
    /// `lambda / service_rate`.
    pub utilization: f64,
    pub loaded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub per_station: Vec<StationLoad>,
    /// True when every station is loaded.
    pub network_loaded: bool,
}

pub fn load_report(eq: &Equilibrium, sc: &Scenario) -> Result<LoadReport> {
    let per_station = (0..sc.len())
        .map(|t| {
            let service_time = saturation_service_time(t, eq, sc)?;
            let service_rate = 1.0 / service_time;
            let utilization = sc.stations[t].packet_rate / service_rate;
            Ok(StationLoad {
                service_time,
                service_rate,
                utilization,
                loaded: utilization > 1.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let network_loaded = per_station.iter().all(|s| s.loaded);
    Ok(LoadReport {
        per_station,
        network_loaded,
    })
}

pub fn load_state(sc: &Scenario) -> Result<LoadReport> {
    let eq = solve_equilibrium(sc)?;
    load_report(&eq, sc)
}

/// Target accuracy of `lambda * T_serv` at the reported threshold.
pub const THRESHOLD_TOLERANCE: f64 = 1e-4;

/// Packet rate of station `t` at which `lambda_t * T_serv^(t) = 1`, found by
/// bisection over `range`, re-solving the full equilibrium at every probe.
pub fn load_threshold(t: usize, sc: &Scenario, range: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = range;
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
        return Err(Error::Domain(format!("invalid search range [{lo}, {hi}]")));
    }
    let ratio = |lambda: f64| -> Result<f64> {
        let probe = sc.with_packet_rate(t, lambda);
        let eq = solve_equilibrium(&probe)?;
        Ok(lambda * saturation_service_time(t, &eq, &probe)? - 1.0)
    };
    let f_lo = ratio(lo)?;
    let f_hi = ratio(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoCrossing { lo, hi });
    }
    let rising = f_hi > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = ratio(mid)?;
        if (f_mid > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
        if f_mid.abs() < THRESHOLD_TOLERANCE && hi - lo <= 1e-9 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
