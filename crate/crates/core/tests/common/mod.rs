#![allow(dead_code)]

use dcf_core::scenario::{PhyMacParams, Scenario, StationProfile};

pub const PAYLOAD: u32 = 1028;

pub fn scenario(stations: &[(f64, f64)]) -> Scenario {
    let stations = stations
        .iter()
        .enumerate()
        .map(|(i, &(rate, lambda))| StationProfile::new(i as u32 + 1, rate, lambda, PAYLOAD))
        .collect();
    Scenario::new(PhyMacParams::default(), stations).unwrap()
}

/// Slow station sweeping `lambda1` against two fast stations at 100 and 500 pkt/s.
pub fn slow_vs_two(lambda1: f64) -> Scenario {
    scenario(&[(1e6, lambda1), (11e6, 100.0), (11e6, 500.0)])
}

/// One slow and two fast stations, the fast ones at 500 pkt/s.
pub fn mixed(slow_lambda: f64) -> Scenario {
    scenario(&[(1e6, slow_lambda), (11e6, 500.0), (11e6, 500.0)])
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
