use crate::scenario::{
    collision_duration, error_duration, success_duration, DurationClassMap, Scenario,
};

/// Slot-outcome probabilities and expected slot-time components for a
/// vector of transmission probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotBreakdown {
    /// Probability that at least one station transmits.
    pub p_tr: f64,
    pub t_idle: f64,
    pub t_success: f64,
    pub t_error: f64,
    pub t_collision: f64,
    /// Expected slot duration, the sum of the four components above.
    pub t_av: f64,
    /// `P_C^(d)` per class position: collisions whose slowest frame belongs to class d.
    pub per_class_collision: Vec<f64>,
    /// Collisions among class-d stations only.
    pub per_class_internal: Vec<f64>,
    /// Collisions of class-d stations with faster classes.
    pub per_class_external: Vec<f64>,
    /// `T_C^(d)` per class position.
    pub per_class_duration: Vec<f64>,
    /// Probability that station s transmits alone.
    pub per_station_success: Vec<f64>,
    /// Probability that every station other than s is silent.
    pub p_idle_others: Vec<f64>,
}

impl SlotBreakdown {
    /// `(1 - P_TR) + sum P_s + sum P_C`, which is 1 for any valid input.
    pub fn total_probability(&self) -> f64 {
        (1.0 - self.p_tr)
            + self.per_station_success.iter().sum::<f64>()
            + self.per_class_collision.iter().sum::<f64>()
    }
}

/// `prod_{j != s} (1 - tau_j)` for every s, without dividing by `1 - tau_s`.
pub(crate) fn leave_one_out_silence(tau: &[f64]) -> Vec<f64> {
    let n = tau.len();
    let mut out = vec![1.0; n];
    let mut acc = 1.0;
    for s in 0..n {
        out[s] = acc;
        acc *= 1.0 - tau[s];
    }
    acc = 1.0;
    for s in (0..n).rev() {
        out[s] *= acc;
        acc *= 1.0 - tau[s];
    }
    out
}

pub fn slot_breakdown(tau: &[f64], sc: &Scenario, classes: &DurationClassMap) -> SlotBreakdown {
    debug_assert_eq!(tau.len(), sc.len());
    let p = &sc.params;
    let silent_all: f64 = tau.iter().map(|t| 1.0 - t).product();
    let p_tr = 1.0 - silent_all;
    let p_idle_others = leave_one_out_silence(tau);
    let per_station_success: Vec<f64> = tau
        .iter()
        .zip(&p_idle_others)
        .map(|(t, idle)| t * idle)
        .collect();

    let mut t_success = 0.0;
    let mut t_error = 0.0;
    for (s, st) in sc.stations.iter().enumerate() {
        let ps = per_station_success[s];
        t_success += ps * (1.0 - st.packet_error_rate) * success_duration(st, p);
        t_error += ps * st.packet_error_rate * error_duration(st, p);
    }

    // Silence probability of each class, then of all slower / faster classes.
    let nc = classes.class_count();
    let class_silent: Vec<f64> = classes
        .classes
        .iter()
        .map(|c| c.members.iter().map(|&i| 1.0 - tau[i]).product())
        .collect();
    let mut slower_silent = vec![1.0; nc];
    for d in 1..nc {
        slower_silent[d] = slower_silent[d - 1] * class_silent[d - 1];
    }
    let mut faster_silent = vec![1.0; nc];
    for d in (0..nc.saturating_sub(1)).rev() {
        faster_silent[d] = faster_silent[d + 1] * class_silent[d + 1];
    }

    let mut per_class_internal = Vec::with_capacity(nc);
    let mut per_class_external = Vec::with_capacity(nc);
    let mut per_class_duration = Vec::with_capacity(nc);
    for (d, class) in classes.classes.iter().enumerate() {
        let ptr_class = 1.0 - class_silent[d];
        let ptr_lower = 1.0 - slower_silent[d];
        let ptr_higher = 1.0 - faster_silent[d];
        let member_tau: Vec<f64> = class.members.iter().map(|&i| tau[i]).collect();
        let alone: f64 = member_tau
            .iter()
            .zip(leave_one_out_silence(&member_tau))
            .map(|(t, rest)| t * rest)
            .sum();
        per_class_internal.push((1.0 - ptr_higher) * (1.0 - ptr_lower) * (ptr_class - alone));
        per_class_external.push(ptr_class * ptr_higher * (1.0 - ptr_lower));
        per_class_duration.push(collision_duration(class.duration, p));
    }
    let per_class_collision: Vec<f64> = per_class_internal
        .iter()
        .zip(&per_class_external)
        .map(|(i, e)| i + e)
        .collect();
    let t_collision: f64 = per_class_collision
        .iter()
        .zip(&per_class_duration)
        .map(|(pc, tc)| pc * tc)
        .sum();

    let t_idle = silent_all * p.slot_time;
    SlotBreakdown {
        p_tr,
        t_idle,
        t_success,
        t_error,
        t_collision,
        t_av: t_idle + t_success + t_error + t_collision,
        per_class_collision,
        per_class_internal,
        per_class_external,
        per_class_duration,
        per_station_success,
        p_idle_others,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{build_duration_classes, PhyMacParams, StationProfile};

    fn pair(rate_a: f64, rate_b: f64) -> Scenario {
        Scenario::new(
            PhyMacParams::default(),
            vec![
                StationProfile::new(1, rate_a, 1.0, 1028),
                StationProfile::new(2, rate_b, 1.0, 1028),
            ],
        )
        .unwrap()
    }

    #[test]
    fn idle_network_slot_is_sigma() {
        let sc = pair(1e6, 11e6);
        let b = slot_breakdown(&[0.0, 0.0], &sc, &build_duration_classes(&sc));
        assert_eq!(b.p_tr, 0.0);
        assert!((b.t_av - 20e-6).abs() < 1e-15);
    }

    #[test]
    fn same_class_pair_enumeration() {
        let sc = pair(11e6, 11e6);
        let classes = build_duration_classes(&sc);
        let b = slot_breakdown(&[0.5, 0.5], &sc, &classes);
        assert!((b.per_class_collision[0] - 0.25).abs() < 1e-15);
        assert!((b.per_station_success[0] - 0.25).abs() < 1e-15);
        assert!((b.per_station_success[1] - 0.25).abs() < 1e-15);
        assert!((b.p_tr - 0.75).abs() < 1e-15);
    }

    #[test]
    fn mixed_class_collision_charged_to_slowest() {
        let sc = pair(1e6, 11e6);
        let classes = build_duration_classes(&sc);
        let b = slot_breakdown(&[0.5, 0.5], &sc, &classes);
        assert!((b.per_class_external[0] - 0.25).abs() < 1e-15);
        assert_eq!(b.per_class_internal[0], 0.0);
        assert_eq!(b.per_class_collision[1], 0.0);
    }

    #[test]
    fn leave_one_out_handles_certain_transmitters() {
        let v = leave_one_out_silence(&[1.0, 0.5, 0.25]);
        assert_eq!(v, vec![0.375, 0.0, 0.0]);
    }
}
