//! Scenario configuration, frame airtimes and duration classes.
//!
//! All durations are kept in seconds internally. The JSON scenario format
//! stores durations in microseconds, bit rates in bit/s, packet rates in
//! pkt/s and sizes in bytes.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MICROSECOND: f64 = 1e-6;

/// Two airtimes closer than this belong to the same duration class.
pub const CLASS_TOLERANCE: f64 = 1.0 * MICROSECOND;

/// PHY and MAC constants shared by every station of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct PhyMacParams {
    pub slot_time: f64,
    pub sifs: f64,
    pub difs: f64,
    pub eifs: f64,
    pub ack_timeout: f64,
    pub prop_delay: f64,
    pub plcp_preamble_bits: u32,
    pub plcp_header_bits: u32,
    /// Rate of the PLCP preamble/header and of ACK frames, bit/s.
    pub plcp_rate: f64,
    pub mac_header_bytes: u32,
    pub ack_bytes: u32,
    pub cw_min_default: u32,
    /// Number of window doublings `m`.
    pub max_backoff_stage: u32,
    /// Last backoff stage `r`; a packet is dropped after `r + 1` failed attempts.
    pub retry_limit: u32,
    pub cw_max: u32,
}

impl Default for PhyMacParams {
    /// 802.11b basic-access constants.
    fn default() -> Self {
        PhyMacParams {
            slot_time: 20.0 * MICROSECOND,
            sifs: 10.0 * MICROSECOND,
            difs: 50.0 * MICROSECOND,
            eifs: 364.0 * MICROSECOND,
            ack_timeout: 364.0 * MICROSECOND,
            prop_delay: 1.0 * MICROSECOND,
            plcp_preamble_bits: 144,
            plcp_header_bits: 48,
            plcp_rate: 1e6,
            mac_header_bytes: 28,
            ack_bytes: 14,
            cw_min_default: 32,
            max_backoff_stage: 5,
            retry_limit: 6,
            cw_max: 1024,
        }
    }
}

impl PhyMacParams {
    pub fn validate(&self) -> Result<()> {
        let durations = [
            ("slot_time", self.slot_time),
            ("sifs", self.sifs),
            ("difs", self.difs),
            ("eifs", self.eifs),
            ("ack_timeout", self.ack_timeout),
            ("prop_delay", self.prop_delay),
            ("plcp_rate", self.plcp_rate),
        ];
        for (name, value) in durations {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(format!("params.{name}"), "must be > 0"));
            }
        }
        if self.cw_min_default < 1 {
            return Err(Error::invalid("params.cw_min_default", "must be >= 1"));
        }
        if self.max_backoff_stage > 20 {
            return Err(Error::invalid("params.max_backoff_stage", "must be <= 20"));
        }
        if self.retry_limit < self.max_backoff_stage {
            return Err(Error::invalid(
                "params.retry_limit",
                "must be >= max_backoff_stage",
            ));
        }
        let expected = (self.cw_min_default as u64) << self.max_backoff_stage;
        if self.cw_max as u64 != expected {
            return Err(Error::invalid(
                "params.cw_max",
                format!("must equal 2^max_backoff_stage * cw_min_default = {expected}"),
            ));
        }
        Ok(())
    }

    /// PLCP preamble plus header transmission time.
    pub fn plcp_time(&self) -> f64 {
        (self.plcp_preamble_bits + self.plcp_header_bits) as f64 / self.plcp_rate
    }

    /// ACK frames are sent at the PLCP (basic) rate.
    pub fn ack_airtime(&self) -> f64 {
        self.plcp_time() + 8.0 * self.ack_bytes as f64 / self.plcp_rate
    }

    /// Contention window at backoff `stage`: `min(2^stage, 2^m) * w0`.
    pub fn window(&self, w0: f64, stage: u32) -> f64 {
        w0 * (1u64 << stage.min(self.max_backoff_stage)) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationProfile {
    pub id: u32,
    /// Data bit rate, bit/s.
    pub bit_rate: f64,
    /// Poisson packet arrival rate, pkt/s.
    pub packet_rate: f64,
    pub payload_bytes: u32,
    /// Minimum contention window in slots.
    pub cw_min: u32,
    pub packet_error_rate: f64,
}

impl StationProfile {
    /// Profile with the default minimum window (32 slots) and an error-free channel.
    pub fn new(id: u32, bit_rate: f64, packet_rate: f64, payload_bytes: u32) -> Self {
        StationProfile {
            id,
            bit_rate,
            packet_rate,
            payload_bytes,
            cw_min: PhyMacParams::default().cw_min_default,
            packet_error_rate: 0.0,
        }
    }

    pub fn with_cw_min(mut self, cw_min: u32) -> Self {
        self.cw_min = cw_min;
        self
    }

    pub fn with_packet_error_rate(mut self, per: f64) -> Self {
        self.packet_error_rate = per;
        self
    }

    /// Offered load in bit/s.
    pub fn offered_load(&self) -> f64 {
        self.packet_rate * self.payload_bits()
    }

    pub fn payload_bits(&self) -> f64 {
        8.0 * self.payload_bytes as f64
    }

    /// Airtime of the payload alone (no PLCP or MAC header).
    pub fn payload_airtime(&self) -> f64 {
        self.payload_bits() / self.bit_rate
    }

    fn validate(&self, index: usize) -> Result<()> {
        let at = |field: &str| format!("stations[{index}].{field}");
        if !(self.bit_rate.is_finite() && self.bit_rate > 0.0) {
            return Err(Error::invalid(at("bit_rate"), "must be > 0"));
        }
        if !(self.packet_rate.is_finite() && self.packet_rate >= 0.0) {
            return Err(Error::invalid(at("lambda"), "must be >= 0"));
        }
        if self.payload_bytes == 0 {
            return Err(Error::invalid(at("payload"), "must be > 0"));
        }
        if self.cw_min < 1 {
            return Err(Error::invalid(at("cw_min"), "must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.packet_error_rate) {
            return Err(Error::invalid(at("packet_error_rate"), "must be in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: PhyMacParams,
    pub stations: Vec<StationProfile>,
}

impl Scenario {
    pub fn new(params: PhyMacParams, stations: Vec<StationProfile>) -> Result<Self> {
        let sc = Scenario { params, stations };
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.stations.is_empty() {
            return Err(Error::invalid(
                "stations",
                "at least one station is required",
            ));
        }
        let mut seen = HashSet::new();
        for (i, st) in self.stations.iter().enumerate() {
            st.validate(i)?;
            if !seen.insert(st.id) {
                return Err(Error::invalid(
                    format!("stations[{i}].id"),
                    format!("duplicate station id {}", st.id),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    /// Position of the station with the given id.
    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.stations.iter().position(|s| s.id == id)
    }

    /// Copy of the scenario with one station's packet rate replaced.
    pub fn with_packet_rate(&self, index: usize, packet_rate: f64) -> Scenario {
        let mut sc = self.clone();
        sc.stations[index].packet_rate = packet_rate;
        sc
    }

    /// Copy of the scenario with every station's minimum window replaced.
    pub fn with_cw_min(&self, cw_min: &[u32]) -> Result<Scenario> {
        if cw_min.len() != self.len() {
            return Err(Error::invalid(
                "cw_min_override",
                format!("expected {} entries, got {}", self.len(), cw_min.len()),
            ));
        }
        let mut sc = self.clone();
        for (st, &w) in sc.stations.iter_mut().zip(cw_min) {
            st.cw_min = w;
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_json_str(text: &str) -> Result<Scenario> {
        ScenarioFile::from_json_str(text)?.into_scenario()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario> {
        ScenarioFile::load(path)?.into_scenario()
    }

    pub fn to_json_string(&self) -> String {
        ScenarioFile::from_scenario(self).to_json_string()
    }
}

/// Airtime of a data frame: PLCP preamble and header at the PLCP rate, MAC
/// header and payload at the station's data rate.
pub fn data_airtime(st: &StationProfile, p: &PhyMacParams) -> f64 {
    p.plcp_time() + 8.0 * (p.mac_header_bytes + st.payload_bytes) as f64 / st.bit_rate
}

/// Duration `T_S` of a successful exchange: DATA, SIFS, ACK, DIFS and two propagation delays.
pub fn success_duration(st: &StationProfile, p: &PhyMacParams) -> f64 {
    data_airtime(st, p) + p.sifs + p.prop_delay + p.ack_airtime() + p.difs + p.prop_delay
}

/// Duration `T_E` of a collision-free frame lost to a channel error.
pub fn error_duration(st: &StationProfile, p: &PhyMacParams) -> f64 {
    data_airtime(st, p) + p.ack_timeout
}

/// Duration `T_C` of a collision whose longest frame lasts `class_duration`.
pub fn collision_duration(class_duration: f64, p: &PhyMacParams) -> f64 {
    class_duration + p.ack_timeout
}

#[derive(Debug, Clone, PartialEq)]
pub struct DurationClass {
    /// 1-based class index; 1 is the slowest class.
    pub index: usize,
    /// Station positions (into `Scenario::stations`) in this class, ascending.
    pub members: Vec<usize>,
    /// Channel occupancy of the class: the longest data-frame airtime among its members.
    pub duration: f64,
}

/// Partition of the stations into occupancy classes, slowest first.
#[derive(Debug, Clone, PartialEq)]
pub struct DurationClassMap {
    pub classes: Vec<DurationClass>,
    class_of: Vec<usize>,
}

impl DurationClassMap {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Zero-based position in `classes` of the class holding station `index`.
    pub fn class_of(&self, index: usize) -> usize {
        self.class_of[index]
    }

    pub fn station_count(&self) -> usize {
        self.class_of.len()
    }

    /// Station ids of class position `d`, in scenario order.
    pub fn member_ids(&self, sc: &Scenario, d: usize) -> Vec<u32> {
        self.classes[d]
            .members
            .iter()
            .map(|&i| sc.stations[i].id)
            .collect()
    }
}

/// Groups stations whose payload airtimes agree within [`CLASS_TOLERANCE`]
/// (PLCP overhead is common to every frame), then orders the classes by
/// decreasing channel occupancy.
pub fn build_duration_classes(sc: &Scenario) -> DurationClassMap {
    let mut order: Vec<usize> = (0..sc.len()).collect();
    order.sort_by(|&a, &b| {
        sc.stations[b]
            .payload_airtime()
            .total_cmp(&sc.stations[a].payload_airtime())
            .then(a.cmp(&b))
    });

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut anchor = f64::NAN;
    for i in order {
        let airtime = sc.stations[i].payload_airtime();
        match groups.last_mut() {
            Some(g) if (anchor - airtime).abs() <= CLASS_TOLERANCE => g.push(i),
            _ => {
                groups.push(vec![i]);
                anchor = airtime;
            }
        }
    }

    let mut classes: Vec<(f64, Vec<usize>)> = groups
        .into_iter()
        .map(|g| {
            let duration = g
                .iter()
                .map(|&i| data_airtime(&sc.stations[i], &sc.params))
                .fold(f64::MIN, f64::max);
            (duration, g)
        })
        .collect();
    classes.sort_by(|a, b| b.0.total_cmp(&a.0));

    // Keep durations strictly decreasing.
    let mut merged: Vec<(f64, Vec<usize>)> = Vec::with_capacity(classes.len());
    for (duration, members) in classes {
        match merged.last_mut() {
            Some((d, m)) if (*d - duration).abs() <= CLASS_TOLERANCE => m.extend(members),
            _ => merged.push((duration, members)),
        }
    }

    let mut class_of = vec![0; sc.len()];
    let classes = merged
        .into_iter()
        .enumerate()
        .map(|(pos, (duration, mut members))| {
            members.sort_unstable();
            for &m in &members {
                class_of[m] = pos;
            }
            DurationClass {
                index: pos + 1,
                members,
                duration,
            }
        })
        .collect();
    DurationClassMap { classes, class_of }
}

// ---------------------------------------------------------------------------
// JSON file format

/// `params` object of a scenario file. Durations are in microseconds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsFile {
    pub slot_time: f64,
    pub sifs: f64,
    pub difs: f64,
    pub eifs: f64,
    pub ack_timeout: f64,
    pub prop_delay: f64,
    pub plcp_preamble_bits: u32,
    pub plcp_header_bits: u32,
    pub plcp_rate: f64,
    pub mac_header_bytes: u32,
    pub ack_bytes: u32,
    pub cw_min_default: u32,
    pub max_backoff_stage: u32,
    pub retry_limit: u32,
    /// Derived from `cw_min_default` and `max_backoff_stage` when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cw_max: Option<u32>,
}

impl Default for ParamsFile {
    fn default() -> Self {
        ParamsFile::from(&PhyMacParams::default())
    }
}

impl From<&PhyMacParams> for ParamsFile {
    fn from(p: &PhyMacParams) -> Self {
        ParamsFile {
            slot_time: p.slot_time / MICROSECOND,
            sifs: p.sifs / MICROSECOND,
            difs: p.difs / MICROSECOND,
            eifs: p.eifs / MICROSECOND,
            ack_timeout: p.ack_timeout / MICROSECOND,
            prop_delay: p.prop_delay / MICROSECOND,
            plcp_preamble_bits: p.plcp_preamble_bits,
            plcp_header_bits: p.plcp_header_bits,
            plcp_rate: p.plcp_rate,
            mac_header_bytes: p.mac_header_bytes,
            ack_bytes: p.ack_bytes,
            cw_min_default: p.cw_min_default,
            max_backoff_stage: p.max_backoff_stage,
            retry_limit: p.retry_limit,
            cw_max: Some(p.cw_max),
        }
    }
}

impl ParamsFile {
    fn to_params(&self) -> PhyMacParams {
        let cw_max = self.cw_max.unwrap_or_else(|| {
            self.cw_min_default
                .saturating_mul(1 << self.max_backoff_stage.min(20))
        });
        PhyMacParams {
            slot_time: self.slot_time * MICROSECOND,
            sifs: self.sifs * MICROSECOND,
            difs: self.difs * MICROSECOND,
            eifs: self.eifs * MICROSECOND,
            ack_timeout: self.ack_timeout * MICROSECOND,
            prop_delay: self.prop_delay * MICROSECOND,
            plcp_preamble_bits: self.plcp_preamble_bits,
            plcp_header_bits: self.plcp_header_bits,
            plcp_rate: self.plcp_rate,
            mac_header_bytes: self.mac_header_bytes,
            ack_bytes: self.ack_bytes,
            cw_min_default: self.cw_min_default,
            max_backoff_stage: self.max_backoff_stage,
            retry_limit: self.retry_limit,
            cw_max,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationFile {
    pub id: u32,
    pub bit_rate: f64,
    pub lambda: f64,
    pub payload: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cw_min: Option<u32>,
    #[serde(default)]
    pub packet_error_rate: f64,
}

/// On-disk scenario. Allocation files reuse this layout with an added
/// `cw_min_override` array and an informational `allocation` object.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub params: ParamsFile,
    pub stations: Vec<StationFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cw_min_override: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation: Option<serde_json::Value>,
}

impl ScenarioFile {
    pub fn from_json_str(text: &str) -> Result<ScenarioFile> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path.is_empty() || path == "." {
                "<root>".to_string()
            } else {
                path
            };
            Error::invalid(path, e.into_inner().to_string())
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ScenarioFile> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        ScenarioFile::from_json_str(&text)
    }

    pub fn from_scenario(sc: &Scenario) -> ScenarioFile {
        ScenarioFile {
            name: None,
            params: ParamsFile::from(&sc.params),
            stations: sc
                .stations
                .iter()
                .map(|s| StationFile {
                    id: s.id,
                    bit_rate: s.bit_rate,
                    lambda: s.packet_rate,
                    payload: s.payload_bytes,
                    cw_min: Some(s.cw_min),
                    packet_error_rate: s.packet_error_rate,
                })
                .collect(),
            cw_min_override: None,
            allocation: None,
        }
    }

    /// Validated scenario; `cw_min_override`, when present, replaces every station's window.
    pub fn into_scenario(&self) -> Result<Scenario> {
        let params = self.params.to_params();
        let stations = self
            .stations
            .iter()
            .map(|s| StationProfile {
                id: s.id,
                bit_rate: s.bit_rate,
                packet_rate: s.lambda,
                payload_bytes: s.payload,
                cw_min: s.cw_min.unwrap_or(params.cw_min_default),
                packet_error_rate: s.packet_error_rate,
            })
            .collect();
        let sc = Scenario::new(params, stations)?;
        match &self.cw_min_override {
            Some(w) => sc.with_cw_min(w),
            None => Ok(sc),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn us(x: f64) -> f64 {
        x / MICROSECOND
    }

    #[test]
    fn airtimes_match_hand_arithmetic() {
        let p = PhyMacParams::default();
        let slow = StationProfile::new(1, 1e6, 0.0, 1028);
        let fast = StationProfile::new(2, 11e6, 0.0, 1028);
        assert!((us(data_airtime(&slow, &p)) - 8640.0).abs() < 1e-9);
        assert!((us(data_airtime(&fast, &p)) - (192.0 + 8448.0 / 11.0)).abs() < 1e-9);
        assert!((us(p.ack_airtime()) - 304.0).abs() < 1e-9);
        // 960 + 10 + 1 + 304 + 50 + 1
        assert!((us(success_duration(&fast, &p)) - (192.0 + 8448.0 / 11.0 + 366.0)).abs() < 1e-9);
        assert!((us(error_duration(&slow, &p)) - 9004.0).abs() < 1e-9);
        assert!((us(collision_duration(data_airtime(&slow, &p), &p)) - 9004.0).abs() < 1e-9);
        assert_eq!(data_airtime(&slow, &p), data_airtime(&slow, &p));
    }

    #[test]
    fn footnote_pair_shares_a_class() {
        let sc = Scenario::new(
            PhyMacParams::default(),
            vec![
                StationProfile::new(1, 1e6, 1.0, 128),
                StationProfile::new(2, 2e6, 1.0, 256),
            ],
        )
        .unwrap();
        let classes = build_duration_classes(&sc);
        assert_eq!(classes.class_count(), 1);
        assert_eq!(classes.classes[0].members, vec![0, 1]);
    }

    #[test]
    fn classes_are_ordered_slowest_first() {
        let sc = Scenario::new(
            PhyMacParams::default(),
            vec![
                StationProfile::new(7, 11e6, 1.0, 1028),
                StationProfile::new(8, 1e6, 1.0, 1028),
                StationProfile::new(9, 5.5e6, 1.0, 1028),
            ],
        )
        .unwrap();
        let classes = build_duration_classes(&sc);
        assert_eq!(classes.class_count(), 3);
        assert_eq!(classes.member_ids(&sc, 0), vec![8]);
        assert_eq!(classes.member_ids(&sc, 1), vec![9]);
        assert_eq!(classes.member_ids(&sc, 2), vec![7]);
        assert_eq!(classes.classes[2].index, 3);
    }

    #[test]
    fn third_class_membership() {
        // Stations 1, 5 and 8 share the third-slowest occupancy.
        let rate = |id: u32| match id {
            1 | 5 | 8 => 11e6,
            2 | 3 => 1e6,
            _ => 2e6,
        };
        let stations = (1..=8)
            .map(|id| StationProfile::new(id, rate(id), 1.0, 1028))
            .collect();
        let sc = Scenario::new(PhyMacParams::default(), stations).unwrap();
        let classes = build_duration_classes(&sc);
        assert_eq!(classes.class_count(), 3);
        assert_eq!(classes.member_ids(&sc, 2), vec![1, 5, 8]);
        assert_eq!(classes.classes[2].members.len(), 3);
    }

    #[test]
    fn rejects_duplicate_ids_and_empty() {
        let p = PhyMacParams::default();
        assert!(Scenario::new(p.clone(), vec![]).is_err());
        let err = Scenario::new(
            p,
            vec![
                StationProfile::new(1, 1e6, 1.0, 100),
                StationProfile::new(1, 2e6, 1.0, 100),
            ],
        )
        .unwrap_err();
        assert!(err.to_string().contains("stations[1].id"), "{err}");
    }

    #[test]
    fn params_invariants() {
        let mut p = PhyMacParams::default();
        assert!(p.validate().is_ok());
        p.cw_max = 512;
        assert!(p.validate().is_err());
        let p = PhyMacParams {
            retry_limit: 4,
            ..PhyMacParams::default()
        };
        assert!(p.validate().is_err());
        let p = PhyMacParams {
            sifs: 0.0,
            ..PhyMacParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn json_defaults_are_table_values() {
        let sc = Scenario::from_json_str(
            r#"{"stations":[{"id":1,"bit_rate":1e6,"lambda":10,"payload":1028}]}"#,
        )
        .unwrap();
        assert_eq!(sc.params, PhyMacParams::default());
        assert_eq!(sc.stations[0].cw_min, 32);
        let back = Scenario::from_json_str(&sc.to_json_string()).unwrap();
        assert_eq!(back, sc);
    }

    #[test]
    fn json_errors_name_the_field() {
        let err = Scenario::from_json_str(
            r#"{"stations":[{"id":1,"bit_rate":"fast","lambda":10,"payload":1028}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("stations[0].bit_rate"), "{err}");

        let err = Scenario::from_json_str(r#"{"stations":[]}"#).unwrap_err();
        assert!(err.to_string().contains("stations"), "{err}");

        let err = Scenario::from_json_str(
            r#"{"params":{"slot_time":-1},"stations":[{"id":1,"bit_rate":1e6,"lambda":10,"payload":1028}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("params.slot_time"), "{err}");
    }

    #[test]
    fn override_replaces_windows() {
        let text = r#"{"stations":[{"id":1,"bit_rate":1e6,"lambda":10,"payload":1028},
                                   {"id":2,"bit_rate":11e6,"lambda":10,"payload":1028}],
                       "cw_min_override":[400, 9]}"#;
        let sc = Scenario::from_json_str(text).unwrap();
        assert_eq!(sc.stations[0].cw_min, 400);
        assert_eq!(sc.stations[1].cw_min, 9);
        let bad = text.replace("[400, 9]", "[400]");
        assert!(Scenario::from_json_str(&bad).is_err());
    }
}
