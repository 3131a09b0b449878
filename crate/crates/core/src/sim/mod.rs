//! Discrete-event simulator of the DCF MAC in basic access mode.
//!
//! Time advances in virtual slots: an idle slot lasts `sigma`, a busy slot
//! lasts as long as the success, corrupted frame or collision it carries
//! (including the SIFS/ACK/DIFS or ACK-timeout that follows). Backoff and
//! post-backoff counters move by one at every slot boundary. Arrivals are
//! Poisson with continuous timestamps.
//!
//! Each station serves one head-of-line packet and has a one-packet buffer
//! behind it; arrivals that find the buffer full are lost. A packet that is
//! delivered or dropped at the end of a slot releases its place for that
//! whole slot, so arrivals during its last transmission count towards the
//! next service, as the model's per-slot arrival probability assumes. After
//! a departure the next packet (if any) starts a stage-0 backoff, otherwise
//! post-backoff starts.
//!
//! A packet that reaches a station sitting idle after its post-backoff is
//! sent in the next slot if the medium was idle when it arrived, and
//! otherwise draws a stage-0 backoff.

mod stats;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fairness::{jain_index, Allocation};
use crate::scenario::{data_airtime, error_duration, success_duration, Scenario};

pub use stats::{batch_statistics, BatchStatistics};

/// Default simulated time per run, seconds.
pub const DEFAULT_DURATION: f64 = 60.0;
pub const DEFAULT_WARMUP: f64 = 2.0;
pub const DEFAULT_BATCHES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: Scenario,
    /// Total simulated time including warmup, seconds.
    pub duration: f64,
    pub seed: u64,
    pub warmup: f64,
    pub batches: usize,
}

impl SimConfig {
    pub fn new(scenario: Scenario, duration: f64, seed: u64) -> Result<Self> {
        let warmup = DEFAULT_WARMUP.min(0.1 * duration);
        Self::with_warmup(scenario, duration, seed, warmup)
    }

    pub fn with_warmup(scenario: Scenario, duration: f64, seed: u64, warmup: f64) -> Result<Self> {
        let cfg = SimConfig {
            scenario,
            duration,
            seed,
            warmup,
            batches: DEFAULT_BATCHES,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.warmup >= 0.0 && self.duration.is_finite() && self.duration > self.warmup) {
            return Err(Error::Domain(format!(
                "simulation needs duration > warmup >= 0 (got {} and {})",
                self.duration, self.warmup
            )));
        }
        if self.batches < 2 {
            return Err(Error::Domain("at least two batches are needed".into()));
        }
        self.scenario.validate()
    }
}

/// Per-station counters over the measurement window (after warmup).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StationStats {
    pub id: u32,
    pub delivered_packets: u64,
    pub delivered_bits: f64,
    pub attempts: u64,
    pub collisions: u64,
    /// Collision-free attempts corrupted by the channel.
    pub channel_errors: u64,
    /// Packets dropped after `r + 1` failures, the last one a channel error.
    pub channel_error_losses: u64,
    /// Packets dropped after `r + 1` failures, the last one a collision.
    pub drops_at_retry_limit: u64,
    /// Mean time from the start of service (packet at the head of the line)
    /// to delivery or drop, seconds.
    pub mean_service_time: f64,
    /// Mean of the batch throughputs, bit/s.
    pub throughput: f64,
    pub normalized: f64,
    /// Standard error of the batch-mean throughput, bit/s.
    pub std_error: f64,
    /// Half-width of the 95% confidence interval, bit/s.
    pub ci_half_width: f64,
}

/// Packet bookkeeping over the whole run, warmup included.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Conservation {
    pub arrivals: u64,
    pub accepted: u64,
    /// Arrivals discarded because the buffer was full.
    pub blocked: u64,
    pub delivered: u64,
    pub channel_error_losses: u64,
    pub drops_at_retry_limit: u64,
    /// Packets still held (in service or buffered) at the end of the run.
    pub in_flight: u64,
}

impl Conservation {
    pub fn balanced(&self) -> bool {
        self.arrivals == self.accepted + self.blocked
            && self.accepted
                == self.delivered
                    + self.channel_error_losses
                    + self.drops_at_retry_limit
                    + self.in_flight
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub seed: u64,
    /// Length of the measurement window, seconds.
    pub measured_time: f64,
    pub per_station: Vec<StationStats>,
    pub conservation: Vec<Conservation>,
    pub aggregate_throughput: f64,
    pub normalized: Vec<f64>,
    /// Jain index of the normalised throughputs; `None` when nothing was delivered.
    pub jain: Option<f64>,
    pub slots: u64,
}

impl SimResult {
    pub fn throughputs(&self) -> Vec<f64> {
        self.per_station.iter().map(|s| s.throughput).collect()
    }

    /// One row per station, in a fixed column layout.
    pub fn rows(&self, scenario: &str) -> Vec<SimRow> {
        self.per_station
            .iter()
            .map(|s| SimRow {
                scenario: scenario.to_string(),
                seed: self.seed,
                station: s.id,
                throughput: s.throughput,
                normalized: s.normalized,
                ci_half_width: s.ci_half_width,
                aggregate: self.aggregate_throughput,
                jain: self.jain,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRow {
    pub scenario: String,
    pub seed: u64,
    pub station: u32,
    pub throughput: f64,
    pub normalized: f64,
    pub ci_half_width: f64,
    pub aggregate: f64,
    pub jain: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum MacState {
    /// Holding a packet at backoff stage `stage` with `counter` slots left.
    Backoff { stage: u32, counter: u32 },
    /// Holding a packet that arrived during an idle slot; sent in the next slot.
    Immediate,
    /// No packet; post-backoff with `counter` slots left (0 = idle).
    Post { counter: u32 },
}

struct Station {
    state: MacState,
    next_arrival: f64,
    service_start: f64,
    arrivals: Exp<f64>,
    /// Arrival times.
    traffic_rng: ChaCha8Rng,
    /// Backoff draws and channel errors.
    mac_rng: ChaCha8Rng,
    windows: Vec<u32>,
    /// A second packet waits behind the head-of-line one.
    buffered: bool,
}

impl Station {
    fn draw_backoff(&mut self, stage: u32) -> u32 {
        self.mac_rng.random_range(0..self.windows[stage as usize])
    }

    fn advance_arrival(&mut self) {
        self.next_arrival += self.arrivals.sample(&mut self.traffic_rng);
    }

    fn has_packet(&self) -> bool {
        !matches!(self.state, MacState::Post { .. })
    }
}

fn stream_rng(seed: u64, id: u32, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((id as u64) << 1) | purpose);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    Idle,
    Success,
    Corrupted,
    Collision,
}

#[derive(Default, Clone)]
struct Window {
    stats: StationStats,
    service_sum: f64,
    service_count: u64,
}

/// Runs one simulation. The configuration must satisfy [`SimConfig::validate`].
pub fn run_simulation(cfg: &SimConfig) -> SimResult {
    debug_assert!(cfg.validate().is_ok());
    let sc = &cfg.scenario;
    let p = &sc.params;
    let n = sc.len();

    let mut stations: Vec<Station> = sc
        .stations
        .iter()
        .map(|st| {
            let windows = (0..=p.retry_limit)
                .map(|i| st.cw_min << i.min(p.max_backoff_stage))
                .collect();
            let mut s = Station {
                state: MacState::Post { counter: 0 },
                next_arrival: 0.0,
                service_start: 0.0,
                // A zero rate never fires: keep the rate positive and start at infinity.
                arrivals: Exp::new(st.packet_rate.max(f64::MIN_POSITIVE)).expect("positive rate"),
                traffic_rng: stream_rng(cfg.seed, st.id, 0),
                mac_rng: stream_rng(cfg.seed, st.id, 1),
                windows,
                buffered: false,
            };
            if st.packet_rate > 0.0 {
                s.advance_arrival();
            } else {
                s.next_arrival = f64::INFINITY;
            }
            s
        })
        .collect();

    let success_time: Vec<f64> = sc
        .stations
        .iter()
        .map(|st| success_duration(st, p))
        .collect();
    let error_time: Vec<f64> = sc.stations.iter().map(|st| error_duration(st, p)).collect();
    let frame_time: Vec<f64> = sc.stations.iter().map(|st| data_airtime(st, p)).collect();

    let batches = cfg.batches;
    let batch_len = (cfg.duration - cfg.warmup) / batches as f64;
    let mut batch_bits = vec![vec![0.0; batches]; n];
    let mut window: Vec<Window> = sc
        .stations
        .iter()
        .map(|st| Window {
            stats: StationStats {
                id: st.id,
                ..Default::default()
            },
            ..Default::default()
        })
        .collect();
    let mut books = vec![Conservation::default(); n];

    let mut transmitters: Vec<usize> = Vec::with_capacity(n);
    let mut t = 0.0;
    let mut slot_count = 0u64;
    while t < cfg.duration {
        transmitters.clear();
        transmitters.extend((0..n).filter(|&s| {
            matches!(
                stations[s].state,
                MacState::Immediate | MacState::Backoff { counter: 0, .. }
            )
        }));
        let (outcome, len) = match transmitters.as_slice() {
            [] => (Outcome::Idle, p.slot_time),
            &[s] => {
                let pe = sc.stations[s].packet_error_rate;
                if pe > 0.0 && stations[s].mac_rng.random::<f64>() < pe {
                    (Outcome::Corrupted, error_time[s])
                } else {
                    (Outcome::Success, success_time[s])
                }
            }
            many => {
                let longest = many.iter().map(|&s| frame_time[s]).fold(0.0, f64::max);
                (Outcome::Collision, longest + p.ack_timeout)
            }
        };
        let t_end = t + len;
        slot_count += 1;
        let measured = t_end > cfg.warmup && t_end <= cfg.duration;

        for s in 0..n {
            let transmitted = transmitters.contains(&s);
            // Resolve the packet on the air first: it decides whether the
            // buffer frees up for arrivals during this slot.
            let mut leaves = false;
            if transmitted {
                let stage = match stations[s].state {
                    MacState::Backoff { stage, .. } => stage,
                    _ => 0,
                };
                let w = &mut window[s].stats;
                if measured {
                    w.attempts += 1;
                }
                match outcome {
                    Outcome::Success => {
                        leaves = true;
                        books[s].delivered += 1;
                        if measured {
                            let bits = sc.stations[s].payload_bits();
                            w.delivered_packets += 1;
                            w.delivered_bits += bits;
                            let b = (((t_end - cfg.warmup) / batch_len) as usize).min(batches - 1);
                            batch_bits[s][b] += bits;
                        }
                    }
                    Outcome::Corrupted | Outcome::Collision => {
                        let corrupted = outcome == Outcome::Corrupted;
                        if measured {
                            if corrupted {
                                w.channel_errors += 1;
                            } else {
                                w.collisions += 1;
                            }
                        }
                        if stage < p.retry_limit {
                            let counter = stations[s].draw_backoff(stage + 1);
                            stations[s].state = MacState::Backoff {
                                stage: stage + 1,
                                counter,
                            };
                        } else {
                            leaves = true;
                            if corrupted {
                                books[s].channel_error_losses += 1;
                                if measured {
                                    w.channel_error_losses += 1;
                                }
                            } else {
                                books[s].drops_at_retry_limit += 1;
                                if measured {
                                    w.drops_at_retry_limit += 1;
                                }
                            }
                        }
                    }
                    Outcome::Idle => unreachable!("a transmitter makes the slot busy"),
                }
                if leaves && measured {
                    window[s].service_sum += t_end - stations[s].service_start;
                    window[s].service_count += 1;
                }
            }

            let station = &mut stations[s];
            // A packet that completes in this slot gives up its place for the
            // whole slot: the buffered packet moves up and arrivals during the
            // slot may take both places.
            let mut arrived = false;
            if leaves {
                arrived = std::mem::take(&mut station.buffered);
                station.service_start = t_end;
            }
            let mut serving = if leaves {
                arrived
            } else {
                station.has_packet()
            };
            while station.next_arrival < t_end {
                books[s].arrivals += 1;
                if !serving {
                    serving = true;
                    arrived = true;
                    books[s].accepted += 1;
                    station.service_start = station.next_arrival;
                } else if !station.buffered {
                    station.buffered = true;
                    books[s].accepted += 1;
                } else {
                    books[s].blocked += 1;
                }
                station.advance_arrival();
            }

            station.state = match station.state {
                _ if leaves => {
                    let counter = station.draw_backoff(0);
                    if arrived {
                        MacState::Backoff { stage: 0, counter }
                    } else {
                        MacState::Post { counter }
                    }
                }
                MacState::Backoff { stage, counter } if !transmitted => MacState::Backoff {
                    stage,
                    counter: counter - 1,
                },
                MacState::Post { counter } if counter > 0 => {
                    if arrived {
                        MacState::Backoff {
                            stage: 0,
                            counter: counter - 1,
                        }
                    } else {
                        MacState::Post {
                            counter: counter - 1,
                        }
                    }
                }
                MacState::Post { .. } if arrived => {
                    if outcome == Outcome::Idle {
                        MacState::Immediate
                    } else {
                        MacState::Backoff {
                            stage: 0,
                            counter: station.draw_backoff(0),
                        }
                    }
                }
                other => other,
            };
        }
        t = t_end;
    }

    for (b, st) in books.iter_mut().zip(&stations) {
        b.in_flight = st.has_packet() as u64 + st.buffered as u64;
    }

    let per_station: Vec<StationStats> = window
        .into_iter()
        .zip(&batch_bits)
        .zip(&sc.stations)
        .map(|((w, bits), st)| {
            let rates: Vec<f64> = bits.iter().map(|b| b / batch_len).collect();
            let bs = batch_statistics(&rates);
            StationStats {
                mean_service_time: if w.service_count > 0 {
                    w.service_sum / w.service_count as f64
                } else {
                    0.0
                },
                throughput: bs.mean,
                normalized: bs.mean / st.bit_rate,
                std_error: bs.std_error,
                ci_half_width: bs.ci_half_width,
                ..w.stats
            }
        })
        .collect();
    let normalized: Vec<f64> = per_station.iter().map(|s| s.normalized).collect();
    SimResult {
        seed: cfg.seed,
        measured_time: cfg.duration - cfg.warmup,
        aggregate_throughput: per_station.iter().map(|s| s.throughput).sum(),
        jain: jain_index(&normalized).ok(),
        normalized,
        per_station,
        conservation: books,
        slots: slot_count,
    }
}

/// Simulates the configuration with every station's minimum window replaced
/// by the allocation's.
pub fn replay_allocation(alloc: &Allocation, cfg: &SimConfig) -> Result<SimResult> {
    let scenario = cfg.scenario.with_cw_min(&alloc.cw_min)?;
    let cfg = SimConfig {
        scenario,
        ..cfg.clone()
    };
    Ok(run_simulation(&cfg))
}
