use clap::ValueEnum;
use dcf_core::equilibrium::solve_equilibrium;
use dcf_core::fairness::{jain_index, solve_allocation, Criterion};
use dcf_core::scenario::Scenario;
use dcf_core::sim::{replay_allocation, run_simulation, SimConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    Linear,
    Log,
}

/// What is evaluated at every sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// Analytical equilibrium with the scenario's windows.
    Model,
    /// Simulation with the scenario's windows.
    Sim,
    /// Model-predicted throughput of an allocation.
    Alloc(Criterion),
    /// Simulation replay of an allocation's windows.
    AllocSim(Criterion),
}

impl Engine {
    pub fn name(self) -> String {
        match self {
            Engine::Model => "model".into(),
            Engine::Sim => "sim".into(),
            Engine::Alloc(c) => c.name().into(),
            Engine::AllocSim(c) => format!("{}-sim", c.name()),
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "model" => Ok(Engine::Model),
            "sim" | "dcf-sim" => Ok(Engine::Sim),
            other => match other.strip_suffix("-sim") {
                Some(c) => c.parse().map(Engine::AllocSim),
                None => other.parse().map(Engine::Alloc),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub station: u32,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    pub scale: Scale,
    pub engines: Vec<Engine>,
    pub seed: u64,
    pub duration: f64,
}

impl SweepSpec {
    pub fn points(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|i| {
                let f = i as f64 / (n - 1) as f64;
                if i == 0 {
                    return self.start;
                }
                if i == n - 1 {
                    return self.stop;
                }
                match self.scale {
                    Scale::Linear => self.start + f * (self.stop - self.start),
                    Scale::Log => (self.start.ln() + f * (self.stop / self.start).ln()).exp(),
                }
            })
            .collect()
    }

    fn validate(&self) -> CliResult<()> {
        if !(self.start < self.stop && self.start >= 0.0) {
            return Err(CliError::Input(format!(
                "sweep range needs 0 <= start < stop, got {}:{}",
                self.start, self.stop
            )));
        }
        if self.steps < 2 {
            return Err(CliError::Input("a sweep needs at least 2 points".into()));
        }
        if self.scale == Scale::Log && self.start <= 0.0 {
            return Err(CliError::Input("log sweeps need a positive start".into()));
        }
        if self.engines.is_empty() {
            return Err(CliError::Input("no engines selected".into()));
        }
        Ok(())
    }
}

/// Result of one engine at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub throughput: Vec<f64>,
    pub normalized: Vec<f64>,
    pub cw_min: Vec<u32>,
}

/// One CSV row per point per engine. Vector columns are `;`-separated in
/// station order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub point: usize,
    pub station: u32,
    pub packet_rate: f64,
    pub engine: String,
    pub ok: bool,
    pub aggregate: Option<f64>,
    pub jain: Option<f64>,
    pub throughput: String,
    pub normalized: String,
    pub cw_min: String,
    pub error: String,
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

fn evaluate(
    sc: &Scenario,
    engine: Engine,
    seed: u64,
    duration: f64,
) -> dcf_core::Result<SweepPoint> {
    let windows: Vec<u32> = sc.stations.iter().map(|s| s.cw_min).collect();
    let sim_cfg = || SimConfig::new(sc.clone(), duration, seed);
    let (throughput, cw_min) = match engine {
        Engine::Model => (solve_equilibrium(sc)?.throughput.per_station, windows),
        Engine::Sim => (run_simulation(&sim_cfg()?).throughputs(), windows),
        Engine::Alloc(c) => {
            let a = solve_allocation(c, sc)?;
            (a.predicted.per_station, a.cw_min)
        }
        Engine::AllocSim(c) => {
            let a = solve_allocation(c, sc)?;
            (replay_allocation(&a, &sim_cfg()?)?.throughputs(), a.cw_min)
        }
    };
    let normalized = throughput
        .iter()
        .zip(&sc.stations)
        .map(|(s, st)| s / st.bit_rate)
        .collect();
    Ok(SweepPoint {
        throughput,
        normalized,
        cw_min,
    })
}

/// Evaluates every (point, engine) pair on the current rayon pool. Rows come
/// back in point order, engines in the order given.
pub fn run_sweep(sc: &Scenario, spec: &SweepSpec) -> CliResult<Vec<SweepRow>> {
    spec.validate()?;
    let idx = sc
        .index_of(spec.station)
        .ok_or_else(|| CliError::Input(format!("no station with id {}", spec.station)))?;
    let points = spec.points();
    let jobs: Vec<(usize, f64, Engine)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, &x)| spec.engines.iter().map(move |&e| (i, x, e)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(point, rate, engine)| {
            let probe = sc.with_packet_rate(idx, rate);
            let mut row = SweepRow {
                point,
                station: spec.station,
                packet_rate: rate,
                engine: engine.name(),
                ok: false,
                aggregate: None,
                jain: None,
                throughput: String::new(),
                normalized: String::new(),
                cw_min: String::new(),
                error: String::new(),
            };
            match evaluate(&probe, engine, spec.seed, spec.duration) {
                Ok(p) => {
                    row.ok = true;
                    row.aggregate = Some(p.throughput.iter().sum());
                    row.jain = jain_index(&p.normalized).ok();
                    row.throughput = join(&p.throughput);
                    row.normalized = join(&p.normalized);
                    row.cw_min = join(&p.cw_min);
                }
                Err(e) => row.error = e.to_string(),
            }
            row
        })
        .collect();
    Ok(rows)
}
