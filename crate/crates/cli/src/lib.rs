//! `dcf-fairlab` command-line front end.
//!
//! Every command loads a scenario (or allocation) file, delegates to
//! `dcf-core`, prints a short report on standard output and, where it makes
//! sense, writes CSV to `--out` (or standard output when no path is given).

mod sweep;

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use dcf_core::equilibrium::solve_equilibrium;
use dcf_core::fairness::{solve_allocation, Allocation, Criterion};
use dcf_core::load::{load_report, load_threshold};
use dcf_core::scenario::{Scenario, ScenarioFile};
use dcf_core::sim::{run_simulation, SimConfig, DEFAULT_DURATION};
use serde::Serialize;

pub use sweep::{run_sweep, Engine, Scale, SweepPoint, SweepRow, SweepSpec};

#[derive(Debug, Parser)]
#[command(
    name = "dcf-fairlab",
    version,
    about = "Multirate 802.11 DCF model, fairness optimizer and simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the equilibrium and classify stations as loaded or unloaded.
    Analyze(AnalyzeArgs),
    /// Packet rate at which a station becomes loaded.
    Thresholds(ThresholdArgs),
    /// Compute a PF/LPF/MLPF allocation and write it as an allocation file.
    Optimize(OptimizeArgs),
    /// Simulate a scenario or allocation file.
    Simulate(SimulateArgs),
    /// Sweep one station's packet rate across engines.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Per-station CSV report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Station id.
    #[arg(long)]
    pub station: u32,
    /// Search interval in pkt/s, `A:B`.
    #[arg(long, default_value = "1:5000")]
    pub range: RangeArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value = "mlpf")]
    pub criterion: Criterion,
    /// Allocation file to write; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario or allocation file.
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Simulated seconds, warmup included.
    #[arg(long, default_value_t = DEFAULT_DURATION)]
    pub duration: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Station whose packet rate is swept.
    #[arg(long)]
    pub station: u32,
    /// Packet-rate range `A:B[:N]` (N points, default 10).
    #[arg(long)]
    pub range: RangeArg,
    #[arg(long, value_enum, default_value_t = Scale::Linear)]
    pub scale: Scale,
    /// Comma-separated engines: model, sim, pf, lpf, mlpf, pf-sim, lpf-sim, mlpf-sim.
    #[arg(long, value_delimiter = ',', default_value = "model,sim")]
    pub engines: Vec<Engine>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_DURATION)]
    pub duration: f64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `A:B[:N]` on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeArg {
    pub start: f64,
    pub stop: f64,
    pub steps: Option<usize>,
}

impl std::str::FromStr for RangeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(format!("expected A:B or A:B:N, got `{s}`"));
        }
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad number `{t}`: {e}"))
        };
        let start = num(parts[0])?;
        let stop = num(parts[1])?;
        if !(start.is_finite() && stop.is_finite() && start < stop) {
            return Err(format!("range needs A < B, got {start}:{stop}"));
        }
        let steps = match parts.get(2) {
            Some(t) => {
                let n = t
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| format!("bad step count `{t}`: {e}"))?;
                if n < 2 {
                    return Err("step count must be >= 2".into());
                }
                Some(n)
            }
            None => None,
        };
        Ok(RangeArg { start, stop, steps })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] dcf_core::Error),
    #[error("{0}")]
    Input(String),
    #[error("failed to write `{path}`: {source}")]
    Output { path: String, source: io::Error },
    #[error("{failed} of {total} sweep points failed")]
    SweepFailures { failed: usize, total: usize },
}

impl CliError {
    /// 2 for bad input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_input_error() => 2,
            CliError::Input(_) | CliError::Output { .. } => 2,
            _ => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Runs a parsed command, writing the text report to `report`.
pub fn run(cli: Cli, report: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Analyze(a) => cmd_analyze(&a, report),
        Command::Thresholds(a) => cmd_thresholds(&a, report).map(|_| ()),
        Command::Optimize(a) => cmd_optimize(&a, report).map(|_| ()),
        Command::Simulate(a) => cmd_simulate(&a, report),
        Command::Sweep(a) => cmd_sweep(&a, report),
    }
}

fn load(path: &Path) -> CliResult<(ScenarioFile, Scenario)> {
    let file = ScenarioFile::load(path)?;
    let sc = file.into_scenario()?;
    Ok((file, sc))
}

fn io_err(path: &str) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Output {
        path: path.to_string(),
        source,
    }
}

/// Serialises `rows` as CSV to `out`, or to `fallback` when `out` is `None`.
pub fn write_csv<T: Serialize>(
    rows: &[T],
    out: Option<&Path>,
    fallback: &mut dyn Write,
) -> CliResult<()> {
    let name = out.map_or("<stdout>".to_string(), |p| p.display().to_string());
    let sink: Box<dyn Write + '_> = match out {
        Some(p) => Box::new(File::create(p).map_err(io_err(&name))?),
        None => Box::new(fallback),
    };
    let mut w = csv::Writer::from_writer(sink);
    for row in rows {
        w.serialize(row)
            .map_err(|e| io_err(&name)(io::Error::other(e)))?;
    }
    w.flush().map_err(io_err(&name))
}

fn write_line(report: &mut dyn Write, line: std::fmt::Arguments) -> CliResult<()> {
    writeln!(report, "{line}").map_err(io_err("<stdout>"))
}

macro_rules! say {
    ($w:expr, $($arg:tt)*) => { write_line($w, format_args!($($arg)*))? };
}

#[derive(Debug, Serialize)]
struct AnalyzeRow {
    station: u32,
    bit_rate: f64,
    packet_rate: f64,
    cw_min: u32,
    tau: f64,
    q: f64,
    p_eq: f64,
    throughput: f64,
    normalized: f64,
    service_time: f64,
    utilization: f64,
    loaded: bool,
}

pub fn cmd_analyze(a: &AnalyzeArgs, report: &mut dyn Write) -> CliResult<()> {
    let (_, sc) = load(&a.scenario)?;
    let eq = solve_equilibrium(&sc)?;
    let loads = load_report(&eq, &sc)?;
    let rows: Vec<AnalyzeRow> = sc
        .stations
        .iter()
        .enumerate()
        .map(|(i, st)| AnalyzeRow {
            station: st.id,
            bit_rate: st.bit_rate,
            packet_rate: st.packet_rate,
            cw_min: st.cw_min,
            tau: eq.state.tau[i],
            q: eq.state.q[i],
            p_eq: eq.state.p_eq[i],
            throughput: eq.throughput.per_station[i],
            normalized: eq.throughput.normalized[i],
            service_time: loads.per_station[i].service_time,
            utilization: loads.per_station[i].utilization,
            loaded: loads.per_station[i].loaded,
        })
        .collect();
    say!(
        report,
        "equilibrium after {} iterations, T_av = {:.3} us",
        eq.iterations,
        eq.slots.t_av * 1e6
    );
    say!(
        report,
        "station      tau        q     S (Mb/s)  lambda*T_serv  loaded"
    );
    for r in &rows {
        say!(
            report,
            "{:>7} {:>8.5} {:>8.5} {:>12.4} {:>14.4}  {}",
            r.station,
            r.tau,
            r.q,
            r.throughput / 1e6,
            r.utilization,
            r.loaded
        );
    }
    say!(
        report,
        "aggregate throughput = {:.4} Mb/s",
        eq.throughput.aggregate / 1e6
    );
    say!(report, "network_loaded = {}", loads.network_loaded);
    if let Some(out) = &a.out {
        write_csv(&rows, Some(out), report)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ThresholdRow {
    station: u32,
    range_start: f64,
    range_stop: f64,
    threshold: f64,
}

pub fn cmd_thresholds(a: &ThresholdArgs, report: &mut dyn Write) -> CliResult<f64> {
    let (_, sc) = load(&a.scenario)?;
    let idx = sc
        .index_of(a.station)
        .ok_or_else(|| CliError::Input(format!("no station with id {}", a.station)))?;
    let lambda = load_threshold(idx, &sc, (a.range.start, a.range.stop))?;
    say!(
        report,
        "station {} becomes loaded at lambda* = {:.4} pkt/s",
        a.station,
        lambda
    );
    if let Some(out) = &a.out {
        let row = ThresholdRow {
            station: a.station,
            range_start: a.range.start,
            range_stop: a.range.stop,
            threshold: lambda,
        };
        write_csv(&[row], Some(out), report)?;
    }
    Ok(lambda)
}

/// Informational `allocation` object stored in allocation files.
#[derive(Debug, Serialize)]
pub struct AllocationSummary {
    pub criterion: Criterion,
    pub weights: Vec<f64>,
    pub tau_star: Vec<f64>,
    pub cw_min: Vec<u32>,
    pub window_limited: Vec<bool>,
    pub predicted_throughput: Vec<f64>,
    pub predicted_aggregate: f64,
    pub utility: f64,
    pub utility_degenerate: bool,
    pub jain: f64,
    pub residual: f64,
}

impl From<&Allocation> for AllocationSummary {
    fn from(a: &Allocation) -> Self {
        AllocationSummary {
            criterion: a.criterion,
            weights: a.weights.clone(),
            tau_star: a.tau_star.clone(),
            cw_min: a.cw_min.clone(),
            window_limited: a.window_limited.clone(),
            predicted_throughput: a.predicted.per_station.clone(),
            predicted_aggregate: a.predicted.aggregate,
            // JSON has no infinity; the flag carries the degenerate case.
            utility: if a.utility.degenerate {
                0.0
            } else {
                a.utility.value
            },
            utility_degenerate: a.utility.degenerate,
            jain: a.jain,
            residual: a.residual,
        }
    }
}

/// Allocation file: the input scenario plus `cw_min_override` and a summary.
pub fn allocation_file(base: &ScenarioFile, alloc: &Allocation) -> ScenarioFile {
    let mut file = base.clone();
    file.cw_min_override = Some(alloc.cw_min.clone());
    file.allocation =
        Some(serde_json::to_value(AllocationSummary::from(alloc)).expect("summary serializes"));
    file
}

pub fn cmd_optimize(a: &OptimizeArgs, report: &mut dyn Write) -> CliResult<Allocation> {
    let (file, sc) = load(&a.scenario)?;
    let alloc = solve_allocation(a.criterion, &sc)?;
    let text = allocation_file(&file, &alloc).to_json_string();
    match &a.out {
        Some(path) => {
            let name = path.display().to_string();
            std::fs::write(path, text + "\n").map_err(io_err(&name))?;
            say!(report, "{} allocation written to {}", a.criterion, name);
        }
        None => {
            // Standard output carries the file alone so it can be piped.
            say!(report, "{text}");
            return Ok(alloc);
        }
    }
    say!(report, "station      tau*    cw_min   S (Mb/s)");
    for (i, st) in sc.stations.iter().enumerate() {
        say!(
            report,
            "{:>7} {:>9.6} {:>9} {:>10.4}",
            st.id,
            alloc.tau_star[i],
            alloc.cw_min[i],
            alloc.predicted.per_station[i] / 1e6
        );
    }
    say!(
        report,
        "aggregate = {:.4} Mb/s, Jain = {:.4}, utility = {:.4}",
        alloc.predicted.aggregate / 1e6,
        alloc.jain,
        alloc.utility.value
    );
    Ok(alloc)
}

pub fn cmd_simulate(a: &SimulateArgs, report: &mut dyn Write) -> CliResult<()> {
    let (file, sc) = load(&a.scenario)?;
    let cfg = SimConfig::new(sc, a.duration, a.seed).map_err(|e| CliError::Input(e.to_string()))?;
    let result = run_simulation(&cfg);
    let name = file.name.clone().unwrap_or_else(|| {
        a.scenario
            .file_stem()
            .map_or("scenario".into(), |s| s.to_string_lossy().into_owned())
    });
    let rows = result.rows(&name);
    match &a.out {
        Some(out) => {
            write_csv(&rows, Some(out), report)?;
            say!(
                report,
                "simulated {:.1} s: aggregate {:.4} Mb/s, Jain {}",
                result.measured_time,
                result.aggregate_throughput / 1e6,
                result.jain.map_or("n/a".into(), |j| format!("{j:.4}"))
            );
        }
        None => write_csv(&rows, None, report)?,
    }
    Ok(())
}

pub fn cmd_sweep(a: &SweepArgs, report: &mut dyn Write) -> CliResult<()> {
    let (_, sc) = load(&a.scenario)?;
    let spec = SweepSpec {
        station: a.station,
        start: a.range.start,
        stop: a.range.stop,
        steps: a.range.steps.unwrap_or(10),
        scale: a.scale,
        engines: a.engines.clone(),
        seed: a.seed,
        duration: a.duration,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| CliError::Input(format!("cannot start {} workers: {e}", a.jobs)))?;
    let rows = pool.install(|| run_sweep(&sc, &spec))?;
    write_csv(&rows, a.out.as_deref(), report)?;
    let points = spec.steps;
    let failed_points = (0..points)
        .filter(|&i| rows.iter().any(|r| r.point == i && !r.ok))
        .count();
    if a.out.is_some() {
        say!(
            report,
            "{} points x {} engines, {} points with failures",
            points,
            spec.engines.len(),
            failed_points
        );
    }
    // Partial failures are tolerated while at least 90% of the points succeed.
    if failed_points * 10 > points {
        return Err(CliError::SweepFailures {
            failed: failed_points,
            total: points,
        });
    }
    Ok(())
}
