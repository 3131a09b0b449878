//! Acceptance report: one PASS/FAIL line per criterion, with the measured
//! values underneath. Criteria listed in `KNOWN_DEVIATIONS` are documented in
//! the README as not reproduced; they are reported but do not fail the run.
//! Any other failure exits non-zero.

use std::path::Path;
use std::time::{Duration, Instant};

use dcf_core::equilibrium::{chain_oracle, closed_form_tau, slot_breakdown, solve_equilibrium};
use dcf_core::fairness::{
    derivative_step, solve_allocation, solve_stationarity, stationarity_residual, t_av_derivative,
    AllocationOptions, Criterion,
};
use dcf_core::load::load_threshold;
use dcf_core::scenario::{build_duration_classes, PhyMacParams, Scenario, StationProfile};
use dcf_core::sim::{batch_statistics, replay_allocation, run_simulation, SimConfig, SimResult};
use dcf_fairlab::{run_sweep, Engine, Scale, SweepSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const KNOWN_DEVIATIONS: &[u32] = &[2, 6];
const SEEDS: u64 = 5;
const SIM_SECONDS: f64 = 60.0;

type Entry = (u32, &'static str, fn() -> Vec<Check>);

struct Check {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: String) -> Check {
    Check { ok, detail }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn scenario_file(name: &str) -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    Scenario::load(path).expect("bundled scenario loads")
}

/// Mean over seeds of independent 60 s runs.
struct MultiSeed {
    runs: Vec<SimResult>,
}

impl MultiSeed {
    fn new(run: impl Fn(&SimConfig) -> SimResult + Sync, sc: &Scenario) -> Self {
        let runs = (0..SEEDS)
            .into_par_iter()
            .map(|seed| run(&SimConfig::new(sc.clone(), SIM_SECONDS, seed).unwrap()))
            .collect();
        MultiSeed { runs }
    }

    fn aggregate(&self) -> f64 {
        self.runs
            .iter()
            .map(|r| r.aggregate_throughput)
            .sum::<f64>()
            / self.runs.len() as f64
    }

    fn jain(&self) -> f64 {
        self.runs.iter().map(|r| r.jain.unwrap()).sum::<f64>() / self.runs.len() as f64
    }

    /// Mean throughput of station `s` and the 95% half-width across seeds.
    fn station(&self, s: usize) -> (f64, f64) {
        let per_seed: Vec<f64> = self
            .runs
            .iter()
            .map(|r| r.per_station[s].throughput)
            .collect();
        let st = batch_statistics(&per_seed);
        (st.mean, st.ci_half_width)
    }
}

fn criterion_1() -> Vec<Check> {
    let cases = [
        ("slow station, slow_sweep scenario", "slow_sweep.json", 0, 89.19),
        ("third station, fast_sweep scenario", "fast_sweep.json", 2, 533.0),
    ];
    cases
        .iter()
        .map(|&(label, file, t, target)| {
            let sc = scenario_file(file);
            let start = Instant::now();
            let lambda = load_threshold(t, &sc, (1.0, 2000.0)).unwrap();
            let took = start.elapsed();
            check(
                within(lambda, target, 0.02) && took < Duration::from_secs(10),
                format!("{label}: {lambda:.2} pkt/s (target {target} +-2%), {took:.2?}"),
            )
        })
        .collect()
}

fn criterion_2() -> Vec<Check> {
    let sc = scenario_file("slow_sweep.json");
    let s1 = |lambda: f64| {
        solve_equilibrium(&sc.with_packet_rate(0, lambda))
            .unwrap()
            .throughput
            .per_station[0]
    };
    let plateau = s1(3000.0);
    let mut out = vec![check(
        within(plateau, 0.73e6, 0.05),
        format!(
            "saturated slow-station throughput {:.4} Mb/s at 3000 pkt/s (target 0.73 +-5%)",
            plateau / 1e6
        ),
    )];
    let mut worst: f64 = 0.0;
    for lambda in [1.0, 2.0, 5.0, 10.0, 15.0, 20.0] {
        let offered = lambda * sc.stations[0].payload_bits();
        worst = worst.max((s1(lambda) - offered).abs() / offered);
    }
    out.push(check(
        worst <= 0.03,
        format!(
            "linear regime lambda1 in [1, 20]: worst |S1 / offered - 1| = {:.4} (<= 0.03)",
            worst
        ),
    ));
    out
}

fn criterion_3() -> Vec<Check> {
    let a = scenario_file("scenario_a.json");
    let b = scenario_file("scenario_b.json");
    let replay = |sc: &Scenario, c: Criterion| {
        let alloc = solve_allocation(c, sc).unwrap();
        MultiSeed::new(move |cfg| replay_allocation(&alloc, cfg).unwrap(), sc)
    };
    let rows = [
        (
            "A DCF",
            MultiSeed::new(run_simulation, &a),
            1.85,
            Some(0.451),
        ),
        ("A MLPF", replay(&a, Criterion::Mlpf), 5.07, Some(0.848)),
        ("B LPF", replay(&b, Criterion::Lpf), 4.62, Some(0.976)),
        ("B MLPF", replay(&b, Criterion::Mlpf), 5.07, None),
    ];
    let mut out = Vec::new();
    for (label, ms, agg, jain) in rows {
        let got = ms.aggregate() / 1e6;
        out.push(check(
            within(got, agg, 0.10),
            format!("{label}: aggregate {got:.3} Mb/s (target {agg} +-10%)"),
        ));
        if let Some(j) = jain {
            let got = ms.jain();
            out.push(check(
                (got - j).abs() <= 0.05,
                format!("{label}: Jain {got:.3} (target {j} +-0.05)"),
            ));
        }
    }
    out
}

fn criterion_4() -> Vec<Check> {
    let mut worst: f64 = 0.0;
    let mut over = Vec::new();
    let mut points = 0;
    for w0 in [2u32, 4, 8, 16, 32] {
        for q in [0.1, 0.5, 0.9] {
            for p_eq in [0.0, 0.2, 0.5] {
                for m in [1u32, 3, 5] {
                    for r in [m, m + 2] {
                        let params = PhyMacParams {
                            max_backoff_stage: m,
                            retry_limit: r,
                            ..PhyMacParams::default()
                        };
                        let profile = StationProfile::new(1, 11e6, 1.0, 1028).with_cw_min(w0);
                        let p_idle = 0.9;
                        let closed = closed_form_tau(q, p_eq, p_idle, w0 as f64, m, r).unwrap();
                        let chain = chain_oracle(&profile, q, p_eq, p_idle, &params).unwrap();
                        let err = (closed - chain).abs() / chain;
                        worst = worst.max(err);
                        points += 1;
                        if err >= 1e-3 {
                            over.push(format!("W0={w0} q={q} p={p_eq} m={m} r={r}"));
                        }
                    }
                }
            }
        }
    }
    vec![check(
        over.is_empty(),
        format!(
            "{points} grid points, worst relative error {worst:.2e} (< 1e-3), {} above tolerance {:?}",
            over.len(),
            over
        ),
    )]
}

fn criterion_5() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let rates = [1e6, 2e6, 5.5e6, 11e6];
    let mut out = Vec::new();

    // Partition identity against brute-force enumeration.
    let mut worst: f64 = 0.0;
    for n in 1..=10 {
        for _ in 0..20 {
            let stations = (0..n)
                .map(|i| {
                    StationProfile::new(i as u32 + 1, rates[rng.random_range(0..4)], 10.0, 1028)
                        .with_packet_error_rate(rng.random_range(0.0..0.5))
                })
                .collect();
            let sc = Scenario::new(PhyMacParams::default(), stations).unwrap();
            let classes = build_duration_classes(&sc);
            let tau: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.999)).collect();
            let slots = slot_breakdown(&tau, &sc, &classes);
            let mut idle = 0.0;
            let mut success = vec![0.0; n];
            let mut collision = vec![0.0; classes.class_count()];
            for pattern in 0u32..(1 << n) {
                let prob: f64 = (0..n)
                    .map(|s| {
                        if pattern >> s & 1 == 1 {
                            tau[s]
                        } else {
                            1.0 - tau[s]
                        }
                    })
                    .product();
                let senders: Vec<usize> = (0..n).filter(|s| pattern >> s & 1 == 1).collect();
                match senders.len() {
                    0 => idle += prob,
                    1 => success[senders[0]] += prob,
                    _ => {
                        let d = senders.iter().map(|&s| classes.class_of(s)).min().unwrap();
                        collision[d] += prob;
                    }
                }
            }
            worst = worst
                .max((slots.total_probability() - 1.0).abs())
                .max((1.0 - slots.p_tr - idle).abs());
            for (a, b) in slots.per_station_success.iter().zip(&success) {
                worst = worst.max((a - b).abs());
            }
            for (a, b) in slots.per_class_collision.iter().zip(&collision) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    out.push(check(
        worst < 1e-9,
        format!(
            "slot partition vs 2^N enumeration, N = 1..10: worst deviation {worst:.1e} (< 1e-9)"
        ),
    ));

    // Finite-difference slot-time derivative against Richardson extrapolation.
    let sc = scenario_file("scenario_a.json");
    let classes = build_duration_classes(&sc);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let tau: Vec<f64> = (0..3).map(|_| rng.random_range(0.001..0.3)).collect();
        let j = rng.random_range(0..3);
        let fd = t_av_derivative(j, &tau, derivative_step(tau[j]), &sc, &classes);
        let d = |h: f64| t_av_derivative(j, &tau, h, &sc, &classes);
        let h = 1e-3 * tau[j];
        let reference = (4.0 * d(h / 2.0) - d(h)) / 3.0;
        worst = worst.max((fd - reference).abs() / reference.abs());
    }
    out.push(check(
        worst < 1e-6,
        format!("dT_av/dtau central difference vs Richardson: worst relative {worst:.1e} (< 1e-6)"),
    ));

    // Stationarity residual at the reported optimum.
    let mut worst: f64 = 0.0;
    for file in ["scenario_a.json", "scenario_b.json"] {
        let sc = scenario_file(file);
        let classes = build_duration_classes(&sc);
        for c in Criterion::ALL {
            let a = solve_allocation(c, &sc).unwrap();
            for j in (0..sc.len()).filter(|&j| !a.window_limited[j]) {
                let r = stationarity_residual(j, &a.tau_star, &a.weights, &sc, &classes).unwrap();
                worst = worst.max(r.abs());
            }
        }
    }
    out.push(check(
        worst < 1e-6,
        format!("stationarity residual at tau*, A and B x PF/LPF/MLPF: {worst:.1e} (< 1e-6)"),
    ));

    // Scale invariance of tau*.
    let w = Criterion::Mlpf.weights(&sc).unwrap();
    let opts = AllocationOptions::default();
    let base = solve_stationarity(&w, &sc, &classes, &opts).unwrap().tau;
    let mut worst: f64 = 0.0;
    for k in [0.01, 0.5, 7.0, 100.0] {
        let scaled: Vec<f64> = w.iter().map(|x| x * k).collect();
        let tau = solve_stationarity(&scaled, &sc, &classes, &opts)
            .unwrap()
            .tau;
        for (a, b) in tau.iter().zip(&base) {
            worst = worst.max((a - b).abs() / b);
        }
    }
    out.push(check(
        worst < 1e-5,
        format!("tau* under weight scaling by 0.01..100: worst relative change {worst:.1e}"),
    ));

    // LPF equals PF when every station offers the same load.
    let equal = Scenario::new(
        PhyMacParams::default(),
        vec![
            StationProfile::new(1, 1e6, 400.0, 1028),
            StationProfile::new(2, 11e6, 400.0, 1028),
            StationProfile::new(3, 5.5e6, 400.0, 1028),
        ],
    )
    .unwrap();
    let pf = solve_allocation(Criterion::Pf, &equal).unwrap();
    let lpf = solve_allocation(Criterion::Lpf, &equal).unwrap();
    out.push(check(
        pf.tau_star == lpf.tau_star && pf.cw_min == lpf.cw_min,
        format!(
            "LPF under equal rates: windows {:?} vs PF {:?}",
            lpf.cw_min, pf.cw_min
        ),
    ));

    // Simulator determinism and conservation.
    let cfg = SimConfig::new(sc.with_cw_min(&[40, 20, 20]).unwrap(), 10.0, 17).unwrap();
    let first = run_simulation(&cfg);
    let same = first == run_simulation(&cfg);
    let lossy = Scenario::new(
        PhyMacParams::default(),
        vec![
            StationProfile::new(1, 1e6, 800.0, 1028).with_packet_error_rate(0.2),
            StationProfile::new(2, 11e6, 300.0, 1028).with_packet_error_rate(0.05),
            StationProfile::new(3, 5.5e6, 2000.0, 1028).with_cw_min(4),
        ],
    )
    .unwrap();
    let balanced = (0..SEEDS).all(|seed| {
        run_simulation(&SimConfig::new(lossy.clone(), 10.0, seed).unwrap())
            .conservation
            .iter()
            .all(|c| c.balanced())
    });
    out.push(check(
        same && balanced,
        format!("simulator: bit-identical rerun = {same}, packet books balance on every station = {balanced}"),
    ));
    out
}

fn compare(label: &str, model: &[f64], sim: &MultiSeed) -> Check {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    let mut ok = true;
    for (s, m) in model.iter().enumerate() {
        let (mean, ci) = sim.station(s);
        let dev = (mean - m).abs();
        ok &= dev <= 0.10 * m + ci;
        worst = worst.max(dev / m);
        parts.push(format!("{:+.1}%", 100.0 * (mean - m) / m));
    }
    check(
        ok,
        format!(
            "{label}: sim vs model per station [{}], worst {:.1}%",
            parts.join(", "),
            100.0 * worst
        ),
    )
}

fn criterion_6() -> Vec<Check> {
    let mut out = Vec::new();
    let dcf = |label: String, sc: Scenario| {
        let model = solve_equilibrium(&sc).unwrap().throughput.per_station;
        compare(&label, &model, &MultiSeed::new(run_simulation, &sc))
    };
    let slow_sweep = scenario_file("slow_sweep.json");
    for lambda in [10.0, 50.0, 89.19, 200.0, 500.0, 2000.0] {
        out.push(dcf(
            format!("slow_sweep lambda1 = {lambda}"),
            slow_sweep.with_packet_rate(0, lambda),
        ));
    }
    let fast_sweep = scenario_file("fast_sweep.json");
    for lambda in [100.0, 300.0, 533.0, 1000.0, 3000.0] {
        out.push(dcf(
            format!("fast_sweep lambda3 = {lambda}"),
            fast_sweep.with_packet_rate(2, lambda),
        ));
    }
    for (name, file) in [("A", "scenario_a.json"), ("B", "scenario_b.json")] {
        let sc = scenario_file(file);
        out.push(dcf(format!("{name} DCF"), sc.clone()));
        for c in Criterion::ALL {
            let alloc = solve_allocation(c, &sc).unwrap();
            let tuned = sc.with_cw_min(&alloc.cw_min).unwrap();
            let model = solve_equilibrium(&tuned).unwrap().throughput.per_station;
            let sim = MultiSeed::new(|cfg| replay_allocation(&alloc, cfg).unwrap(), &sc);
            out.push(compare(
                &format!("{name} {c} windows {:?}", alloc.cw_min),
                &model,
                &sim,
            ));
        }
    }

    let lone = Scenario::new(
        PhyMacParams::default(),
        vec![StationProfile::new(1, 11e6, 1e5, 1028)],
    )
    .unwrap();
    let model = solve_equilibrium(&lone).unwrap().throughput.per_station[0];
    let (sim, _) = MultiSeed::new(run_simulation, &lone).station(0);
    out.push(check(
        within(sim, model, 0.03),
        format!(
            "single saturated station: sim {:.4} vs model {:.4} Mb/s ({:+.2}%, limit 3%)",
            sim / 1e6,
            model / 1e6,
            100.0 * (sim - model) / model
        ),
    ));
    out
}

fn criterion_7() -> Vec<Check> {
    let stations = (0..50)
        .map(|i| {
            let rates = [1e6, 2e6, 5.5e6, 11e6];
            StationProfile::new(
                i + 1,
                rates[i as usize % 4],
                5.0 + 40.0 * (i % 7) as f64,
                200 + 37 * i,
            )
            .with_cw_min(16 + 8 * (i % 5))
            .with_packet_error_rate(0.01 * (i % 3) as f64)
        })
        .collect();
    let big = Scenario::new(PhyMacParams::default(), stations).unwrap();
    let start = Instant::now();
    let eq = solve_equilibrium(&big);
    let took = start.elapsed();
    let mut out = vec![check(
        eq.is_ok() && took < Duration::from_secs(1),
        format!(
            "N = 50 heterogeneous stations: {} in {took:.2?} (< 1 s)",
            match &eq {
                Ok(e) => format!("converged after {} iterations", e.iterations),
                Err(e) => format!("failed ({e})"),
            }
        ),
    )];

    let spec = SweepSpec {
        station: 1,
        start: 10.0,
        stop: 3000.0,
        steps: 100,
        scale: Scale::Log,
        engines: vec![Engine::Model, Engine::Sim],
        seed: 1,
        duration: SIM_SECONDS,
    };
    let start = Instant::now();
    let rows = run_sweep(&scenario_file("scenario_a.json"), &spec).unwrap();
    let took = start.elapsed();
    let ok_rows = rows.iter().filter(|r| r.ok).count();
    out.push(check(
        ok_rows == rows.len() && took < Duration::from_secs(600),
        format!(
            "100-point sweep, model + 60 s simulation: {ok_rows}/{} rows ok in {took:.2?} (< 10 min)",
            rows.len()
        ),
    ));
    out
}

fn main() {
    // `cargo test` passes harness flags such as `--nocapture`; there is
    // nothing to filter here, so they are ignored.
    let criteria: [Entry; 7] = [
        (1, "load thresholds", criterion_1),
        (2, "slow-station saturation and linear regime", criterion_2),
        (3, "simulated fairness table", criterion_3),
        (4, "closed form vs chain oracle", criterion_4),
        (5, "property suites", criterion_5),
        (6, "model vs simulation", criterion_6),
        (7, "performance", criterion_7),
    ];
    let mut unexpected = Vec::new();
    for (id, title, run) in criteria {
        let checks = run();
        let pass = checks.iter().all(|c| c.ok);
        let note = match (pass, KNOWN_DEVIATIONS.contains(&id)) {
            (false, true) => " (documented deviation)",
            (true, true) => " (listed as a deviation but now passes)",
            (false, false) => {
                unexpected.push(id);
                ""
            }
            (true, false) => "",
        };
        println!(
            "criterion {id} [{}] {title}{note}",
            if pass { "PASS" } else { "FAIL" }
        );
        for c in &checks {
            println!("    {} {}", if c.ok { "ok  " } else { "FAIL" }, c.detail);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures in criteria {unexpected:?}");
        std::process::exit(1);
    }
}
