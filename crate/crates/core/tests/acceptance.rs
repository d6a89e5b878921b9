//! End-to-end acceptance checks, one test per criterion. Every check prints a
//! PASS/FAIL line; a test fails if any of its lines is FAIL.

use std::sync::OnceLock;

use linksim::channel::ChannelConfig;
use linksim::csi::{cqi_to_sinr, CqiMapping};
use linksim::grid::{build_grid, GridConfig, ReKind};
use linksim::harq::{
    analytic_latency, capped_mean_latency, latency_sensitivity, run_block, HarqConfig,
};
use linksim::interference::{apply_interference, InterferenceProfile, Strategy};
use linksim::linkadapt::{block_error_prob, McsTable, TARGET_BLER};
use linksim::metrics::{QuantileSketch, RunningStats};
use linksim::seeding::{stream_rng, StreamKind};
use linksim::sim::{equal_density_budgets, run_point, run_point_at_power, PointMetrics, ScenarioConfig};

const SEED: u64 = 2019;
const SUBFRAMES: u64 = 10_000;

fn check(name: &str, ok: bool, detail: String) -> bool {
    println!("[{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn flat_scenario() -> ScenarioConfig {
    ScenarioConfig {
        channel: ChannelConfig::static_awgn(30.0),
        subframes_per_point: SUBFRAMES,
        master_seed: SEED,
        ..ScenarioConfig::default()
    }
}

struct Sweep {
    npi: Vec<PointMetrics>,
    pi: Vec<PointMetrics>,
    barrage_0db: PointMetrics,
}

const SWEEP_DB: [f64; 4] = [-5.0, 0.0, 5.0, 10.0];

fn sweep() -> &'static Sweep {
    static S: OnceLock<Sweep> = OnceLock::new();
    S.get_or_init(|| {
        let sc = flat_scenario();
        let run = |s: Strategy| -> Vec<PointMetrics> {
            SWEEP_DB.iter().map(|&t| run_point(&sc, s, t).unwrap()).collect()
        };
        Sweep {
            npi: run(Strategy::FreqDomainNpi),
            pi: run(Strategy::PilotTones),
            barrage_0db: run_point(&sc, Strategy::Barrage, 0.0).unwrap(),
        }
    })
}

fn at(points: &[PointMetrics], target: f64) -> &PointMetrics {
    points.iter().find(|p| p.target_sinr_db == Some(target)).unwrap()
}

#[test]
fn criterion_1_analytic_anchor() {
    assert!(analytic_anchor());
}

fn analytic_anchor() -> bool {
    let v = analytic_latency(0.10, 8.0).unwrap();
    let exact = 0.8 / 0.9;
    check(
        "1 analytic latency anchor",
        (v - exact).abs() < 1e-6 && v <= 0.89,
        format!("latency(0.10, 8 ms) = {v:.6} ms"),
    )
}

#[test]
fn criterion_2_geometric_monte_carlo() {
    assert!(geometric_monte_carlo());
}

fn geometric_monte_carlo() -> bool {
    let cfg = HarqConfig::unbounded(8.0);
    let mut all = true;
    for (i, bler) in [0.01, 0.1, 0.3, 0.5].into_iter().enumerate() {
        let mut rng = stream_rng(SEED, 0, i as u64, StreamKind::Harq);
        let mut stats = RunningStats::default();
        for _ in 0..100_000 {
            stats.update(run_block(1.0 - bler, &cfg, &mut rng).unwrap().latency_ms);
        }
        let expected = analytic_latency(bler, 8.0).unwrap();
        let rel = (stats.mean - expected).abs() / expected;
        all &= check(
            &format!("2 geometric model bler={bler}"),
            rel <= 0.03,
            format!("MC {:.5} ms vs {expected:.5} ms, rel err {:.2}%", stats.mean, 100.0 * rel),
        );
    }
    all
}

#[test]
fn criterion_3_no_interference_baseline() {
    assert!(no_interference_baseline());
}

fn no_interference_baseline() -> bool {
    let sc = flat_scenario();
    let m = run_point_at_power(&sc, Strategy::None, 0.0).unwrap();
    let ratio = m.throughput_bps / m.throughput_ceiling_bps;
    check(
        "3 no-interference baseline",
        m.bler_ci95.1 <= TARGET_BLER && ratio >= 0.9,
        format!(
            "BLER {:.4} (95% upper {:.4}), throughput {:.2}/{:.2} Mbps = {:.3}",
            m.bler,
            m.bler_ci95.1,
            m.throughput_mbps(),
            m.throughput_ceiling_bps / 1e6,
            ratio
        ),
    )
}

#[test]
fn criterion_4_link_adaptation_failure() {
    assert!(link_adaptation_failure());
}

fn link_adaptation_failure() -> bool {
    let s = sweep();
    let mut all = true;
    for t in [-5.0, 0.0, 5.0] {
        let m = at(&s.npi, t);
        all &= check(
            &format!("4 NPI BLER at {t} dB"),
            m.bler > 0.5,
            format!("BLER {:.4} (measured SINR {:.2} dB)", m.bler, m.actual_sinr_db),
        );
    }
    let pi = at(&s.pi, 0.0);
    all &= check("4 PI BLER at 0 dB", pi.bler < 0.25, format!("BLER {:.4}", pi.bler));
    let b = &s.barrage_0db;
    all &= check("4 barrage BLER at 0 dB", b.bler < 0.25, format!("BLER {:.4}", b.bler));
    all
}

#[test]
fn criterion_5_estimator_blindness() {
    assert!(estimator_blindness());
}

fn estimator_blindness() -> bool {
    let s = sweep();
    let npi_est: Vec<f64> = s.npi.iter().map(|m| m.median_estimated_sinr_db).collect();
    let span = s.npi.last().unwrap().actual_sinr_db - s.npi[0].actual_sinr_db;
    let spread = npi_est.iter().cloned().fold(f64::MIN, f64::max) - npi_est.iter().cloned().fold(f64::MAX, f64::min);
    let mut all = check(
        "5 NPI estimate plateau",
        span >= 15.0 - 0.2 && spread <= 2.11,
        format!("actual span {span:.2} dB, estimate spread {spread:.3} dB ({npi_est:.2?})"),
    );
    let pi_est: Vec<f64> = s.pi.iter().map(|m| m.median_estimated_sinr_db).collect();
    all &= check(
        "5 PI estimate tracks power",
        pi_est.windows(2).all(|w| w[1] > w[0]),
        format!("{pi_est:.2?}"),
    );
    for t in SWEEP_DB {
        let (n, p) = (at(&s.npi, t), at(&s.pi, t));
        all &= check(
            &format!("5 gap at {t} dB"),
            n.estimation_gap_db() >= p.estimation_gap_db() + 2.0,
            format!("NPI gap {:.2} dB, PI gap {:.2} dB", n.estimation_gap_db(), p.estimation_gap_db()),
        );
    }
    all
}

#[test]
fn criterion_6_latency_inflation() {
    assert!(latency_inflation());
}

fn latency_inflation() -> bool {
    let s = sweep();
    let top = *SWEEP_DB.last().unwrap();
    let (n, p) = (at(&s.npi, top), at(&s.pi, top));
    check(
        "6 NPI latency inflation",
        n.mean_retx_latency_ms >= 10.0 && n.mean_retx_latency_ms >= 10.0 * p.mean_retx_latency_ms,
        format!("at {top} dB: NPI {:.3} ms, PI {:.3} ms", n.mean_retx_latency_ms, p.mean_retx_latency_ms),
    )
}

#[test]
fn criterion_7_power_bookkeeping() {
    assert!(power_bookkeeping());
}

fn power_bookkeeping() -> bool {
    let sc = flat_scenario();
    let budgets = equal_density_budgets(&sc, 1.0).unwrap();
    let get = |s: Strategy| budgets.iter().find(|b| b.0 == s).unwrap().1;
    let barrage = get(Strategy::Barrage);
    let mut all = true;
    for s in [Strategy::PilotTones, Strategy::FreqDomainNpi] {
        let ratio = barrage / get(s);
        all &= check(
            &format!("7 barrage/{s} power ratio"),
            (ratio - 3.0).abs() <= 0.03,
            format!("{ratio:.4}"),
        );
    }
    all
}

#[test]
fn criterion_8_oracle_suites() {
    assert!(oracle_suites());
}

fn oracle_suites() -> bool {
    let mut all = true;

    let cfg = GridConfig::default();
    let grid = build_grid(cfg.clone()).unwrap();
    let mut counts = [0usize; 3];
    for sym in 0..cfg.symbols_per_subframe {
        for sc in 0..cfg.num_subcarriers() {
            let pilot = matches!(sym, 0 | 4 | 7 | 11) && sc % 6 == if sym == 4 || sym == 11 { 3 } else { 0 };
            let expected = if pilot { ReKind::Pilot } else { ReKind::Data };
            if grid.kind(grid.index(sc, sym)) == expected {
                counts[if pilot { 0 } else { 1 }] += 1;
            } else {
                counts[2] += 1;
            }
        }
    }
    all &= check(
        "8 grid partition enumeration",
        counts == [400, 8000, 0],
        format!("pilot {}, data {}, mismatched {}", counts[0], counts[1], counts[2]),
    );

    let mut budget_ok = true;
    let mut purity_ok = true;
    for s in [Strategy::PilotTones, Strategy::FreqDomainNpi, Strategy::TimeDomainNpi, Strategy::Barrage] {
        for power in [1.0, 37.5, 1e4] {
            let g = apply_interference(&grid, &InterferenceProfile::new(s, power)).unwrap();
            budget_ok &= (g.total_interference() - power).abs() <= 1e-9 * power;
            if s.is_non_pilot() {
                purity_ok &= g.pilot_res().iter().all(|&re| g.interference_power()[re] == 0.0);
            }
        }
    }
    all &= check("8 interference budget conservation", budget_ok, "4 strategies x 3 powers".into());
    all &= check("8 non-pilot purity", purity_ok, "no power on pilot REs".into());

    let mapping = CqiMapping::default();
    let table = McsTable::standard(&mapping, 2.0).unwrap();
    let worst = (1..=15u8)
        .map(|i| (block_error_prob(table.entry(i), cqi_to_sinr(i)) - TARGET_BLER).abs())
        .fold(0.0, f64::max);
    all &= check(
        "8 BLER calibration at CQI anchors",
        worst < 1e-9 && table.entries().len() == 16,
        format!("max |BLER - 0.1| = {worst:.2e} over 15 schedulable anchors, 16 entries"),
    );

    let ordering = (0..99).map(|i| f64::from(i) / 100.0).all(|b| {
        capped_mean_latency(b, 8.0, 4) <= analytic_latency(b, 8.0).unwrap() + 1e-12
    });
    all &= check("8 capped <= unbounded latency", ordering, "bler in [0, 0.98]".into());

    let capped = capped_mean_latency(0.5, 8.0, 4);
    // Outcomes: k retransmissions with probability 0.5^(k+1) for k < 4, else 4.
    let enumerated = 8.0 * ((0..4).map(|k| f64::from(k) * 0.5f64.powi(k + 1)).sum::<f64>() + 4.0 * 0.5f64.powi(4));
    all &= check(
        "8 capped finite sum at bler 0.5",
        (capped - enumerated).abs() < 1e-12,
        format!("{capped} ms (enumerated {enumerated} ms)"),
    );

    let worst_fd = [0.01, 0.1, 0.3, 0.5, 0.8]
        .into_iter()
        .map(|b: f64| {
            let h = 1e-6 * b;
            let fd = (analytic_latency(b + h, 8.0).unwrap() - analytic_latency(b - h, 8.0).unwrap()) / (2.0 * h);
            let d = latency_sensitivity(b, 8.0).unwrap();
            (fd - d).abs() / d
        })
        .fold(0.0, f64::max);
    all &= check(
        "8 derivative vs finite difference",
        worst_fd < 1e-6,
        format!("max rel err {worst_fd:.2e}"),
    );

    let xs: Vec<f64> = (0..2000).map(|i| ((i * 7919) % 1000) as f64 / 10.0 - 50.0).collect();
    let (mut whole, mut a, mut b) = (RunningStats::default(), RunningStats::default(), RunningStats::default());
    let (mut sw, mut sa, mut sb) = (QuantileSketch::for_db(), QuantileSketch::for_db(), QuantileSketch::for_db());
    for (i, &x) in xs.iter().enumerate() {
        whole.update(x);
        sw.update(x);
        if i < 700 {
            a.update(x);
            sa.update(x);
        } else {
            b.update(x);
            sb.update(x);
        }
    }
    let merged = a.merge(&b);
    all &= check(
        "8 metrics merge invariance",
        merged.count == whole.count
            && (merged.mean - whole.mean).abs() < 1e-9
            && (merged.variance() - whole.variance()).abs() < 1e-9
            && sa.merge(&sb).median() == sw.median(),
        format!("mean {:.4}, median {:?}", merged.mean, sw.median()),
    );
    all
}
