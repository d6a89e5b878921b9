use std::path::Path;

use linksim::harq::{analytic_latency, analytic_mean_retx, capped_mean_latency, capped_mean_retx};
use linksim::sim::{
    calibrate_interference_power, equal_density_budgets, run_power_sweep, run_sweep, Calibration, PointMetrics,
};
use linksim::{apply_interference, Strategy};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{fmt, to_json, write_atomic, Table};
use crate::CliError;

pub const DEFAULT_BLERS: [f64; 9] = [0.0, 0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9];

const SWEEP_COLUMNS: [&str; 16] = [
    "strategy",
    "target_sinr_db",
    "interference_power_dbm",
    "actual_sinr_db",
    "bler",
    "bler_ci95_low",
    "bler_ci95_high",
    "throughput_mbps",
    "median_cqi",
    "median_est_sinr_db",
    "mean_retx_latency_ms",
    "mean_n_retx",
    "analytic_latency_ms",
    "capped_latency_ms",
    "drop_rate",
    "subframes",
];

fn written(paths: &[std::path::PathBuf]) -> String {
    paths.iter().map(|p| format!("wrote {}", p.display())).collect::<Vec<_>>().join("\n")
}

pub fn sweep_table(cfg: &RunConfig, rows: &[PointMetrics]) -> Table {
    let mut t = Table::new(&SWEEP_COLUMNS);
    for m in rows {
        t.push(vec![
            m.strategy.to_string(),
            m.target_sinr_db.map_or_else(String::new, fmt),
            fmt(cfg.linear_to_dbm(m.interference_power)),
            fmt(m.actual_sinr_db),
            fmt(m.bler),
            fmt(m.bler_ci95.0),
            fmt(m.bler_ci95.1),
            fmt(m.throughput_mbps()),
            fmt(m.median_cqi),
            fmt(m.median_estimated_sinr_db),
            fmt(m.mean_retx_latency_ms),
            fmt(m.mean_n_retx),
            fmt(m.analytic_latency_ms),
            fmt(m.capped_latency_ms),
            fmt(m.residual_drop_rate),
            m.subframes.to_string(),
        ]);
    }
    t
}

pub fn sweep(cfg: &RunConfig, out: &Path, name: &str) -> Result<String, CliError> {
    let rows = match &cfg.sweep_power_dbm {
        Some(levels) => {
            let powers: Vec<f64> = levels.iter().map(|&d| cfg.dbm_to_linear(d)).collect();
            run_power_sweep(&cfg.scenario, &powers)?
        }
        None => run_sweep(&cfg.scenario)?,
    };
    let table = sweep_table(cfg, &rows);
    let paths = [
        write_atomic(out, "sweep.csv", &table.to_csv(name, cfg))?,
        write_atomic(out, "sweep.json", &to_json(name, cfg, &rows))?,
    ];
    Ok(format!("{}\n{}", table.to_text(), written(&paths)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyRow {
    pub bler: f64,
    pub analytic_ms: f64,
    pub capped_ms: f64,
    pub mean_retx: f64,
}

pub fn latency_rows(blers: &[f64], tau_wait_ms: f64, max_retx: u32) -> Result<Vec<LatencyRow>, CliError> {
    blers
        .iter()
        .map(|&bler| {
            if !(0.0..1.0).contains(&bler) {
                return Err(CliError::Config(format!(
                    "bler {bler} outside [0, 1): at bler >= 1 the expected retransmission count diverges"
                )));
            }
            Ok(LatencyRow {
                bler,
                analytic_ms: analytic_latency(bler, tau_wait_ms)?,
                capped_ms: capped_mean_latency(bler, tau_wait_ms, max_retx),
                mean_retx: analytic_mean_retx(bler)?,
            })
        })
        .collect()
}

pub fn latency_table(cfg: &RunConfig, blers: &[f64], out: &Path, name: &str) -> Result<String, CliError> {
    let harq = &cfg.scenario.harq;
    let rows = latency_rows(blers, harq.tau_wait_ms, harq.max_retx)?;
    let mut table = Table::new(&["bler", "analytic_ms", "capped_ms", "mean_retx", "capped_mean_retx"]);
    for r in &rows {
        table.push(vec![
            fmt(r.bler),
            fmt(r.analytic_ms),
            fmt(r.capped_ms),
            fmt(r.mean_retx),
            fmt(capped_mean_retx(r.bler, harq.max_retx)),
        ]);
    }
    let paths = [
        write_atomic(out, "latency_table.csv", &table.to_csv(name, cfg))?,
        write_atomic(out, "latency_table.json", &to_json(name, cfg, &rows))?,
    ];
    Ok(format!("{}\n{}", table.to_text(), written(&paths)))
}

pub fn grid_dump(cfg: &RunConfig, out: &Path, name: &str) -> Result<String, CliError> {
    let base = cfg.scenario.base_grid()?;
    let mut layout = Table::new(&["subcarrier", "symbol", "kind"]);
    for re in base.elements() {
        layout.push(vec![re.subcarrier.to_string(), re.symbol.to_string(), re.kind.as_str().to_string()]);
    }

    // Share of a unit interference budget landing on each RE, per strategy.
    let strategies: Vec<Strategy> = Strategy::ALL.into_iter().filter(|&s| s != Strategy::None).collect();
    let maps = strategies
        .iter()
        .map(|&s| apply_interference(&base, &cfg.scenario.interference.profile(s, 1.0)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut columns = vec!["subcarrier", "symbol", "kind"];
    columns.extend(strategies.iter().map(|s| s.as_str()));
    let mut map = Table::new(&columns);
    for re in base.elements() {
        let mut row = vec![re.subcarrier.to_string(), re.symbol.to_string(), re.kind.as_str().to_string()];
        row.extend(maps.iter().map(|g| format!("{:e}", g.interference_power()[base.index(re.subcarrier, re.symbol)])));
        map.push(row);
    }

    let paths = [
        write_atomic(out, "grid.csv", &layout.to_csv(name, cfg))?,
        write_atomic(out, "interference_map.csv", &map.to_csv(name, cfg))?,
    ];
    let summary = format!(
        "{} REs: {} pilot, {} data, {} control",
        base.len(),
        base.pilot_res().len(),
        base.data_res().len(),
        base.control_res().len()
    );
    Ok(format!("{summary}\n{}", written(&paths)))
}

#[derive(Debug, Clone, Serialize)]
struct CalibrationReport<'a> {
    calibrations: &'a [Calibration],
    tone_power_dbm: f64,
    equal_density: Vec<Budget>,
}

#[derive(Debug, Clone, Serialize)]
struct Budget {
    strategy: Strategy,
    total_power: f64,
    total_power_dbm: f64,
    ratio_to_min: f64,
}

pub fn calibrate(cfg: &RunConfig, tone_power_dbm: Option<f64>, out: &Path, name: &str) -> Result<String, CliError> {
    let sc = &cfg.scenario;
    let mut cals = Vec::new();
    let mut table = Table::new(&[
        "strategy",
        "target_sinr_db",
        "total_power",
        "total_power_dbm",
        "per_re_power_dbm",
        "targeted_res",
        "tone_count",
        "achieved_sinr_db",
    ]);
    for &s in &sc.interference.strategy {
        for &t in &sc.sweep_sinr_db {
            let c = calibrate_interference_power(sc, s, t)?;
            table.push(vec![
                s.to_string(),
                fmt(t),
                format!("{:e}", c.total_power),
                fmt(cfg.linear_to_dbm(c.total_power)),
                fmt(cfg.linear_to_dbm(c.per_targeted_re_power)),
                c.targeted_res.to_string(),
                c.tone_count.to_string(),
                fmt(c.achieved_sinr_db),
            ]);
            cals.push(c);
        }
    }

    let tone_dbm = tone_power_dbm.unwrap_or(cfg.rsrp_dbm);
    let raw = equal_density_budgets(sc, cfg.dbm_to_linear(tone_dbm))?;
    let min = raw.iter().map(|b| b.1).filter(|&p| p > 0.0).fold(f64::INFINITY, f64::min);
    let budgets: Vec<Budget> = raw
        .into_iter()
        .map(|(strategy, total_power)| Budget {
            strategy,
            total_power,
            total_power_dbm: cfg.linear_to_dbm(total_power),
            ratio_to_min: total_power / min,
        })
        .collect();
    let mut density = Table::new(&["strategy", "tone_power_dbm", "total_power", "total_power_dbm", "ratio_to_min"]);
    for b in &budgets {
        density.push(vec![
            b.strategy.to_string(),
            fmt(tone_dbm),
            format!("{:e}", b.total_power),
            fmt(b.total_power_dbm),
            fmt(b.ratio_to_min),
        ]);
    }

    let report = CalibrationReport { calibrations: &cals, tone_power_dbm: tone_dbm, equal_density: budgets };
    let paths = [
        write_atomic(out, "calibration.csv", &table.to_csv(name, cfg))?,
        write_atomic(out, "equal_density.csv", &density.to_csv(name, cfg))?,
        write_atomic(out, "calibration.json", &to_json(name, cfg, &report))?,
    ];
    Ok(format!("{}\n\n{}\n{}", table.to_text(), density.to_text(), written(&paths)))
}
