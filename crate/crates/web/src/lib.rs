//! Browser bindings. Each export takes primitives or a JSON scenario and
//! returns JSON; the `*_json` functions hold the logic and run natively.

use linksim::harq::{analytic_latency, capped_mean_latency, run_block, HarqConfig};
use linksim::seeding::{stream_rng, StreamKind};
use linksim::sim::{run_point, run_point_at_power, ScenarioConfig};
use linksim::{apply_interference, Strategy};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn scenario(config_json: &str) -> Result<ScenarioConfig, String> {
    let text = if config_json.trim().is_empty() { "{}" } else { config_json };
    let sc: ScenarioConfig = serde_json::from_str(text).map_err(|e| format!("invalid scenario: {e}"))?;
    sc.validate().map_err(|e| e.to_string())?;
    Ok(sc)
}

fn strategy(name: &str) -> Result<Strategy, String> {
    name.parse().map_err(|e: linksim::Error| e.to_string())
}

#[derive(Serialize)]
struct GridMap {
    subcarriers: usize,
    symbols: usize,
    /// 0 data, 1 pilot, 2 control; symbol-major.
    kinds: Vec<u8>,
    /// Share of a unit budget per RE, symbol-major.
    power: Vec<f64>,
    targeted_res: usize,
    tone_count: usize,
}

/// Layout and interference placement of `strategy` over one subframe.
pub fn grid_map_json(config_json: &str, strategy_name: &str) -> Result<String, String> {
    let sc = scenario(config_json)?;
    let s = strategy(strategy_name)?;
    let base = sc.base_grid().map_err(|e| e.to_string())?;
    let power = if s == Strategy::None { 0.0 } else { 1.0 };
    let profile = sc.interference.profile(s, power);
    let grid = apply_interference(&base, &profile).map_err(|e| e.to_string())?;
    let kinds = grid
        .kinds()
        .iter()
        .map(|k| match k {
            linksim::ReKind::Data => 0,
            linksim::ReKind::Pilot => 1,
            linksim::ReKind::Control => 2,
        })
        .collect();
    let map = GridMap {
        subcarriers: grid.num_subcarriers(),
        symbols: sc.grid.symbols_per_subframe,
        kinds,
        power: grid.interference_power().to_vec(),
        targeted_res: profile.targeted_re_count(&grid).map_err(|e| e.to_string())?,
        tone_count: profile.tone_count(&grid).map_err(|e| e.to_string())?,
    };
    Ok(serde_json::to_string(&map).expect("grid map serializes"))
}

#[derive(Serialize)]
struct LatencyCurves {
    bler: Vec<f64>,
    analytic_ms: Vec<f64>,
    capped_ms: Vec<f64>,
    monte_carlo_ms: Vec<f64>,
}

/// Unbounded, capped and simulated mean retransmission latency over a BLER grid.
pub fn latency_curves_json(tau_wait_ms: f64, max_retx: u32, points: u32, blocks: u32, seed: u64) -> Result<String, String> {
    if points < 2 {
        return Err("need at least two points".into());
    }
    let cfg = HarqConfig::capped(tau_wait_ms, max_retx);
    cfg.validate().map_err(|e| e.to_string())?;
    let mut curves = LatencyCurves { bler: vec![], analytic_ms: vec![], capped_ms: vec![], monte_carlo_ms: vec![] };
    for i in 0..points {
        let bler = 0.95 * f64::from(i) / f64::from(points - 1);
        let mut rng = stream_rng(seed, 0, u64::from(i), StreamKind::Harq);
        let mut total = 0.0;
        for _ in 0..blocks {
            total += run_block(1.0 - bler, &cfg, &mut rng).map_err(|e| e.to_string())?.latency_ms;
        }
        curves.bler.push(bler);
        curves.analytic_ms.push(analytic_latency(bler, tau_wait_ms).map_err(|e| e.to_string())?);
        curves.capped_ms.push(capped_mean_latency(bler, tau_wait_ms, max_retx));
        curves.monte_carlo_ms.push(if blocks == 0 { f64::NAN } else { total / f64::from(blocks) });
    }
    Ok(serde_json::to_string(&curves).expect("curves serialize"))
}

/// Closed-loop run of one strategy at a target band-wide SINR (or no interference for `none`).
pub fn run_point_json(config_json: &str, strategy_name: &str, target_sinr_db: f64) -> Result<String, String> {
    let sc = scenario(config_json)?;
    let s = strategy(strategy_name)?;
    let m = if s == Strategy::None {
        run_point_at_power(&sc, s, 0.0)
    } else {
        run_point(&sc, s, target_sinr_db)
    }
    .map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&m).expect("metrics serialize"))
}

#[wasm_bindgen(js_name = gridMap)]
pub fn grid_map(config_json: &str, strategy: &str) -> Result<String, JsError> {
    grid_map_json(config_json, strategy).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = latencyCurves)]
pub fn latency_curves(tau_wait_ms: f64, max_retx: u32, points: u32, blocks: u32, seed: u32) -> Result<String, JsError> {
    latency_curves_json(tau_wait_ms, max_retx, points, blocks, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = runPoint)]
pub fn run_point_js(config_json: &str, strategy: &str, target_sinr_db: f64) -> Result<String, JsError> {
    run_point_json(config_json, strategy, target_sinr_db).map_err(|e| JsError::new(&e))
}
