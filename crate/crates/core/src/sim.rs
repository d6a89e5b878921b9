//! Closed-loop Monte Carlo driver.
//!
//! Per subframe: realize the channel, estimate SINR on the pilots when a report
//! is due, pick the MCS from the report in force, evaluate the effective SINR
//! on the data REs, draw the block outcome and advance pending HARQ
//! retransmissions. Sweep points are parameterized by the band-wide measured
//! SINR (total received signal over total interference plus noise), the
//! quantity a spectrum analyzer reports, with the interference power solved
//! per strategy.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize};

use crate::channel::{ChannelConfig, FadingChannel};
use crate::csi::{lin_to_db, CqiReport, FeedbackConfig, FeedbackLoop, ResourceSet};
use crate::error::{Error, Result};
use crate::grid::{build_grid, GridConfig, ResourceGrid};
use crate::harq::{analytic_latency, capped_mean_latency, HarqConfig, HarqMode, HarqRecord};
use crate::interference::{apply_interference, InterferenceProfile, Strategy};
use crate::linkadapt::{block_error_prob, delivered_bits, select_mcs, LinkAdaptConfig, McsTable};
use crate::metrics::{bler_ci, CqiHistogram, RunningStats, StreamingStats};
use crate::seeding::{stream_rng, StreamKind};

/// Calibration must land within this distance of the target.
pub const CALIBRATION_TOLERANCE_DB: f64 = 0.1;

/// Interference settings shared by every strategy of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterferenceSettings {
    #[serde(deserialize_with = "one_or_many")]
    pub strategy: Vec<Strategy>,
    pub tone_spacing: usize,
    pub tone_offset: usize,
    pub duty_cycle: f64,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Strategy>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(Strategy),
        Many(Vec<Strategy>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(s) => vec![s],
        OneOrMany::Many(v) => v,
    })
}

impl Default for InterferenceSettings {
    fn default() -> Self {
        let p = InterferenceProfile::default();
        Self {
            strategy: vec![Strategy::PilotTones, Strategy::FreqDomainNpi, Strategy::Barrage],
            tone_spacing: p.tone_spacing,
            tone_offset: p.tone_offset,
            duty_cycle: p.duty_cycle,
        }
    }
}

impl InterferenceSettings {
    pub fn profile(&self, strategy: Strategy, total_power: f64) -> InterferenceProfile {
        InterferenceProfile {
            strategy,
            total_power,
            tone_spacing: self.tone_spacing,
            tone_offset: self.tone_offset,
            duty_cycle: self.duty_cycle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridConfig,
    pub channel: ChannelConfig,
    pub interference: InterferenceSettings,
    pub csi: FeedbackConfig,
    pub linkadapt: LinkAdaptConfig,
    pub harq: HarqConfig,
    /// Target band-wide SINR points (dB).
    pub sweep_sinr_db: Vec<f64>,
    pub subframes_per_point: u64,
    pub master_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            channel: ChannelConfig::default(),
            interference: InterferenceSettings::default(),
            csi: FeedbackConfig::default(),
            linkadapt: LinkAdaptConfig::default(),
            harq: HarqConfig::default(),
            sweep_sinr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            subframes_per_point: 100_000,
            master_seed: 2019,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.channel.validate()?;
        self.csi.validate()?;
        self.linkadapt.validate()?;
        self.harq.validate()?;
        self.interference.profile(Strategy::None, 0.0).validate()?;
        if self.interference.strategy.is_empty() {
            return Err(Error::config("interference.strategy", "at least one strategy is required"));
        }
        if self.sweep_sinr_db.is_empty() {
            return Err(Error::config("sweep_sinr_db", "sweep list is empty"));
        }
        if self.sweep_sinr_db.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("sweep_sinr_db", "points must be finite"));
        }
        if self.subframes_per_point == 0 {
            return Err(Error::config("subframes_per_point", "must be at least 1"));
        }
        if self.harq.tau_wait_ms < self.subframe_ms() {
            return Err(Error::config("harq.tau_wait_ms", "must be at least one subframe"));
        }
        Ok(())
    }

    fn subframe_ms(&self) -> f64 {
        self.channel.subframe_duration_s * 1e3
    }

    /// HARQ wait rounded to whole subframes.
    pub fn wait_subframes(&self) -> u64 {
        ((self.harq.tau_wait_ms / self.subframe_ms()).round() as u64).max(1)
    }

    /// Grid with noise set from the channel SNR and no interference.
    pub fn base_grid(&self) -> Result<ResourceGrid> {
        build_grid(self.grid.clone())?.with_noise_power(self.channel.noise_power())
    }

    pub fn mcs_table(&self) -> Result<McsTable> {
        self.linkadapt.table(&self.csi.mapping())
    }

    /// Throughput with every subframe carrying a top-MCS block that decodes first time.
    pub fn throughput_ceiling_bps(&self) -> Result<f64> {
        let grid = self.base_grid()?;
        let bits = delivered_bits(self.mcs_table()?.top(), grid.data_res().len(), true);
        Ok(bits * self.linkadapt.overhead_factor / self.channel.subframe_duration_s)
    }
}

/// Interference power that produces a requested band-wide SINR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub strategy: Strategy,
    pub target_sinr_db: f64,
    pub total_power: f64,
    pub per_targeted_re_power: f64,
    pub targeted_res: usize,
    pub tone_count: usize,
    /// Band-wide SINR predicted at `total_power` by the calibration average.
    pub achieved_sinr_db: f64,
}

/// Long-run total received signal power. Tap powers are normalized, so every
/// profile has unit mean power gain on every RE.
fn mean_received_signal(grid: &ResourceGrid) -> f64 {
    grid.signal_power().iter().sum()
}

/// Solves for the total interference power of `strategy` that brings the mean
/// band-wide SINR to `target_sinr_db`, by bisection on the power.
pub fn calibrate_interference_power(
    scenario: &ScenarioConfig,
    strategy: Strategy,
    target_sinr_db: f64,
) -> Result<Calibration> {
    scenario.validate()?;
    let grid = scenario.base_grid()?;
    let signal = mean_received_signal(&grid);
    let noise_total = grid.noise_power() * grid.len() as f64;
    let measure = |power: f64| lin_to_db(signal / (power + noise_total));
    let max_db = measure(0.0);

    let probe = scenario.interference.profile(strategy, 0.0);
    let targeted = probe.targeted_re_count(&grid)?;
    let tone_count = probe.tone_count(&grid)?;
    let done = |total_power: f64| Calibration {
        strategy,
        target_sinr_db,
        total_power,
        per_targeted_re_power: if targeted == 0 { 0.0 } else { total_power / targeted as f64 },
        targeted_res: targeted,
        tone_count,
        achieved_sinr_db: measure(total_power),
    };

    if strategy == Strategy::None {
        return Ok(done(0.0));
    }
    if targeted == 0 {
        return Err(Error::config(
            "interference.strategy",
            format!("strategy `{strategy}` targets no resource elements on this grid"),
        ));
    }
    if target_sinr_db > max_db + 1e-9 {
        return Err(Error::Unreachable { target_db: target_sinr_db, max_db });
    }
    if target_sinr_db >= max_db {
        return Ok(done(0.0));
    }

    let mut hi = noise_total.max(1e-12);
    while measure(hi) > target_sinr_db {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Unreachable { target_db: target_sinr_db, max_db });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if measure(mid) > target_sinr_db {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    let cal = done(0.5 * (lo + hi));
    debug_assert!((cal.achieved_sinr_db - target_sinr_db).abs() < CALIBRATION_TOLERANCE_DB);
    Ok(cal)
}

/// Total power each strategy spends to put `per_tone_power` on every subcarrier it targets.
pub fn equal_density_budgets(scenario: &ScenarioConfig, per_tone_power: f64) -> Result<Vec<(Strategy, f64)>> {
    let grid = scenario.base_grid()?;
    scenario
        .interference
        .strategy
        .iter()
        .map(|&s| {
            let p = scenario.interference.profile(s, 0.0).equal_density_power(&grid, per_tone_power)?;
            Ok((s, p))
        })
        .collect()
}

/// Statistics of one (strategy, operating point) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics {
    pub strategy: Strategy,
    pub target_sinr_db: Option<f64>,
    pub interference_power: f64,
    /// Mean band-wide SINR measured during the run.
    pub actual_sinr_db: f64,
    /// Mean effective SINR of the data allocation (what the decoder sees).
    pub mean_data_sinr_db: f64,
    /// Error rate over every transmission attempt.
    pub bler: f64,
    pub bler_ci95: (f64, f64),
    pub throughput_bps: f64,
    pub throughput_ceiling_bps: f64,
    pub median_cqi: f64,
    pub median_estimated_sinr_db: f64,
    pub mean_retx_latency_ms: f64,
    pub mean_n_retx: f64,
    pub residual_drop_rate: f64,
    /// Unbounded-model latency at the measured BLER (infinite when BLER is 1).
    pub analytic_latency_ms: f64,
    /// Capped-model latency at the measured BLER.
    pub capped_latency_ms: f64,
    pub subframes: u64,
    pub blocks: u64,
    pub transmissions: u64,
}

impl PointMetrics {
    pub fn throughput_mbps(&self) -> f64 {
        self.throughput_bps / 1e6
    }

    /// Pilot-based estimate minus measured SINR (dB).
    pub fn estimation_gap_db(&self) -> f64 {
        self.median_estimated_sinr_db - self.actual_sinr_db
    }
}

#[derive(Debug, Clone, Copy)]
struct PendingBlock {
    due: u64,
    mcs: u8,
    n_retx: u32,
    success_prob: f64,
}

#[derive(Debug, Default)]
struct Accumulator {
    wideband: RunningStats,
    data_sinr: RunningStats,
    estimates: StreamingStats,
    cqi: CqiHistogram,
    latency: RunningStats,
    retx: RunningStats,
    transmissions: u64,
    errors: u64,
    drops: u64,
    bits: f64,
}

impl Accumulator {
    fn finish(&mut self, record: &HarqRecord, bits: f64) {
        self.latency.update(record.latency_ms);
        self.retx.update(f64::from(record.n_retx));
        if record.delivered {
            self.bits += bits;
        } else {
            self.drops += 1;
        }
    }
}

fn stream_key(strategy: Strategy, operating_point: f64) -> u64 {
    ((strategy as u64) << 56) ^ operating_point.to_bits()
}

/// Calibrates `strategy` to `target_sinr_db` and runs the closed loop there.
pub fn run_point(scenario: &ScenarioConfig, strategy: Strategy, target_sinr_db: f64) -> Result<PointMetrics> {
    let cal = calibrate_interference_power(scenario, strategy, target_sinr_db)?;
    let mut m = simulate(scenario, strategy, cal.total_power, stream_key(strategy, target_sinr_db))?;
    m.target_sinr_db = Some(target_sinr_db);
    Ok(m)
}

/// Runs the closed loop at a fixed total interference power.
pub fn run_point_at_power(scenario: &ScenarioConfig, strategy: Strategy, total_power: f64) -> Result<PointMetrics> {
    simulate(scenario, strategy, total_power, stream_key(strategy, -total_power))
}

fn simulate(scenario: &ScenarioConfig, strategy: Strategy, total_power: f64, key: u64) -> Result<PointMetrics> {
    scenario.validate()?;
    let grid = apply_interference(&scenario.base_grid()?, &scenario.interference.profile(strategy, total_power))?;
    let pilots = ResourceSet::new(&grid, &grid.pilot_res());
    let data = ResourceSet::new(&grid, &grid.data_res());
    let everything = ResourceSet::new(&grid, &(0..grid.len()).collect::<Vec<_>>());
    let impairment = everything.impairment();
    if data.is_empty() {
        return Err(Error::config("grid", "grid carries no data REs"));
    }
    if pilots.is_empty() {
        return Err(Error::config("grid.pilot_symbol_indices", "grid carries no pilot REs"));
    }
    let table = scenario.mcs_table()?;
    let mapping = scenario.csi.mapping();
    let beta = scenario.csi.eesm_beta;
    let harq = &scenario.harq;
    let limit = harq.retx_limit();
    let wait = scenario.wait_subframes();
    let n = scenario.subframes_per_point;
    // unbounded HARQ may never finish a block whose BLER rounds to 1
    let horizon = match harq.mode {
        HarqMode::Capped => u64::MAX,
        HarqMode::Unbounded => n.saturating_mul(2),
    };

    // Every point replays the same fading path so that sweep points differ
    // only in interference and decoding draws.
    let mut channel = FadingChannel::with_stream(scenario.channel.clone(), grid.num_subcarriers(), scenario.master_seed, 0)?;
    let mut rng = stream_rng(scenario.master_seed, scenario.channel.seed, key, StreamKind::Decoding);
    let mut feedback = FeedbackLoop::new(scenario.csi.clone())?;
    let mut pending: VecDeque<PendingBlock> = VecDeque::new();
    let mut acc = Accumulator::default();
    let data_len = data.len();

    let mut s = 0u64;
    while s < n || !pending.is_empty() {
        if s >= horizon {
            for b in pending.drain(..) {
                let record = HarqRecord {
                    n_retx: b.n_retx,
                    latency_ms: f64::from(b.n_retx) * harq.tau_wait_ms,
                    delivered: false,
                    success_prob_used: b.success_prob,
                };
                acc.finish(&record, 0.0);
            }
            break;
        }
        let real = channel.next_realization();
        let data_sinr_db = data.eesm_db(&real, beta).expect("data set is non-empty");

        let mut attempts: Vec<PendingBlock> = Vec::new();
        if s < n {
            acc.wideband.update(everything.received_signal(&real) / impairment);
            acc.data_sinr.update(data_sinr_db);
            if scenario.csi.is_report_subframe(s) {
                let est = pilots.eesm_db(&real, beta).expect("pilot set is non-empty");
                let report = CqiReport::new(&mapping, est, s);
                acc.estimates.update(est);
                acc.cqi.update(report.cqi);
                feedback.submit(report);
            }
            let mcs = select_mcs(feedback.active_cqi(s), &table).index;
            attempts.push(PendingBlock { due: s, mcs, n_retx: 0, success_prob: 1.0 });
        }
        while pending.front().is_some_and(|b| b.due == s) {
            attempts.extend(pending.pop_front());
        }

        for mut block in attempts {
            let entry = table.entry(block.mcs);
            let p_success = 1.0 - block_error_prob(entry, data_sinr_db);
            block.success_prob = p_success;
            acc.transmissions += 1;
            let success = rng.random::<f64>() < p_success;
            if success || limit.is_some_and(|m| block.n_retx >= m) {
                if !success {
                    acc.errors += 1;
                }
                let record = HarqRecord {
                    n_retx: block.n_retx,
                    latency_ms: f64::from(block.n_retx) * harq.tau_wait_ms,
                    delivered: success,
                    success_prob_used: p_success,
                };
                acc.finish(&record, delivered_bits(entry, data_len, success));
            } else {
                acc.errors += 1;
                block.n_retx += 1;
                block.due = s + wait;
                pending.push_back(block);
            }
        }
        s += 1;
    }

    let bler = acc.errors as f64 / acc.transmissions as f64;
    let ceiling = scenario.throughput_ceiling_bps()?;
    let duration_s = n as f64 * scenario.channel.subframe_duration_s;
    let blocks = acc.retx.count;
    Ok(PointMetrics {
        strategy,
        target_sinr_db: None,
        interference_power: total_power,
        actual_sinr_db: lin_to_db(acc.wideband.mean),
        mean_data_sinr_db: acc.data_sinr.mean,
        bler,
        bler_ci95: bler_ci(acc.errors, acc.transmissions, 0.95),
        throughput_bps: acc.bits * scenario.linkadapt.overhead_factor / duration_s,
        throughput_ceiling_bps: ceiling,
        median_cqi: acc.cqi.median().unwrap_or(f64::NAN),
        median_estimated_sinr_db: acc.estimates.median().unwrap_or(f64::NAN),
        mean_retx_latency_ms: acc.latency.mean,
        mean_n_retx: acc.retx.mean,
        residual_drop_rate: acc.drops as f64 / blocks as f64,
        analytic_latency_ms: analytic_latency(bler, harq.tau_wait_ms).unwrap_or(f64::INFINITY),
        capped_latency_ms: capped_mean_latency(bler, harq.tau_wait_ms, harq.max_retx),
        subframes: n,
        blocks,
        transmissions: acc.transmissions,
    })
}

fn run_jobs<T, F>(jobs: Vec<T>, f: F) -> Result<Vec<PointMetrics>>
where
    T: Send + Sync,
    F: Fn(&T) -> Result<PointMetrics> + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        jobs.iter().map(f).collect()
    }
}

/// One row per (strategy, target SINR), strategies outermost.
pub fn run_sweep(scenario: &ScenarioConfig) -> Result<Vec<PointMetrics>> {
    scenario.validate()?;
    let jobs: Vec<(Strategy, f64)> = scenario
        .interference
        .strategy
        .iter()
        .flat_map(|&s| scenario.sweep_sinr_db.iter().map(move |&t| (s, t)))
        .collect();
    run_jobs(jobs, |&(s, t)| run_point(scenario, s, t))
}

/// One row per (strategy, total interference power).
pub fn run_power_sweep(scenario: &ScenarioConfig, powers: &[f64]) -> Result<Vec<PointMetrics>> {
    scenario.validate()?;
    let jobs: Vec<(Strategy, f64)> = scenario
        .interference
        .strategy
        .iter()
        .flat_map(|&s| powers.iter().map(move |&p| (s, p)))
        .collect();
    run_jobs(jobs, |&(s, p)| run_point_at_power(scenario, s, p))
}
