//! Pilot-aided channel quality estimation and the periodic CQI feedback loop.
//!
//! The receiver reduces per-RE SINRs to one wideband figure with exponential
//! effective SINR mapping (EESM). The CQI estimate looks at pilot REs only; the
//! SINR that actually governs decoding is the same reduction taken over the
//! allocated data REs.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::channel::{re_sinr, ChannelRealization};
use crate::error::{Error, Result};
use crate::grid::ResourceGrid;

pub const MAX_CQI: u8 = 15;

pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `-β ln(mean(exp(-γ/β)))` over linear SINRs, evaluated around the minimum so
/// that very large SINRs do not underflow.
pub fn eesm<I>(sinrs: I, beta: f64) -> Option<f64>
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let it = sinrs.into_iter();
    let min = it.clone().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return None;
    }
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), g| (s + (-(g - min) / beta).exp(), n + 1));
    Some(min - beta * (sum / n as f64).ln())
}

fn effective_over(grid: &ResourceGrid, real: &ChannelRealization, res: &[usize], beta: f64) -> Option<f64> {
    eesm(res.iter().map(|&re| re_sinr(grid, real, re)), beta)
}

/// Wideband SINR estimate (dB) from the pilot REs alone.
pub fn pilot_sinr_estimate(grid: &ResourceGrid, real: &ChannelRealization, beta: f64) -> Result<f64> {
    let pilots = grid.pilot_res();
    pilot_sinr_estimate_over(grid, real, &pilots, beta)
}

/// [`pilot_sinr_estimate`] with a precomputed pilot index list.
pub fn pilot_sinr_estimate_over(
    grid: &ResourceGrid,
    real: &ChannelRealization,
    pilots: &[usize],
    beta: f64,
) -> Result<f64> {
    effective_over(grid, real, pilots, beta)
        .map(lin_to_db)
        .ok_or_else(|| Error::config("grid.pilot_symbol_indices", "grid carries no pilot REs"))
}

/// Effective SINR (dB) over the data REs a transport block occupies.
pub fn data_sinr_effective(
    grid: &ResourceGrid,
    real: &ChannelRealization,
    data_res: &[usize],
    beta: f64,
) -> Result<f64> {
    effective_over(grid, real, data_res, beta)
        .map(lin_to_db)
        .ok_or_else(|| Error::config("allocation", "empty data RE allocation"))
}

/// A set of REs collapsed into groups that share a subcarrier, signal power and
/// interference power. Within a subframe such REs have identical SINR, so
/// aggregates over the set need one term per group instead of one per RE.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceSet {
    /// `(subcarrier, signal power, interference + noise, multiplicity)`
    groups: Vec<(usize, f64, f64, f64)>,
    len: usize,
}

impl ResourceSet {
    pub fn new(grid: &ResourceGrid, res: &[usize]) -> Self {
        let mut map: BTreeMap<(usize, u64, u64), f64> = BTreeMap::new();
        for &re in res {
            let (sc, _) = grid.position(re);
            let key = (sc, grid.signal_power[re].to_bits(), grid.interference_power[re].to_bits());
            *map.entry(key).or_insert(0.0) += 1.0;
        }
        let noise = grid.noise_power();
        let groups = map
            .into_iter()
            .map(|((sc, s, i), n)| (sc, f64::from_bits(s), f64::from_bits(i) + noise, n))
            .collect();
        Self { groups, len: res.len() }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    /// Linear EESM over the set; `None` when empty.
    pub fn eesm(&self, real: &ChannelRealization, beta: f64) -> Option<f64> {
        let sinr = |&(sc, s, imp, _): &(usize, f64, f64, f64)| s * real.gain[sc] / imp;
        let min = self.groups.iter().map(sinr).fold(f64::INFINITY, f64::min);
        if !min.is_finite() {
            return None;
        }
        let sum: f64 = self
            .groups
            .iter()
            .map(|g| g.3 * (-(sinr(g) - min) / beta).exp())
            .sum();
        Some(min - beta * (sum / self.len as f64).ln())
    }

    pub fn eesm_db(&self, real: &ChannelRealization, beta: f64) -> Option<f64> {
        self.eesm(real, beta).map(lin_to_db)
    }

    /// Total received signal power over the set.
    pub fn received_signal(&self, real: &ChannelRealization) -> f64 {
        self.groups.iter().map(|&(sc, s, _, n)| n * s * real.gain[sc]).sum()
    }

    /// Total interference plus noise power over the set.
    pub fn impairment(&self) -> f64 {
        self.groups.iter().map(|&(_, _, imp, n)| n * imp).sum()
    }
}

/// Affine SINR-to-CQI law: `SINR_CQI(dB) = slope * CQI + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CqiMapping {
    pub slope_db: f64,
    pub intercept_db: f64,
}

impl Default for CqiMapping {
    fn default() -> Self {
        Self {
            slope_db: 2.11,
            intercept_db: -9.0,
        }
    }
}

impl CqiMapping {
    pub fn cqi_to_sinr(&self, cqi: u8) -> f64 {
        self.slope_db * f64::from(cqi) + self.intercept_db
    }

    /// Largest CQI whose mapped SINR does not exceed `sinr_db`, clamped to `[0, 15]`.
    /// Anything below the CQI 1 level reports 0 (outage).
    pub fn sinr_to_cqi(&self, sinr_db: f64) -> u8 {
        if sinr_db.is_nan() {
            return 0;
        }
        let raw = ((sinr_db - self.intercept_db) / self.slope_db).floor();
        let mut cqi = raw.clamp(0.0, f64::from(MAX_CQI)) as u8;
        // floor() can land one level off when sinr_db sits exactly on a level
        if cqi < MAX_CQI && self.cqi_to_sinr(cqi + 1) <= sinr_db {
            cqi += 1;
        }
        if cqi > 0 && self.cqi_to_sinr(cqi) > sinr_db {
            cqi -= 1;
        }
        cqi
    }
}

pub fn cqi_to_sinr(cqi: u8) -> f64 {
    CqiMapping::default().cqi_to_sinr(cqi)
}

pub fn sinr_to_cqi(sinr_db: f64) -> u8 {
    CqiMapping::default().sinr_to_cqi(sinr_db)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CqiReport {
    pub cqi: u8,
    pub generated_subframe: u64,
    pub estimated_sinr_db: f64,
}

impl CqiReport {
    pub fn new(mapping: &CqiMapping, estimated_sinr_db: f64, generated_subframe: u64) -> Self {
        Self {
            cqi: mapping.sinr_to_cqi(estimated_sinr_db),
            generated_subframe,
            estimated_sinr_db,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    Wideband,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeedbackConfig {
    #[serde(rename = "csi_period_sf")]
    pub period_subframes: u64,
    /// Subframes between a report's generation and its first use by the transmitter.
    #[serde(rename = "csi_delay_sf")]
    pub delay_subframes: u64,
    pub mode: FeedbackMode,
    /// CQI the transmitter assumes before the first report arrives.
    pub initial_cqi: u8,
    pub eesm_beta: f64,
    pub cqi_slope_db: f64,
    pub cqi_intercept_db: f64,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        let map = CqiMapping::default();
        Self {
            period_subframes: 10,
            delay_subframes: 4,
            mode: FeedbackMode::Wideband,
            initial_cqi: 7,
            eesm_beta: 1.0,
            cqi_slope_db: map.slope_db,
            cqi_intercept_db: map.intercept_db,
        }
    }
}

impl FeedbackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.period_subframes == 0 {
            return Err(Error::config("csi.csi_period_sf", "must be at least 1"));
        }
        if self.initial_cqi > MAX_CQI {
            return Err(Error::config("csi.initial_cqi", "must lie in [0, 15]"));
        }
        if !(self.eesm_beta.is_finite() && self.eesm_beta > 0.0) {
            return Err(Error::config("csi.eesm_beta", "must be positive"));
        }
        if !(self.cqi_slope_db.is_finite() && self.cqi_slope_db > 0.0) {
            return Err(Error::config("csi.cqi_slope_db", "must be positive"));
        }
        if !self.cqi_intercept_db.is_finite() {
            return Err(Error::config("csi.cqi_intercept_db", "must be finite"));
        }
        Ok(())
    }

    pub fn mapping(&self) -> CqiMapping {
        CqiMapping {
            slope_db: self.cqi_slope_db,
            intercept_db: self.cqi_intercept_db,
        }
    }

    pub fn is_report_subframe(&self, subframe: u64) -> bool {
        subframe.is_multiple_of(self.period_subframes)
    }
}

/// Generation subframe of the report the transmitter uses at `subframe`:
/// the newest `t' <= subframe - delay` with `t' ≡ 0 (mod period)`.
pub fn feedback_schedule(config: &FeedbackConfig, subframe: u64) -> Option<u64> {
    let latest = subframe.checked_sub(config.delay_subframes)?;
    Some(latest - latest % config.period_subframes)
}

/// Transmitter-side view of the report stream.
#[derive(Debug, Clone)]
pub struct FeedbackLoop {
    config: FeedbackConfig,
    reports: VecDeque<CqiReport>,
}

impl FeedbackLoop {
    pub fn new(config: FeedbackConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            reports: VecDeque::new(),
        })
    }

    pub fn submit(&mut self, report: CqiReport) {
        self.reports.push_back(report);
    }

    /// Report in force at `subframe`, if one has arrived.
    pub fn active_report(&mut self, subframe: u64) -> Option<CqiReport> {
        let generated = feedback_schedule(&self.config, subframe)?;
        // reports older than the one in force can never be used again
        while self.reports.len() > 1 && self.reports[1].generated_subframe <= generated {
            self.reports.pop_front();
        }
        self.reports
            .front()
            .filter(|r| r.generated_subframe <= generated)
            .copied()
    }

    pub fn active_cqi(&mut self, subframe: u64) -> u8 {
        self.active_report(subframe)
            .map_or(self.config.initial_cqi, |r| r.cqi)
    }
}
