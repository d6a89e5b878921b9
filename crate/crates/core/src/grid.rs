//! OFDM resource-element grid for one downlink subframe.
//!
//! The grid is laid out symbol-major: resource element `(subcarrier, symbol)`
//! lives at flat index `symbol * num_subcarriers + subcarrier`. Pilot placement
//! follows a single-port cell-specific reference signal pattern: on each pilot
//! symbol, every `pilot_subcarrier_period`-th subcarrier starting at that
//! symbol's shift carries a pilot.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry of one subframe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub num_rb: usize,
    pub subcarriers_per_rb: usize,
    pub symbols_per_subframe: usize,
    pub pilot_symbol_indices: Vec<usize>,
    pub pilot_subcarrier_period: usize,
    /// Frequency offset of the pilot comb, one entry per pilot symbol.
    pub pilot_subcarrier_shifts: Vec<usize>,
    pub control_symbol_count: usize,
}

impl Default for GridConfig {
    /// 10 MHz carrier, normal cyclic prefix, antenna port 0 pilots.
    fn default() -> Self {
        Self {
            num_rb: 50,
            subcarriers_per_rb: 12,
            symbols_per_subframe: 14,
            pilot_symbol_indices: vec![0, 4, 7, 11],
            pilot_subcarrier_period: 6,
            pilot_subcarrier_shifts: vec![0, 3, 0, 3],
            control_symbol_count: 0,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_rb == 0 {
            return Err(Error::config("grid.num_rb", "must be positive"));
        }
        if self.subcarriers_per_rb == 0 {
            return Err(Error::config("grid.subcarriers_per_rb", "must be positive"));
        }
        if self.symbols_per_subframe == 0 {
            return Err(Error::config("grid.symbols_per_subframe", "must be positive"));
        }
        if self.pilot_subcarrier_period == 0 {
            return Err(Error::config("grid.pilot_subcarrier_period", "must be positive"));
        }
        if self.pilot_symbol_indices.len() != self.pilot_subcarrier_shifts.len() {
            return Err(Error::config(
                "grid.pilot_subcarrier_shifts",
                format!(
                    "expected one shift per pilot symbol ({}), got {}",
                    self.pilot_symbol_indices.len(),
                    self.pilot_subcarrier_shifts.len()
                ),
            ));
        }
        for (i, &sym) in self.pilot_symbol_indices.iter().enumerate() {
            if sym >= self.symbols_per_subframe {
                return Err(Error::config(
                    "grid.pilot_symbol_indices",
                    format!("symbol {sym} outside [0, {})", self.symbols_per_subframe),
                ));
            }
            if self.pilot_symbol_indices[..i].contains(&sym) {
                return Err(Error::config(
                    "grid.pilot_symbol_indices",
                    format!("symbol {sym} listed twice"),
                ));
            }
        }
        if let Some(&s) = self
            .pilot_subcarrier_shifts
            .iter()
            .find(|&&s| s >= self.pilot_subcarrier_period)
        {
            return Err(Error::config(
                "grid.pilot_subcarrier_shifts",
                format!("shift {s} must be below period {}", self.pilot_subcarrier_period),
            ));
        }
        if self.control_symbol_count > self.symbols_per_subframe {
            return Err(Error::config(
                "grid.control_symbol_count",
                "exceeds the number of symbols per subframe",
            ));
        }
        Ok(())
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_rb * self.subcarriers_per_rb
    }

    pub fn total_res(&self) -> usize {
        self.num_subcarriers() * self.symbols_per_subframe
    }

    /// Pilot comb shift for `symbol`, if it is a pilot symbol.
    pub fn pilot_shift(&self, symbol: usize) -> Option<usize> {
        self.pilot_symbol_indices
            .iter()
            .position(|&s| s == symbol)
            .map(|i| self.pilot_subcarrier_shifts[i])
    }

    pub fn is_pilot_symbol(&self, symbol: usize) -> bool {
        self.pilot_symbol_indices.contains(&symbol)
    }

    pub fn is_pilot(&self, subcarrier: usize, symbol: usize) -> bool {
        self.pilot_shift(symbol)
            .is_some_and(|shift| subcarrier % self.pilot_subcarrier_period == shift)
    }

    pub fn classify(&self, subcarrier: usize, symbol: usize) -> ReKind {
        if self.is_pilot(subcarrier, symbol) {
            ReKind::Pilot
        } else if symbol < self.control_symbol_count {
            ReKind::Control
        } else {
            ReKind::Data
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReKind {
    Pilot,
    Data,
    Control,
}

impl ReKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReKind::Pilot => "pilot",
            ReKind::Data => "data",
            ReKind::Control => "control",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourceElement {
    pub subcarrier: usize,
    pub symbol: usize,
    pub kind: ReKind,
}

/// One subframe of resource elements with per-RE linear powers.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    config: GridConfig,
    kinds: Vec<ReKind>,
    pub(crate) signal_power: Vec<f64>,
    pub(crate) interference_power: Vec<f64>,
    noise_power: f64,
}

/// Builds a grid with unit signal power, no interference and unit noise power.
pub fn build_grid(config: GridConfig) -> Result<ResourceGrid> {
    config.validate()?;
    let n_sc = config.num_subcarriers();
    let kinds: Vec<ReKind> = (0..config.symbols_per_subframe)
        .flat_map(|sym| (0..n_sc).map(move |sc| (sc, sym)))
        .map(|(sc, sym)| config.classify(sc, sym))
        .collect();
    let n = kinds.len();
    Ok(ResourceGrid {
        config,
        kinds,
        signal_power: vec![1.0; n],
        interference_power: vec![0.0; n],
        noise_power: 1.0,
    })
}

impl ResourceGrid {
    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.config.num_subcarriers()
    }

    pub fn index(&self, subcarrier: usize, symbol: usize) -> usize {
        symbol * self.num_subcarriers() + subcarrier
    }

    /// Inverse of [`ResourceGrid::index`]: `(subcarrier, symbol)`.
    pub fn position(&self, index: usize) -> (usize, usize) {
        let n_sc = self.num_subcarriers();
        (index % n_sc, index / n_sc)
    }

    pub fn kind(&self, index: usize) -> ReKind {
        self.kinds[index]
    }

    pub fn kinds(&self) -> &[ReKind] {
        &self.kinds
    }

    pub fn element(&self, index: usize) -> ResourceElement {
        let (subcarrier, symbol) = self.position(index);
        ResourceElement {
            subcarrier,
            symbol,
            kind: self.kinds[index],
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = ResourceElement> + '_ {
        (0..self.len()).map(|i| self.element(i))
    }

    fn indices_of(&self, kind: ReKind) -> Vec<usize> {
        self.kinds
            .iter()
            .enumerate()
            .filter_map(|(i, &k)| (k == kind).then_some(i))
            .collect()
    }

    pub fn pilot_res(&self) -> Vec<usize> {
        self.indices_of(ReKind::Pilot)
    }

    pub fn data_res(&self) -> Vec<usize> {
        self.indices_of(ReKind::Data)
    }

    pub fn control_res(&self) -> Vec<usize> {
        self.indices_of(ReKind::Control)
    }

    pub fn signal_power(&self) -> &[f64] {
        &self.signal_power
    }

    pub fn interference_power(&self) -> &[f64] {
        &self.interference_power
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn with_noise_power(mut self, noise_power: f64) -> Result<Self> {
        if !(noise_power.is_finite() && noise_power > 0.0) {
            return Err(Error::config("noise_power", "must be finite and positive"));
        }
        self.noise_power = noise_power;
        Ok(self)
    }

    /// Scales every RE's transmitted signal power.
    pub fn with_signal_power(mut self, power: f64) -> Result<Self> {
        if !(power.is_finite() && power >= 0.0) {
            return Err(Error::config("signal_power", "must be finite and non-negative"));
        }
        self.signal_power.iter_mut().for_each(|p| *p = power);
        Ok(self)
    }

    pub fn total_interference(&self) -> f64 {
        self.interference_power.iter().sum()
    }

    /// Layout dump with columns `subcarrier,symbol,kind`.
    pub fn layout_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 12);
        out.push_str("subcarrier,symbol,kind\n");
        for re in self.elements() {
            out.push_str(&format!("{},{},{}\n", re.subcarrier, re.symbol, re.kind.as_str()));
        }
        out
    }
}
