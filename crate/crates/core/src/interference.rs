//! Multi-tone interference strategies realized as per-RE power maps.
//!
//! Every strategy spreads its total power equally over the REs it targets.
//! Non-pilot strategies never touch a pilot RE, and the pilot-tone strategy
//! never touches a non-pilot RE.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridConfig, ReKind, ResourceGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "none")]
    None,
    /// Pilot interference: tones on pilot REs only.
    #[serde(rename = "pi")]
    PilotTones,
    /// Frequency-domain non-pilot interference: a comb of tones between pilot subcarriers.
    #[serde(rename = "npi_fd")]
    FreqDomainNpi,
    /// Time-domain non-pilot interference: pulses on symbols between pilot symbols.
    #[serde(rename = "npi_td")]
    TimeDomainNpi,
    #[serde(rename = "barrage")]
    Barrage,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::None,
        Strategy::PilotTones,
        Strategy::FreqDomainNpi,
        Strategy::TimeDomainNpi,
        Strategy::Barrage,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::PilotTones => "pi",
            Strategy::FreqDomainNpi => "npi_fd",
            Strategy::TimeDomainNpi => "npi_td",
            Strategy::Barrage => "barrage",
        }
    }

    pub fn is_non_pilot(self) -> bool {
        matches!(self, Strategy::FreqDomainNpi | Strategy::TimeDomainNpi)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| {
                Error::config(
                    "interference.strategy",
                    format!("unknown strategy `{s}` (expected pi, npi_fd, npi_td, barrage or none)"),
                )
            })
    }
}

/// Default comb for frequency-domain NPI: every third subcarrier, offset by one.
///
/// With the default pilot layout, pilots occupy subcarriers congruent to 0 mod 3,
/// so this comb lands strictly between them and puts two tones per pilot in each
/// pilot symbol.
pub const DEFAULT_TONE_SPACING: usize = 3;
pub const DEFAULT_TONE_OFFSET: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterferenceProfile {
    pub strategy: Strategy,
    /// Linear power summed over every targeted RE, relative to one RE of signal.
    pub total_power: f64,
    pub tone_spacing: usize,
    pub tone_offset: usize,
    /// Fraction of non-pilot symbols pulsed by time-domain NPI.
    pub duty_cycle: f64,
}

impl Default for InterferenceProfile {
    fn default() -> Self {
        Self {
            strategy: Strategy::None,
            total_power: 0.0,
            tone_spacing: DEFAULT_TONE_SPACING,
            tone_offset: DEFAULT_TONE_OFFSET,
            duty_cycle: 1.0,
        }
    }
}

impl InterferenceProfile {
    pub fn new(strategy: Strategy, total_power: f64) -> Self {
        Self {
            strategy,
            total_power,
            ..Self::default()
        }
    }

    pub fn with_power(&self, total_power: f64) -> Self {
        Self {
            total_power,
            ..self.clone()
        }
    }

    pub fn with_strategy(&self, strategy: Strategy) -> Self {
        Self {
            strategy,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_power.is_finite() && self.total_power >= 0.0) {
            return Err(Error::config("interference.total_power", "must be finite and non-negative"));
        }
        if self.tone_spacing == 0 {
            return Err(Error::config("interference.tone_spacing", "must be positive"));
        }
        if !(self.duty_cycle > 0.0 && self.duty_cycle <= 1.0) {
            return Err(Error::config("interference.duty_cycle", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// REs that receive interference under this profile, in grid order.
    pub fn targeted_res(&self, grid: &ResourceGrid) -> Result<Vec<usize>> {
        self.validate()?;
        let kinds = grid.kinds();
        let res = match self.strategy {
            Strategy::None => Vec::new(),
            Strategy::PilotTones => grid.pilot_res(),
            Strategy::Barrage => (0..grid.len()).collect(),
            Strategy::FreqDomainNpi => {
                let offset = self.tone_offset % self.tone_spacing;
                (0..grid.len())
                    .filter(|&i| {
                        let (sc, _) = grid.position(i);
                        kinds[i] == ReKind::Data && sc % self.tone_spacing == offset
                    })
                    .collect()
            }
            Strategy::TimeDomainNpi => {
                let mask = td_npi_mask(grid.config(), self.duty_cycle);
                (0..grid.len())
                    .filter(|&i| {
                        let (_, sym) = grid.position(i);
                        kinds[i] == ReKind::Data && mask.contains(&sym)
                    })
                    .collect()
            }
        };
        Ok(res)
    }

    pub fn targeted_re_count(&self, grid: &ResourceGrid) -> Result<usize> {
        Ok(self.targeted_res(grid)?.len())
    }

    /// Number of distinct subcarriers the strategy puts energy on.
    pub fn tone_count(&self, grid: &ResourceGrid) -> Result<usize> {
        let tones: BTreeSet<usize> = self
            .targeted_res(grid)?
            .into_iter()
            .map(|i| grid.position(i).0)
            .collect();
        Ok(tones.len())
    }

    /// Total power needed to put `per_tone_power` on each targeted subcarrier.
    pub fn equal_density_power(&self, grid: &ResourceGrid, per_tone_power: f64) -> Result<f64> {
        Ok(per_tone_power * self.tone_count(grid)? as f64)
    }
}

/// Symbols pulsed by time-domain NPI.
///
/// Candidates are the data-bearing symbols that carry no pilot. `floor(duty * n)`
/// of them are picked at evenly spaced positions.
pub fn td_npi_mask(config: &GridConfig, duty_cycle: f64) -> Vec<usize> {
    let candidates: Vec<usize> = (config.control_symbol_count..config.symbols_per_subframe)
        .filter(|s| !config.is_pilot_symbol(*s))
        .collect();
    let n = candidates.len();
    let duty = duty_cycle.clamp(0.0, 1.0);
    let count = ((duty * n as f64) + 1e-9).floor() as usize;
    (0..count.min(n)).map(|j| candidates[j * n / count]).collect()
}

/// Returns a copy of `grid` whose interference map realizes `profile`.
///
/// Any interference already present on `grid` is replaced.
pub fn apply_interference(grid: &ResourceGrid, profile: &InterferenceProfile) -> Result<ResourceGrid> {
    let targeted = profile.targeted_res(grid)?;
    if targeted.is_empty() && profile.total_power > 0.0 {
        return Err(Error::config(
            "interference.total_power",
            format!("strategy `{}` targets no resource elements on this grid", profile.strategy),
        ));
    }
    let mut out = grid.clone();
    out.interference_power.iter_mut().for_each(|p| *p = 0.0);
    if !targeted.is_empty() {
        let per_re = profile.total_power / targeted.len() as f64;
        for i in targeted {
            out.interference_power[i] = per_re;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use super::Strategy;
    use proptest::prelude::*;

    fn grid() -> ResourceGrid {
        build_grid(GridConfig::default()).unwrap()
    }

    fn pilot_sum(g: &ResourceGrid) -> f64 {
        g.pilot_res().iter().map(|&i| g.interference_power()[i]).sum()
    }

    fn data_sum(g: &ResourceGrid) -> f64 {
        g.data_res().iter().map(|&i| g.interference_power()[i]).sum()
    }

    #[test]
    fn fd_npi_leaves_pilots_clean() {
        let g = apply_interference(&grid(), &InterferenceProfile::new(Strategy::FreqDomainNpi, 500.0)).unwrap();
        assert!(g.pilot_res().iter().all(|&i| g.interference_power()[i] == 0.0));
        assert_eq!(pilot_sum(&g), 0.0);
        assert!((g.total_interference() - 500.0).abs() < 1e-9 * 500.0);
    }

    #[test]
    fn fd_npi_default_comb_geometry() {
        let g = grid();
        let p = InterferenceProfile::new(Strategy::FreqDomainNpi, 1.0);
        assert_eq!(p.tone_count(&g).unwrap(), 200);
        assert_eq!(p.targeted_re_count(&g).unwrap(), 200 * 14);
        // two NPI tones per pilot inside every pilot symbol
        let targeted = p.targeted_res(&g).unwrap();
        let in_symbol0 = targeted.iter().filter(|&&i| g.position(i).1 == 0).count();
        let pilots_symbol0 = g.pilot_res().iter().filter(|&&i| g.position(i).1 == 0).count();
        assert_eq!(in_symbol0, 2 * pilots_symbol0);
    }

    #[test]
    fn barrage_needs_three_times_the_power() {
        let g = grid();
        let pi = InterferenceProfile::new(Strategy::PilotTones, 0.0);
        let npi = InterferenceProfile::new(Strategy::FreqDomainNpi, 0.0);
        let barrage = InterferenceProfile::new(Strategy::Barrage, 0.0);
        let per_tone = 0.25;
        let p_pi = pi.equal_density_power(&g, per_tone).unwrap();
        let p_npi = npi.equal_density_power(&g, per_tone).unwrap();
        let p_bar = barrage.equal_density_power(&g, per_tone).unwrap();
        assert_eq!(p_pi, p_npi);
        assert!((p_bar / p_npi - 3.0).abs() < 1e-12);
    }

    #[test]
    fn barrage_splits_equally() {
        let g = apply_interference(&grid(), &InterferenceProfile::new(Strategy::Barrage, 84.0)).unwrap();
        assert!(g.interference_power().iter().all(|&p| (p - 0.01).abs() < 1e-15));
    }

    #[test]
    fn pilot_tones_spare_data() {
        let g = apply_interference(&grid(), &InterferenceProfile::new(Strategy::PilotTones, 40.0)).unwrap();
        assert_eq!(data_sum(&g), 0.0);
        assert!(g.pilot_res().iter().all(|&i| g.interference_power()[i] == 0.1));
    }

    #[test]
    fn td_mask_examples() {
        let cfg = GridConfig::default();
        let full = td_npi_mask(&cfg, 1.0);
        assert_eq!(full, vec![1, 2, 3, 5, 6, 8, 9, 10, 12, 13]);

        let half = td_npi_mask(&cfg, 0.5);
        assert_eq!(half.len(), 5);
        // oracle: walk the pilot list explicitly
        for s in &half {
            assert!(![0usize, 4, 7, 11].contains(s));
        }
        assert!(td_npi_mask(&cfg, 0.01).is_empty());
        assert!(td_npi_mask(&cfg, 0.0).is_empty());
    }

    #[test]
    fn td_npi_with_empty_mask() {
        let g = grid();
        let mut p = InterferenceProfile::new(Strategy::TimeDomainNpi, 0.0);
        p.duty_cycle = 0.05;
        let out = apply_interference(&g, &p).unwrap();
        assert_eq!(out.total_interference(), 0.0);
        p.total_power = 1.0;
        assert!(matches!(apply_interference(&g, &p), Err(Error::Config { .. })));
    }

    #[test]
    fn none_with_power_is_rejected() {
        let p = InterferenceProfile::new(Strategy::None, 1.0);
        assert!(apply_interference(&grid(), &p).is_err());
        let p = InterferenceProfile::new(Strategy::None, 0.0);
        assert_eq!(apply_interference(&grid(), &p).unwrap().total_interference(), 0.0);
    }

    #[test]
    fn invalid_profiles() {
        let g = grid();
        let mut p = InterferenceProfile::new(Strategy::Barrage, -1.0);
        assert!(apply_interference(&g, &p).is_err());
        p.total_power = 1.0;
        p.duty_cycle = 1.5;
        assert!(apply_interference(&g, &p).is_err());
        p.duty_cycle = 1.0;
        p.tone_spacing = 0;
        assert!(apply_interference(&g, &p).is_err());
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        assert!("jam".parse::<Strategy>().is_err());
    }

    fn arb_strategy() -> impl proptest::strategy::Strategy<Value = Strategy> {
        prop_oneof![
            Just(Strategy::PilotTones),
            Just(Strategy::FreqDomainNpi),
            Just(Strategy::TimeDomainNpi),
            Just(Strategy::Barrage),
        ]
    }

    proptest! {
        #[test]
        fn budget_is_conserved(
            strategy in arb_strategy(),
            power in 1e-6f64..1e6,
            spacing in 1usize..8,
            offset in 0usize..8,
            duty in 0.2f64..=1.0,
            control in 0usize..3,
        ) {
            let g = build_grid(GridConfig { control_symbol_count: control, ..GridConfig::default() }).unwrap();
            let p = InterferenceProfile { strategy, total_power: power, tone_spacing: spacing, tone_offset: offset, duty_cycle: duty };
            let out = apply_interference(&g, &p).unwrap();
            prop_assert!((out.total_interference() - power).abs() <= 1e-9 * power);
            let targeted = p.targeted_res(&g).unwrap();
            let level = power / targeted.len() as f64;
            for (i, &x) in out.interference_power().iter().enumerate() {
                if targeted.binary_search(&i).is_ok() {
                    prop_assert_eq!(x, level);
                } else {
                    prop_assert_eq!(x, 0.0);
                }
            }
            if strategy.is_non_pilot() {
                prop_assert_eq!(pilot_sum(&out), 0.0);
            }
            if strategy == Strategy::PilotTones {
                prop_assert_eq!(data_sum(&out), 0.0);
            }
        }
    }
}
