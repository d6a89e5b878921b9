//! CQI-to-MCS selection, the per-MCS block error abstraction, and delivered bits.
//!
//! Each MCS has a logistic BLER waterfall in the effective data SINR. Its
//! threshold is not free: it is solved so that the MCS reaches exactly 10 % BLER
//! at the SINR that the CQI mapping associates with the same index. With a
//! perfect estimate the closed loop therefore meets the 10 % target by
//! construction.

use serde::{Deserialize, Serialize};

use crate::csi::{CqiMapping, MAX_CQI};
use crate::error::{Error, Result};

/// BLER every MCS reaches at its own CQI level.
pub const TARGET_BLER: f64 = 0.10;

/// Spectral efficiency (bits per RE) of the 4-bit CQI table, indices 1..=15.
/// Index 0 is an out-of-range placeholder that is never scheduled.
pub const STANDARD_EFFICIENCY: [f64; 16] = [
    0.076_15, 0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141, 2.4063, 2.7305, 3.3223,
    3.9023, 4.5234, 5.1152, 5.5547,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsEntry {
    pub index: u8,
    pub spectral_efficiency: f64,
    pub bler_threshold_db: f64,
    pub bler_slope: f64,
}

impl McsEntry {
    /// Entry whose BLER equals [`TARGET_BLER`] at `anchor_db`.
    pub fn calibrated(index: u8, spectral_efficiency: f64, bler_slope: f64, anchor_db: f64) -> Self {
        // 1 / (1 + e^{s(x - th)}) = 0.1  <=>  x - th = ln(9) / s
        let odds = (1.0 - TARGET_BLER) / TARGET_BLER;
        Self {
            index,
            spectral_efficiency,
            bler_threshold_db: anchor_db - odds.ln() / bler_slope,
            bler_slope,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McsTable {
    entries: Vec<McsEntry>,
}

impl McsTable {
    /// Builds a 16-row table from `(efficiency, slope)` pairs, deriving thresholds
    /// from the CQI mapping.
    pub fn from_rows(rows: &[(f64, f64)], mapping: &CqiMapping) -> Result<Self> {
        if rows.len() != usize::from(MAX_CQI) + 1 {
            return Err(Error::config("mcs_table", format!("expected 16 rows, got {}", rows.len())));
        }
        let entries = rows
            .iter()
            .enumerate()
            .map(|(i, &(eff, slope))| McsEntry::calibrated(i as u8, eff, slope, mapping.cqi_to_sinr(i as u8)))
            .collect();
        let table = Self { entries };
        table.validate()?;
        Ok(table)
    }

    pub fn standard(mapping: &CqiMapping, bler_slope: f64) -> Result<Self> {
        let rows: Vec<(f64, f64)> = STANDARD_EFFICIENCY.iter().map(|&e| (e, bler_slope)).collect();
        Self::from_rows(&rows, mapping)
    }

    /// Parses `index,efficiency,slope` rows (header optional, `#` comments ignored).
    pub fn from_csv(text: &str, mapping: &CqiMapping) -> Result<Self> {
        let mut rows = vec![None; usize::from(MAX_CQI) + 1];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("index") {
                continue;
            }
            let bad = |what: &str| Error::config("mcs_table", format!("line {}: {what}", lineno + 1));
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(bad("expected `index,efficiency,slope`"));
            }
            let index: usize = fields[0].parse().map_err(|_| bad("bad index"))?;
            let eff: f64 = fields[1].parse().map_err(|_| bad("bad efficiency"))?;
            let slope: f64 = fields[2].parse().map_err(|_| bad("bad slope"))?;
            let slot = rows.get_mut(index).ok_or_else(|| bad("index outside [0, 15]"))?;
            if slot.replace((eff, slope)).is_some() {
                return Err(bad("duplicate index"));
            }
        }
        let rows: Vec<(f64, f64)> = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.ok_or_else(|| Error::config("mcs_table", format!("missing row {i}"))))
            .collect::<Result<_>>()?;
        Self::from_rows(&rows, mapping)
    }

    pub fn validate(&self) -> Result<()> {
        for e in &self.entries {
            if !(e.spectral_efficiency.is_finite() && e.spectral_efficiency > 0.0) {
                return Err(Error::config("mcs_table", format!("row {}: efficiency must be positive", e.index)));
            }
            if !(e.bler_slope.is_finite() && e.bler_slope > 0.0) {
                return Err(Error::config("mcs_table", format!("row {}: slope must be positive", e.index)));
            }
        }
        for w in self.entries.windows(2) {
            if w[1].spectral_efficiency <= w[0].spectral_efficiency {
                return Err(Error::config(
                    "mcs_table",
                    format!("efficiency must increase strictly (rows {} and {})", w[0].index, w[1].index),
                ));
            }
            if w[1].bler_threshold_db <= w[0].bler_threshold_db {
                return Err(Error::config(
                    "mcs_table",
                    format!("derived thresholds must increase strictly (rows {} and {})", w[0].index, w[1].index),
                ));
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn entry(&self, index: u8) -> &McsEntry {
        &self.entries[usize::from(index)]
    }

    pub fn top(&self) -> &McsEntry {
        self.entries.last().expect("table has 16 rows")
    }
}

/// MCS for a reported CQI; CQI 0 (outage) falls back to the most robust MCS.
pub fn select_mcs(cqi: u8, table: &McsTable) -> &McsEntry {
    table.entry(cqi.clamp(1, MAX_CQI))
}

/// Logistic block error probability of `mcs` at effective SINR `actual_sinr_db`.
pub fn block_error_prob(mcs: &McsEntry, actual_sinr_db: f64) -> f64 {
    1.0 / (1.0 + (mcs.bler_slope * (actual_sinr_db - mcs.bler_threshold_db)).exp())
}

/// Payload bits of one transport block spanning `data_res` REs.
pub fn delivered_bits(mcs: &McsEntry, data_res: usize, success: bool) -> f64 {
    if success {
        mcs.spectral_efficiency * data_res as f64
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkAdaptConfig {
    pub bler_slope_per_db: f64,
    /// Fraction of raw delivered bits counted as user throughput.
    pub overhead_factor: f64,
    /// Replaces the standard efficiency column when set (16 values).
    pub spectral_efficiency: Option<Vec<f64>>,
}

impl Default for LinkAdaptConfig {
    fn default() -> Self {
        Self {
            bler_slope_per_db: 2.0,
            overhead_factor: 0.85,
            spectral_efficiency: None,
        }
    }
}

impl LinkAdaptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bler_slope_per_db.is_finite() && self.bler_slope_per_db > 0.0) {
            return Err(Error::config("linkadapt.bler_slope_per_db", "must be positive"));
        }
        if !(self.overhead_factor > 0.0 && self.overhead_factor <= 1.0) {
            return Err(Error::config("linkadapt.overhead_factor", "must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn table(&self, mapping: &CqiMapping) -> Result<McsTable> {
        self.validate()?;
        match &self.spectral_efficiency {
            None => McsTable::standard(mapping, self.bler_slope_per_db),
            Some(effs) => {
                let rows: Vec<(f64, f64)> = effs.iter().map(|&e| (e, self.bler_slope_per_db)).collect();
                McsTable::from_rows(&rows, mapping)
                    .map_err(|e| match e {
                        Error::Config { reason, .. } => Error::config("linkadapt.spectral_efficiency", reason),
                        other => other,
                    })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csi::cqi_to_sinr;
    use proptest::prelude::*;

    fn table() -> McsTable {
        McsTable::standard(&CqiMapping::default(), 2.0).unwrap()
    }

    #[test]
    fn selection_rules() {
        let t = table();
        assert_eq!(select_mcs(7, &t).index, 7);
        assert_eq!(select_mcs(0, &t).index, 1);
        assert_eq!(select_mcs(15, &t).index, 15);
        assert_eq!(select_mcs(15, &t).spectral_efficiency, 5.5547);
        assert_eq!(select_mcs(200, &t).index, 15);
    }

    #[test]
    fn calibration_anchors_hold_for_every_entry() {
        let t = table();
        for e in t.entries() {
            let b = block_error_prob(e, cqi_to_sinr(e.index));
            assert!((0.0999..=0.1001).contains(&b), "row {}: {b}", e.index);
        }
    }

    #[test]
    fn logistic_shape() {
        let e = *table().entry(9);
        assert!((block_error_prob(&e, e.bler_threshold_db) - 0.5).abs() < 1e-15);
        assert!(block_error_prob(&e, 1e3) < 1e-300);
        assert!((block_error_prob(&e, -1e3) - 1.0).abs() < 1e-15);
        assert!(block_error_prob(&e, f64::INFINITY) == 0.0);
    }

    #[test]
    fn bits_per_block() {
        let t = table();
        assert!((delivered_bits(t.top(), 8000, true) - 44_437.6).abs() < 1e-9);
        assert!((delivered_bits(t.entry(1), 8000, true) - 1218.4).abs() < 1e-9);
        assert_eq!(delivered_bits(t.top(), 8000, false), 0.0);
    }

    #[test]
    fn csv_override() {
        let mut text = String::from("index,efficiency,slope\n");
        for (i, e) in STANDARD_EFFICIENCY.iter().enumerate() {
            text.push_str(&format!("{i},{e},1.5\n"));
        }
        let t = McsTable::from_csv(&text, &CqiMapping::default()).unwrap();
        assert_eq!(t.entry(4).bler_slope, 1.5);
        assert!((block_error_prob(t.entry(4), cqi_to_sinr(4)) - 0.1).abs() < 1e-12);

        let missing = text.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(McsTable::from_csv(&missing, &CqiMapping::default()).is_err());
        let non_monotone = text.replace("5,0.877,", "5,0.3,");
        assert!(McsTable::from_csv(&non_monotone, &CqiMapping::default()).is_err());
    }

    #[test]
    fn wrong_row_count() {
        assert!(McsTable::from_rows(&[(1.0, 2.0)], &CqiMapping::default()).is_err());
    }

    proptest! {
        #[test]
        fn bler_monotone(sinr in -20.0f64..40.0, delta in 0.01f64..5.0, idx in 1u8..15) {
            let t = table();
            let e = t.entry(idx);
            prop_assert!(block_error_prob(e, sinr + delta) <= block_error_prob(e, sinr));
            prop_assert!(block_error_prob(t.entry(idx + 1), sinr) >= block_error_prob(e, sinr));
        }
    }
}
