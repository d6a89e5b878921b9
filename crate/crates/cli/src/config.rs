//! Run configuration: a scenario plus the absolute power reference used for
//! dBm reporting. Files are JSON objects layered over the defaults; every key
//! must already exist in the default document.

use std::path::Path;

use linksim::ScenarioConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Received signal power per RE that the simulator's unit power stands for.
pub const DEFAULT_RSRP_DBM: f64 = -72.0;

// Unknown keys are rejected while layering over the defaults, before serde sees them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub scenario: ScenarioConfig,
    pub rsrp_dbm: f64,
    /// Fixed total interference powers to sweep instead of calibrated SINR targets.
    pub sweep_power_dbm: Option<Vec<f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { scenario: ScenarioConfig::default(), rsrp_dbm: DEFAULT_RSRP_DBM, sweep_power_dbm: None }
    }
}

impl RunConfig {
    /// Linear power (in units of the per-RE signal) for an absolute level.
    pub fn dbm_to_linear(&self, dbm: f64) -> f64 {
        10f64.powf((dbm - self.rsrp_dbm) / 10.0)
    }

    pub fn linear_to_dbm(&self, power: f64) -> f64 {
        self.rsrp_dbm + 10.0 * power.log10()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.scenario.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !self.rsrp_dbm.is_finite() {
            return Err(CliError::Config("rsrp_dbm: must be finite".into()));
        }
        if let Some(p) = &self.sweep_power_dbm {
            if p.is_empty() || p.iter().any(|x| !x.is_finite()) {
                return Err(CliError::Config("sweep_power_dbm: needs at least one finite level".into()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

fn default_document() -> Value {
    serde_json::to_value(RunConfig::default()).expect("defaults serialize")
}

/// Overlays `patch` on `base`, rejecting keys the base does not have.
fn merge(base: &mut Value, patch: Value, path: &str) -> Result<(), CliError> {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                let sub = join(path, &k);
                let slot = b.get_mut(&k).ok_or_else(|| CliError::Config(format!("unknown key `{sub}`")))?;
                merge(slot, v, &sub)?;
            }
            Ok(())
        }
        (b, p) => {
            *b = p;
            Ok(())
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// Applies one `dotted.key=value` override. The value is read as JSON when it
/// parses, otherwise as a bare string.
pub fn apply_override(doc: &mut Value, entry: &str) -> Result<(), CliError> {
    let (key, raw) = entry
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{entry}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Config(format!("override `{entry}` has an empty key")));
    }
    let mut slot = &mut *doc;
    for part in key.split('.') {
        slot = match slot {
            Value::Object(m) => m.get_mut(part),
            _ => None,
        }
        .ok_or_else(|| CliError::Config(format!("unknown key `{key}`")))?;
    }
    *slot = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    Ok(())
}

/// Builds a validated configuration from optional JSON text and overrides.
pub fn parse_config_str(text: Option<&str>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut doc = default_document();
    if let Some(text) = text {
        let patch: Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config is not valid JSON: {e}")))?;
        if !patch.is_object() {
            return Err(CliError::Config("config must be a JSON object".into()));
        }
        merge(&mut doc, patch, "")?;
    }
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = path
        .map(|p| {
            std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))
        })
        .transpose()?;
    parse_config_str(text.as_deref(), overrides)
}

#[cfg(test)]
mod tests {
    use super::*;
    use linksim::harq::HarqMode;
    use linksim::Strategy;

    #[test]
    fn empty_config_gives_defaults() {
        let cfg = parse_config_str(None, &[]).unwrap();
        assert_eq!(cfg, RunConfig::default());
        let cfg = parse_config_str(Some("{}"), &[]).unwrap();
        let sc = &cfg.scenario;
        assert_eq!(sc.grid.num_rb, 50);
        assert_eq!(sc.csi.period_subframes, 10);
        assert_eq!(sc.harq.max_retx, 4);
        assert_eq!(sc.harq.tau_wait_ms, 8.0);
        assert_eq!(sc.harq.mode, HarqMode::Capped);
    }

    #[test]
    fn round_trip() {
        let mut cfg = parse_config_str(
            Some(r#"{"channel": {"doppler_hz": 70.0}, "sweep_power_dbm": [-80, -75.5]}"#),
            &["harq.max_retx=2".into(), "interference.strategy=npi_td".into()],
        )
        .unwrap();
        cfg.scenario.master_seed = 0xdead_beef;
        let back = parse_config_str(Some(&cfg.to_json()), &[]).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.scenario.interference.strategy, vec![Strategy::TimeDomainNpi]);
        assert_eq!(back.sweep_power_dbm, Some(vec![-80.0, -75.5]));
    }

    #[test]
    fn overrides_land_after_file() {
        let cfg = parse_config_str(Some(r#"{"harq": {"max_retx": 3}}"#), &["harq.max_retx=0".into()]).unwrap();
        assert_eq!(cfg.scenario.harq.max_retx, 0);
        let cfg = parse_config_str(None, &["sweep_sinr_db=[1, 2]".into(), "channel.channel_profile=static".into()])
            .unwrap();
        assert_eq!(cfg.scenario.sweep_sinr_db, vec![1.0, 2.0]);
    }

    #[test]
    fn unknown_keys_are_named() {
        for (text, overrides, needle) in [
            (None, vec!["harq.max_retxx=1".to_string()], "harq.max_retxx"),
            (None, vec!["nope=1".to_string()], "nope"),
            (Some(r#"{"grid": {"rbs": 3}}"#), vec![], "grid.rbs"),
        ] {
            let err = parse_config_str(text, &overrides).unwrap_err();
            assert_eq!(err.exit_code(), 2);
            assert!(err.to_string().contains(needle), "{err}");
        }
        let err = parse_config_str(None, &["harq.max_retx".into()]).unwrap_err();
        assert!(err.to_string().contains("key=value"));
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for o in ["grid.num_rb=0", "subframes_per_point=0", "harq.max_retx=-1", "interference.strategy=laser"] {
            let err = parse_config_str(None, &[o.to_string()]).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{o}");
        }
        assert!(parse_config_str(Some("[1]"), &[]).is_err());
        assert!(parse_config_str(Some("{"), &[]).is_err());
    }

    #[test]
    fn dbm_conversion() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.dbm_to_linear(-72.0), 1.0);
        assert!((cfg.dbm_to_linear(-62.0) - 10.0).abs() < 1e-12);
        assert!((cfg.linear_to_dbm(100.0) - (-52.0)).abs() < 1e-12);
    }
}
