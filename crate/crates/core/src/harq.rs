//! Retransmission-induced latency.
//!
//! Each transmission attempt of a block is an independent Bernoulli trial that
//! succeeds with probability `p = 1 - BLER`. The number of retransmissions
//! before success is then geometric on `{0, 1, 2, ...}` with mean
//! `BLER / (1 - BLER)`, and with a constant wait between attempts the mean
//! latency added by retransmissions is `BLER * τ_wait / (1 - BLER)`. The capped
//! variant stops after `max_retx` retransmissions and drops the block.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarqMode {
    Unbounded,
    Capped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarqConfig {
    /// Wait between consecutive attempts of one block.
    pub tau_wait_ms: f64,
    /// Retransmissions allowed after the first attempt (capped mode only).
    pub max_retx: u32,
    #[serde(rename = "harq_mode")]
    pub mode: HarqMode,
}

impl Default for HarqConfig {
    fn default() -> Self {
        Self {
            tau_wait_ms: 8.0,
            max_retx: 4,
            mode: HarqMode::Capped,
        }
    }
}

impl HarqConfig {
    pub fn unbounded(tau_wait_ms: f64) -> Self {
        Self {
            tau_wait_ms,
            mode: HarqMode::Unbounded,
            ..Self::default()
        }
    }

    pub fn capped(tau_wait_ms: f64, max_retx: u32) -> Self {
        Self {
            tau_wait_ms,
            max_retx,
            mode: HarqMode::Capped,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_wait_ms.is_finite() && self.tau_wait_ms > 0.0) {
            return Err(Error::config("harq.tau_wait_ms", "must be positive"));
        }
        Ok(())
    }

    /// Retransmission limit, `None` when unbounded.
    pub fn retx_limit(&self) -> Option<u32> {
        match self.mode {
            HarqMode::Unbounded => None,
            HarqMode::Capped => Some(self.max_retx),
        }
    }
}

/// Outcome of one block's HARQ process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarqRecord {
    pub n_retx: u32,
    pub latency_ms: f64,
    pub delivered: bool,
    pub success_prob_used: f64,
}

fn check_bler(bler: f64) -> Result<()> {
    if bler.is_nan() || bler < 0.0 {
        return Err(Error::Domain(format!("BLER {bler} outside [0, 1)")));
    }
    if bler >= 1.0 {
        return Err(Error::Domain(format!(
            "BLER {bler} >= 1: the expected retransmission count diverges"
        )));
    }
    Ok(())
}

/// Mean number of retransmissions, `BLER / (1 - BLER)`.
pub fn analytic_mean_retx(bler: f64) -> Result<f64> {
    check_bler(bler)?;
    Ok(bler / (1.0 - bler))
}

/// Mean retransmission-induced latency, `BLER * τ_wait / (1 - BLER)`.
pub fn analytic_latency(bler: f64, tau_wait_ms: f64) -> Result<f64> {
    Ok(analytic_mean_retx(bler)? * tau_wait_ms)
}

/// `d/dBLER` of [`analytic_latency`]: `τ_wait / (1 - BLER)^2`.
pub fn latency_sensitivity(bler: f64, tau_wait_ms: f64) -> Result<f64> {
    check_bler(bler)?;
    Ok(tau_wait_ms / (1.0 - bler).powi(2))
}

/// Mean retransmissions with at most `max_retx` retransmissions; a dropped
/// block counts `max_retx`.
pub fn capped_mean_retx(bler: f64, max_retx: u32) -> f64 {
    let b = bler.clamp(0.0, 1.0);
    let succeeded: f64 = (1..=max_retx)
        .map(|k| f64::from(k) * b.powi(k as i32) * (1.0 - b))
        .sum();
    succeeded + f64::from(max_retx) * b.powi(max_retx as i32 + 1)
}

pub fn capped_mean_latency(bler: f64, tau_wait_ms: f64, max_retx: u32) -> f64 {
    tau_wait_ms * capped_mean_retx(bler, max_retx)
}

/// Probability that all `1 + max_retx` attempts fail.
pub fn capped_drop_prob(bler: f64, max_retx: u32) -> f64 {
    bler.clamp(0.0, 1.0).powi(max_retx as i32 + 1)
}

/// Runs one block's attempts as Bernoulli trials with success probability `p_success`.
pub fn run_block<R: Rng + ?Sized>(p_success: f64, config: &HarqConfig, rng: &mut R) -> Result<HarqRecord> {
    config.validate()?;
    if !(0.0..=1.0).contains(&p_success) {
        return Err(Error::Domain(format!("success probability {p_success} outside [0, 1]")));
    }
    let limit = config.retx_limit();
    if limit.is_none() && p_success == 0.0 {
        return Err(Error::Domain(
            "unbounded HARQ with zero success probability never terminates".into(),
        ));
    }
    let mut n_retx = 0u32;
    let delivered = loop {
        if rng.random::<f64>() < p_success {
            break true;
        }
        if limit.is_some_and(|m| n_retx >= m) {
            break false;
        }
        n_retx += 1;
    };
    Ok(HarqRecord {
        n_retx,
        latency_ms: f64::from(n_retx) * config.tau_wait_ms,
        delivered,
        success_prob_used: p_success,
    })
}
