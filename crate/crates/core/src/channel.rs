//! Doubly selective block-fading channel.
//!
//! Each tap of a tapped-delay-line profile carries a complex Gaussian gain that
//! evolves between subframes as a first-order autoregression whose coefficient
//! is the Clarke/Jakes autocorrelation `J0(2π f_D T)`. Gains are constant within
//! a subframe; the per-subcarrier power gain is `|Σ_l h_l e^{-j2π f_k τ_l}|²`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ResourceGrid;
use crate::seeding::{stream_rng, StreamKind};

/// Extended Pedestrian A tap delays (ns).
pub const EPA_DELAYS_NS: [f64; 7] = [0.0, 30.0, 70.0, 90.0, 110.0, 190.0, 410.0];
/// Extended Pedestrian A relative tap powers (dB).
pub const EPA_POWERS_DB: [f64; 7] = [0.0, -1.0, -2.0, -3.0, -8.0, -17.2, -20.8];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelProfile {
    /// Unit gain on every RE, no fading.
    Static,
    /// Frequency-flat Rayleigh fading (a single tap at zero delay).
    FlatBlock,
    /// Frequency-selective Rayleigh fading over the configured taps.
    TappedDelayLine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Mean signal-to-noise ratio per RE, interference excluded.
    pub snr_db: f64,
    pub doppler_hz: f64,
    #[serde(rename = "channel_profile")]
    pub profile: ChannelProfile,
    pub tap_delays_ns: Vec<f64>,
    pub tap_powers_db: Vec<f64>,
    pub subcarrier_spacing_hz: f64,
    pub subframe_duration_s: f64,
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            snr_db: 30.0,
            doppler_hz: 20.0,
            profile: ChannelProfile::TappedDelayLine,
            tap_delays_ns: EPA_DELAYS_NS.to_vec(),
            tap_powers_db: EPA_POWERS_DB.to_vec(),
            subcarrier_spacing_hz: 15e3,
            subframe_duration_s: 1e-3,
            seed: 0,
        }
    }
}

impl ChannelConfig {
    pub fn static_awgn(snr_db: f64) -> Self {
        Self {
            snr_db,
            profile: ChannelProfile::Static,
            ..Self::default()
        }
    }

    pub fn flat_rayleigh(snr_db: f64, doppler_hz: f64) -> Self {
        Self {
            snr_db,
            doppler_hz,
            profile: ChannelProfile::FlatBlock,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.snr_db.is_finite() {
            return Err(Error::config("channel.snr_db", "must be finite"));
        }
        if !(self.doppler_hz.is_finite() && self.doppler_hz >= 0.0) {
            return Err(Error::config("channel.doppler_hz", "must be finite and non-negative"));
        }
        if !(self.subframe_duration_s.is_finite() && self.subframe_duration_s > 0.0) {
            return Err(Error::config("channel.subframe_duration_s", "must be positive"));
        }
        if !(self.subcarrier_spacing_hz.is_finite() && self.subcarrier_spacing_hz > 0.0) {
            return Err(Error::config("channel.subcarrier_spacing_hz", "must be positive"));
        }
        if self.profile == ChannelProfile::TappedDelayLine {
            if self.tap_delays_ns.len() != self.tap_powers_db.len() {
                return Err(Error::config(
                    "channel.tap_powers_db",
                    "tap delay and power lists differ in length",
                ));
            }
            if self.tap_delays_ns.is_empty() {
                return Err(Error::config("channel.tap_delays_ns", "needs at least one tap"));
            }
            if self
                .tap_delays_ns
                .iter()
                .chain(&self.tap_powers_db)
                .any(|v| !v.is_finite())
            {
                return Err(Error::config("channel.tap_delays_ns", "tap values must be finite"));
            }
        }
        Ok(())
    }

    /// Noise power per RE for unit mean signal power.
    pub fn noise_power(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }

    /// Lag-one (one subframe) correlation of each complex tap gain.
    pub fn ar_coefficient(&self) -> f64 {
        libm::j0(2.0 * PI * self.doppler_hz * self.subframe_duration_s)
    }

    /// `(delay seconds, linear power)` per tap, powers normalized to sum to one.
    pub fn taps(&self) -> Vec<(f64, f64)> {
        match self.profile {
            ChannelProfile::Static | ChannelProfile::FlatBlock => vec![(0.0, 1.0)],
            ChannelProfile::TappedDelayLine => {
                let lin: Vec<f64> = self.tap_powers_db.iter().map(|db| 10f64.powf(db / 10.0)).collect();
                let total: f64 = lin.iter().sum();
                self.tap_delays_ns
                    .iter()
                    .zip(lin)
                    .map(|(d, p)| (d * 1e-9, p / total))
                    .collect()
            }
        }
    }
}

/// Channel state of one subframe.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub subframe_index: u64,
    /// Power gain per subcarrier, constant over the subframe's symbols.
    pub gain: Vec<f64>,
    pub taps: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn unit(num_subcarriers: usize, subframe_index: u64) -> Self {
        Self {
            subframe_index,
            gain: vec![1.0; num_subcarriers],
            taps: vec![Complex64::new(1.0, 0.0)],
        }
    }

    /// Power gain of the RE at flat grid index `re`.
    #[inline]
    pub fn re_gain(&self, re: usize) -> f64 {
        self.gain[re % self.gain.len()]
    }

    pub fn mean_gain(&self) -> f64 {
        self.gain.iter().sum::<f64>() / self.gain.len() as f64
    }
}

/// Stateful generator of consecutive channel realizations.
#[derive(Debug, Clone)]
pub struct FadingChannel {
    config: ChannelConfig,
    num_subcarriers: usize,
    tap_powers: Vec<f64>,
    /// `e^{-j2π f_k τ_l}`, row-major by subcarrier.
    steering: Vec<Complex64>,
    rho: f64,
    innovation: f64,
    keys: (u64, u64, u64),
    rng: ChaCha8Rng,
    taps: Vec<Complex64>,
    next_index: u64,
}

impl FadingChannel {
    /// Channel driven by `config.seed` alone.
    pub fn new(config: ChannelConfig, num_subcarriers: usize) -> Result<Self> {
        let seed = config.seed;
        Self::with_stream(config, num_subcarriers, seed, 0)
    }

    /// Channel on the independent stream keyed by `(master_seed, config.seed, point)`.
    pub fn with_stream(config: ChannelConfig, num_subcarriers: usize, master_seed: u64, point: u64) -> Result<Self> {
        config.validate()?;
        if num_subcarriers == 0 {
            return Err(Error::config("grid.num_rb", "channel needs at least one subcarrier"));
        }
        let taps = config.taps();
        let centre = num_subcarriers as f64 / 2.0;
        let mut steering = Vec::with_capacity(num_subcarriers * taps.len());
        for k in 0..num_subcarriers {
            let f = (k as f64 - centre) * config.subcarrier_spacing_hz;
            for &(delay, _) in &taps {
                steering.push(Complex64::from_polar(1.0, -2.0 * PI * f * delay));
            }
        }
        let rho = config.ar_coefficient();
        let keys = (master_seed, config.seed, point);
        let mut ch = Self {
            tap_powers: taps.iter().map(|t| t.1).collect(),
            steering,
            rho,
            innovation: (1.0 - rho * rho).max(0.0).sqrt(),
            keys,
            rng: stream_rng(keys.0, keys.1, keys.2, StreamKind::Channel),
            taps: Vec::new(),
            next_index: 0,
            num_subcarriers,
            config,
        };
        ch.reset();
        Ok(ch)
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    fn reset(&mut self) {
        self.rng = stream_rng(self.keys.0, self.keys.1, self.keys.2, StreamKind::Channel);
        self.next_index = 0;
        self.taps.clear();
    }

    fn complex_normal(rng: &mut ChaCha8Rng, power: f64) -> Complex64 {
        let s = (power / 2.0).sqrt();
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * s, im * s)
    }

    fn advance(&mut self) {
        if self.config.profile == ChannelProfile::Static {
            self.next_index += 1;
            return;
        }
        if self.taps.is_empty() {
            self.taps = self
                .tap_powers
                .iter()
                .map(|&p| Self::complex_normal(&mut self.rng, p))
                .collect();
        } else {
            for (h, &p) in self.taps.iter_mut().zip(&self.tap_powers) {
                let w = Self::complex_normal(&mut self.rng, p);
                *h = *h * self.rho + w * self.innovation;
            }
        }
        self.next_index += 1;
    }

    fn snapshot(&self) -> ChannelRealization {
        let index = self.next_index - 1;
        if self.config.profile == ChannelProfile::Static {
            return ChannelRealization::unit(self.num_subcarriers, index);
        }
        let l = self.taps.len();
        let gain = self
            .steering
            .chunks_exact(l)
            .map(|row| {
                row.iter()
                    .zip(&self.taps)
                    .fold(Complex64::new(0.0, 0.0), |acc, (s, h)| acc + s * h)
                    .norm_sqr()
            })
            .collect();
        ChannelRealization {
            subframe_index: index,
            gain,
            taps: self.taps.clone(),
        }
    }

    /// Realization of the next subframe in sequence.
    pub fn next_realization(&mut self) -> ChannelRealization {
        self.advance();
        self.snapshot()
    }

    /// Realization of subframe `index`; rewinds the stream when `index` is in the past.
    pub fn realize(&mut self, index: u64) -> ChannelRealization {
        if self.next_index > index + 1 {
            self.reset();
        }
        while self.next_index <= index {
            self.advance();
        }
        self.snapshot()
    }
}

/// Linear SINR of RE `re`: received signal over interference plus noise.
#[inline]
pub fn re_sinr(grid: &ResourceGrid, real: &ChannelRealization, re: usize) -> f64 {
    grid.signal_power[re] * real.re_gain(re) / (grid.interference_power[re] + grid.noise_power())
}

/// Linear SINR of every RE in grid order.
pub fn per_re_sinr(grid: &ResourceGrid, real: &ChannelRealization) -> Vec<f64> {
    (0..grid.len()).map(|re| re_sinr(grid, real, re)).collect()
}

/// Band-wide power ratio: total received signal over total interference plus noise.
pub fn wideband_sinr(grid: &ResourceGrid, real: &ChannelRealization) -> f64 {
    let signal: f64 = (0..grid.len()).map(|re| grid.signal_power[re] * real.re_gain(re)).sum();
    let impairment = grid.total_interference() + grid.noise_power() * grid.len() as f64;
    signal / impairment
}
