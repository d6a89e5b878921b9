//! Mergeable streaming statistics.
//!
//! Every accumulator here supports `merge`, so per-worker partial results can
//! be reduced in any grouping. Means and variances use Welford updates with
//! Chan's pairwise merge; medians of continuous values come from a fixed-bin
//! histogram sketch, and CQI medians from an exact 16-bin histogram.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::csi::MAX_CQI;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl RunningStats {
    pub fn update(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let (na, nb, n) = (self.count as f64, other.count as f64, count as f64);
        Self {
            count,
            mean: self.mean + delta * nb / n,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n,
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}

/// Fixed-width histogram over `[lo, hi)`; values outside are clamped to the edge bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSketch {
    lo: f64,
    bin_width: f64,
    counts: Vec<u64>,
    total: u64,
}

impl QuantileSketch {
    pub fn new(lo: f64, hi: f64, bin_width: f64) -> Self {
        assert!(hi > lo && bin_width > 0.0, "sketch range must be non-empty");
        let bins = ((hi - lo) / bin_width).ceil() as usize;
        Self {
            lo,
            bin_width,
            counts: vec![0; bins],
            total: 0,
        }
    }

    /// Sketch for SINR-like quantities in dB: [-100, 100) at 0.02 dB.
    pub fn for_db() -> Self {
        Self::new(-100.0, 100.0, 0.02)
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn count(&self) -> u64 {
        self.total
    }

    pub fn update(&mut self, x: f64) {
        let last = self.counts.len() - 1;
        let bin = ((x - self.lo) / self.bin_width).floor();
        let bin = if bin.is_nan() || bin < 0.0 {
            0
        } else {
            (bin as usize).min(last)
        };
        self.counts[bin] += 1;
        self.total += 1;
    }

    pub fn merge(&self, other: &Self) -> Self {
        assert!(
            self.lo == other.lo && self.bin_width == other.bin_width && self.counts.len() == other.counts.len(),
            "merging sketches with different layouts"
        );
        Self {
            lo: self.lo,
            bin_width: self.bin_width,
            counts: self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect(),
            total: self.total + other.total,
        }
    }

    fn value_at_rank(&self, rank: u64) -> f64 {
        let mut seen = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            seen += c;
            if seen > rank {
                return self.lo + (i as f64 + 0.5) * self.bin_width;
            }
        }
        unreachable!("rank beyond total count")
    }

    /// Median with the even-count convention of averaging the two middle values.
    pub fn median(&self) -> Option<f64> {
        median_by_rank(self.total, |r| self.value_at_rank(r))
    }
}

fn median_by_rank(n: u64, at: impl Fn(u64) -> f64) -> Option<f64> {
    match n {
        0 => None,
        n if n % 2 == 1 => Some(at(n / 2)),
        n => Some(0.5 * (at(n / 2 - 1) + at(n / 2))),
    }
}

/// Running moments plus a median sketch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamingStats {
    pub moments: RunningStats,
    pub sketch: QuantileSketch,
}

impl Default for StreamingStats {
    fn default() -> Self {
        Self {
            moments: RunningStats::default(),
            sketch: QuantileSketch::for_db(),
        }
    }
}

impl StreamingStats {
    pub fn update(&mut self, x: f64) {
        self.moments.update(x);
        self.sketch.update(x);
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self {
            moments: self.moments.merge(&other.moments),
            sketch: self.sketch.merge(&other.sketch),
        }
    }

    pub fn count(&self) -> u64 {
        self.moments.count
    }

    pub fn mean(&self) -> f64 {
        self.moments.mean
    }

    pub fn median(&self) -> Option<f64> {
        self.sketch.median()
    }
}

/// Exact histogram over CQI values 0..=15.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CqiHistogram {
    pub counts: [u64; MAX_CQI as usize + 1],
}

impl CqiHistogram {
    pub fn update(&mut self, cqi: u8) {
        self.counts[usize::from(cqi.min(MAX_CQI))] += 1;
    }

    pub fn merge(&self, other: &Self) -> Self {
        let mut counts = self.counts;
        counts.iter_mut().zip(&other.counts).for_each(|(a, b)| *a += b);
        Self { counts }
    }

    pub fn count(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn value_at_rank(&self, rank: u64) -> f64 {
        let mut seen = 0;
        for (cqi, &c) in self.counts.iter().enumerate() {
            seen += c;
            if seen > rank {
                return cqi as f64;
            }
        }
        unreachable!("rank beyond total count")
    }

    pub fn median(&self) -> Option<f64> {
        median_by_rank(self.count(), |r| self.value_at_rank(r))
    }
}

/// Wilson score interval for an error rate of `errors` out of `trials` at two-sided `level`.
pub fn bler_ci(errors: u64, trials: u64, level: f64) -> (f64, f64) {
    assert!(trials >= 1, "need at least one trial");
    assert!(level > 0.0 && level < 1.0, "confidence level must lie in (0, 1)");
    let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // at p = 0 or 1 the exact bound equals p; rounding can land just inside it
    ((centre - half).clamp(0.0, p), (centre + half).clamp(p, 1.0))
}
