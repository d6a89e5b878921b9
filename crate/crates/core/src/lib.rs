//! Link-level simulator for non-pilot interference.
//!
//! Models an OFDM downlink subframe with pilot-aided SINR estimation, periodic
//! CQI feedback, CQI-driven MCS selection and HARQ retransmissions, and
//! measures how interference placed only on non-pilot resource elements
//! defeats the estimator and inflates retransmission latency.
//!
//! Module map:
//! - [`grid`]: resource-element grid and pilot layout
//! - [`interference`]: pilot, non-pilot and barrage interference maps
//! - [`channel`]: block-fading tapped-delay-line channel and per-RE SINR
//! - [`csi`]: EESM estimation, SINR-to-CQI mapping, feedback schedule
//! - [`linkadapt`]: MCS table, BLER abstraction, delivered bits
//! - [`harq`]: geometric retransmission model and HARQ process
//! - [`sim`]: calibrated closed-loop Monte Carlo sweeps
//! - [`metrics`]: mergeable streaming statistics

pub mod channel;
pub mod csi;
pub mod error;
pub mod grid;
pub mod harq;
pub mod interference;
pub mod linkadapt;
pub mod metrics;
pub mod seeding;
pub mod sim;

pub use error::{Error, Result};
pub use grid::{build_grid, GridConfig, ReKind, ResourceGrid};
pub use interference::{apply_interference, InterferenceProfile, Strategy};
pub use sim::{run_point, run_sweep, PointMetrics, ScenarioConfig};
