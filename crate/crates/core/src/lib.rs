//! Link-level simulator for power-domain APQ modulation in indoor
//! visible-light downlinks, with a GSSK benchmark.
//!
//! * [`channel`]: Lambertian line-of-sight gain and transmit-SNR scaling.
//! * [`apq`]: symbol decomposition, superposition and SIC detection.
//! * [`analysis`]: closed-form 16-ary SER.
//! * [`gssk`]: spatial shift keying with ML detection.
//! * [`montecarlo`]: seeded SER estimation, sweeps and throughput maps.
//! * [`scenario`], [`cli`]: scenario files and the command layer.
//! * [`validation`]: end-to-end self-checks.

pub mod analysis;
pub mod apq;
pub mod channel;
pub mod cli;
pub mod error;
pub mod gssk;
pub mod montecarlo;
pub mod scenario;
pub mod validation;

pub use apq::{ApqConfig, ComponentIndices, SicPolicy};
pub use channel::{DetectionScale, Luminaire, Photodetector, Vec3};
pub use error::{Error, Result};
pub use gssk::GsskConfig;
pub use montecarlo::{Scheme, SerEstimate, SweepResult, ThroughputMap};
pub use scenario::{load_scenario, Scenario, ScenarioConfig};
