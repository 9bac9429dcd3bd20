//! Slotted-ALOHA random access as a non-cooperative game over i.i.d. Rayleigh
//! fading channels with capture.
//!
//! Each node picks the smallest average transmission probability that still
//! meets its throughput demand. The crate provides:
//!
//! - [`models`]: capture rules (SINR with ratio `b`, power with guard zone `Δ`),
//!   channel-state modes and fading draws;
//! - [`analytic`]: closed-form and quadrature throughput for every
//!   capture/CSI regime;
//! - [`solver`]: constrained Nash equilibria (best response, homogeneous root
//!   scans, and the concave potential for perfect power capture);
//! - [`simulator`]: a slot-level Monte Carlo engine, used as an independent oracle;
//! - [`dynamics`]: the distributed probability update and its traces;
//! - [`paradox`]: CSI vs no-CSI throughput comparisons (Braess-like paradoxes).

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod models;
pub mod paradox;
pub mod quadrature;
pub mod rng;
pub mod simulator;
pub mod solver;

pub use analytic::{Csi, Regime, ThroughputVector};
pub use dynamics::{DynamicsConfig, DynamicsTrace, EpsSchedule, Estimator};
pub use error::{Error, Result};
pub use models::{CaptureModel, CsiMode, Guard, NodeSpec, QuantizedCsi, Scenario, SlotOutcome};
pub use paradox::{HeterogeneousGap, ParadoxReport};
pub use simulator::{SimTrace, ThroughputEstimate};
pub use solver::{Classification, EquilibriumResult, SolveOptions};
