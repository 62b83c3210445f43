//! Slot-synchronous simulator of a resource-pooling switch: a VOQ crossbar
//! whose ports are split between line cards (TPorts) and network-function
//! servers (FPorts), with iSLIP, FIRM and BSC-FIRM schedulers.
//!
//! Statistics are generic over [`Scalar`]; the aliases below fix the two
//! instantiations the crate uses.

pub mod classifier;
pub mod config;
pub mod engine;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod nfp;
pub mod scalar;
pub mod sched;
pub mod traffic;

pub use classifier::{ChainDef, Classifier, Fib, Placement, ServerDef, SfpHop, SfpTag};
pub use config::ConfigFile;
pub use engine::{SimConfig, Simulation, SlotReport};
pub use error::{ConfigError, MetricError, SimError};
pub use harness::{run_experiment, SweepPlan, SweepRow};
pub use metrics::MetricsLedger;
pub use model::{Cell, PortId, PortLayout, Slot, SwitchState};
pub use scalar::Scalar;
pub use sched::{Matching, ScKey, SchedulerKind};
pub use traffic::{Arrival, TrafficModel, TrafficSpec};

/// Working floating-point type for reported statistics.
pub type Real = f64;

/// Exact rational used to cross-check floating-point statistics.
pub type ExactRatio = num_rational::Ratio<u64>;
