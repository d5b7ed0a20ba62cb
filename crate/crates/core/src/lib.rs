//! Robust estimation for interval-monitored simple step-stress accelerated life
//! tests with independent exponential competing risks.
//!
//! Estimates minimize the density power divergence between observed and model
//! multinomial cell frequencies; `β = 0` gives maximum likelihood.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod characteristics;
pub mod error;
pub mod estimation;
pub mod io;
pub mod model;
pub mod optimize;
pub mod robustness;
pub mod simulation;
pub mod stats;

pub use bootstrap::{bca_interval, BcaInterval, BootstrapConfig, BootstrapResult, BootstrapTarget};
pub use characteristics::{Characteristic, CharacteristicEstimate, Scope};
pub use error::{Error, Result};
pub use estimation::{fit, CountData, FitOptions, FitResult};
pub use io::{ArrheniusSpec, Dataset, LoadOptions};
pub use model::{CellProbabilities, ModelParams, StepStressDesign, StressLevel};
pub use robustness::{SensitivityCurve, SensitivityKind};
pub use simulation::{IntervalMethod, SimulationReport, SimulationScenario};
pub use stats::Interval;
