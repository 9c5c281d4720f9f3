//! Accuracy report over the six scenario buckets and the simulated walk
//! benchmark.

mod error;
pub mod methods;
pub mod report;
pub mod sim;

pub use error::{Error, Result};
pub use methods::{DepthT, IdentityStub, Method, Methods, ModelPolicy, Predictor};
pub use report::{evaluate_methods, EvalReport, ReportMetadata, ReportRow, REFERENCE_ACA};
pub use sim::{benchmark_navigation, trial_seed, PolicySpec, PolicyStats, SimReport, TrialRecord};
