//! Simulation and central-limit diagnostics for self-similar Gaussian
//! processes given in the φ-representation of their covariance.

pub mod analysis;
pub mod cli;
pub mod covgrid;
pub mod error;
pub mod hermite;
pub mod limitvar;
pub mod matrix;
pub mod montecarlo;
pub mod models;
pub mod numeric;
pub mod quadrature;
pub mod sampler;

pub use covgrid::IncrementCovariance;
pub use error::{Error, Result};
pub use hermite::{FunctionSpec, HermiteFunction};
pub use limitvar::{sigma_q_sq, sigma_sq, LimitVariance};
pub use sampler::{sample_batch, SampleBatch, Sampler};
pub use models::{list_models, ModelKind, ModelSpec};
pub use montecarlo::{run_experiment, ExperimentConfig, ExperimentResult, Tolerances};
pub use analysis::{check_all, contraction_norm, contraction_report, tv_bound, BoundCheckReport, ContractionReport};
