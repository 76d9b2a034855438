pub mod chain;
pub mod error;
pub mod experiment;
pub mod fourier;
pub mod linalg;
pub mod local_time;
pub mod marp;
pub mod model;
pub mod montecarlo;
pub mod quadrature;
pub mod stats;

pub use chain::{GeneratorMatrix, ProbabilityVector, StochasticMatrix};
pub use error::{LltError, Result};
pub use experiment::{
    run_diagnostics, run_llt_experiment, run_uniform_sweep, ConvergenceReport, DiagnosticsBlock, ExperimentConfig,
    FamilyConfig, FamilyReport,
};
pub use fourier::{CovarianceMatrix, FourierMatrix};
pub use local_time::{DensitySeries, LocalTimeModel};
pub use marp::{GridSpec, KernelDensity, MarpModel};
pub use model::{LatticeChain, MapModel, ModelSpec};
pub use montecarlo::PathSample;
