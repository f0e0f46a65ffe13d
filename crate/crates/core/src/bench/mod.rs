//! Synthetic data, recovery metrics and experiment drivers.

pub mod experiments;
pub mod metrics;
pub mod rng;
pub mod synth;

pub use experiments::{
    inpaint, phase_transition, table3_experiment, CompletionMethod, PhaseConfig, PhaseGrid,
    RpcaMethod, Table3Config, Table3Result,
};
pub use metrics::{f_measure, psnr, rse};
pub use synth::{gen_synthetic, DRule, ExperimentConfig, GroundTruth};
