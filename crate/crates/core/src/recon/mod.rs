//! Predictor-corrector sampling with data consistency, and the
//! multi-model cascade and parallel reconstruction loops.

mod batch;
mod engine;
mod slots;
mod steps;

pub use batch::{
    derive_seed, gaussian_posterior_mean, mean_kspace, reconstruct_coils, reconstruct_many, relative_l2, thread_cap,
    MultiCoilResult, THREADS_ENV,
};
pub use engine::{
    cascade_reconstruct, cascade_reconstruct_observed, generate, generate_observed, parallel_reconstruct,
    parallel_reconstruct_observed, reconstruct, LevelDiagnostic, ReconResult, SlotEvent,
};
pub use slots::{Combination, MaskedUpdate, ModelSlot, ReconConfig, Role, SlotTransform};
pub use steps::{
    corrector_step, data_consistency, predictor_step, CorrectorState, DcMode, StepSize, DEFAULT_EPS_FLOOR, DEFAULT_SNR,
};
