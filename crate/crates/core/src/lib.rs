//! Multi-frequency inverse source problem for the Helmholtz equation with
//! limited-aperture far-field data.
//!
//! A compactly supported source `f` radiates at wavenumbers `k in (0, K)`; its
//! far field on the cap `|x_hat - x0_hat| < delta` is the only data. The crate
//! synthesizes such data, continues it analytically in angle and wavenumber,
//! inverts the continued spectrum, and compares the errors with the two-term
//! stability bounds.
//!
//! Each stage has a runnable example:
//!
//! - `synthesize_far_field`: sources, far fields and dataset files
//! - `plancherel_split`: the low/high frequency energy split
//! - `cutoff_and_bounds`: cutoff radius, harmonic-measure bound, stability bounds
//! - `continue_in_k`, `continue_in_angle`: the two continuation steps and their certificates
//! - `reconstruct_pipeline`: full reconstruction with error metrics
//! - `tikhonov_baseline`: the least-squares comparison method
//! - `stability_sweep`: a small sweep with records and report
//! - `verify_lemmas`: the lemma checks run by the CLI
//!
//! `HELIO_ISP_THREADS` sets the worker count (see [`init_threads`]).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod continuation;
pub mod error;
pub mod forward;
pub mod harness;
pub mod polyfit;
pub mod quadrature;
pub mod reconstruct;
pub mod source_models;
pub mod special;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use forward::{synthesize_dataset, Aperture, FarFieldDataset, QuadratureSpec};
pub use harness::{ExperimentConfig, StabilityRecord};
pub use reconstruct::{
    reconstruct_pipeline, reconstruct_tikhonov, GridSpec, PipelineConfig, VoxelGrid,
};
pub use source_models::{SourceComponent, SourceModel};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Floats in output files: 17 significant digits, so reruns are byte-identical.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Configure the global rayon pool. `HELIO_ISP_THREADS` wins over `requested`.
/// Returns the thread count in effect; a pool that is already built is kept.
pub fn init_threads(requested: Option<usize>) -> usize {
    let from_env = std::env::var("HELIO_ISP_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0);
    if let Some(n) = from_env.or(requested) {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    rayon::current_num_threads()
}
