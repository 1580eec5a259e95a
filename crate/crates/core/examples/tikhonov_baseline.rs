//! Direct Tikhonov least squares on the voxel grid, next to the continuation
//! pipeline, for the same noisy dataset.
//!
//! ```bash
//! cargo run --release --example tikhonov_baseline
//! ```

use helio_isp::reconstruct::{error_metrics, tikhonov_solve};
use helio_isp::{
    reconstruct_pipeline, synthesize_dataset, Aperture, GridSpec, PipelineConfig, QuadratureSpec,
    SourceModel, Vec3,
};

fn main() -> helio_isp::Result<()> {
    let source = SourceModel::centered_gaussian(0.2, 1.2)?;
    let aperture = Aperture::new(Vec3::z(), 0.5)?;
    let ds = synthesize_dataset(
        &source,
        &aperture,
        4.0,
        64,
        16,
        1e-4,
        3,
        &QuadratureSpec::new(64),
    )?;
    let grid = GridSpec::new(16)?;
    let r = source.support_radius();

    println!("lambda     cg iters  err_l2      err_hm1");
    for lambda in [1e-2, 1e-4, 1e-6, 1e-8] {
        let (v, iters) = tikhonov_solve(&ds, &grid, r, lambda)?;
        let (l2, hm1) = error_metrics(&v, &source);
        println!("{lambda:<10e} {iters:<9} {l2:<11.4e} {hm1:.4e}");
    }

    let cfg = PipelineConfig {
        radius: r,
        ..PipelineConfig::default()
    };
    let res = reconstruct_pipeline(&ds, &cfg, &grid, Some(&source))?;
    println!(
        "\npipeline   s = {:.3}  err_l2 {:.4e}  err_hm1 {:.4e}",
        res.cutoff_s,
        res.err_l2.unwrap_or(f64::NAN),
        res.err_hm1.unwrap_or(f64::NAN)
    );
    Ok(())
}
