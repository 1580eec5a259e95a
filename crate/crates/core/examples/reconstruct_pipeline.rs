//! Reconstruct a Gaussian from limited-aperture data at several band limits.
//!
//! ```bash
//! cargo run --release --example reconstruct_pipeline
//! cargo run --release --example reconstruct_pipeline -- 1e-6
//! ```

use std::time::Instant;

use helio_isp::{
    reconstruct_pipeline, synthesize_dataset, Aperture, GridSpec, PipelineConfig, QuadratureSpec,
    SourceModel, Vec3,
};

fn main() -> helio_isp::Result<()> {
    let eps: f64 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(1e-4);
    let source = SourceModel::centered_gaussian(0.2, 1.2)?;
    let aperture = Aperture::new(Vec3::new(0.0, 0.0, 1.0), 0.5)?;
    let grid = GridSpec::new(24)?;
    let cfg = PipelineConfig {
        radius: source.support_radius(),
        ..PipelineConfig::default()
    };
    let quad = QuadratureSpec::new(64);

    println!("eps = {eps:e}, delta = 0.5");
    println!("K     s        case        err_l2      err_hm1     angle deg  time");
    for k_max in [2.0, 4.0, 8.0, 16.0] {
        let t = Instant::now();
        let ds = synthesize_dataset(&source, &aperture, k_max, 64, 24, eps, 7, &quad)?;
        let res = reconstruct_pipeline(&ds, &cfg, &grid, Some(&source))?;
        println!(
            "{k_max:<5} {:<8.4} {:<11} {:<11.4e} {:<11.4e} {:<10} {:.2?}",
            res.cutoff_s,
            format!("{:?}", res.cutoff_case),
            res.err_l2.unwrap_or(f64::NAN),
            res.err_hm1.unwrap_or(f64::NAN),
            res.angle_degree,
            t.elapsed()
        );
    }
    Ok(())
}
