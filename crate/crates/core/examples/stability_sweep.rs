//! Sweep (K, eps, delta), write the records and the report.
//!
//! ```bash
//! cargo run --release --example stability_sweep
//! cargo run --release --example stability_sweep -- configs/increasing_stability.json
//! ```

use std::path::PathBuf;

use helio_isp::harness::{report, run_sweep};
use helio_isp::ExperimentConfig;

fn main() -> helio_isp::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(p) => ExperimentConfig::load(&PathBuf::from(p))?,
        None => ExperimentConfig::default_config(),
    };
    let out = cfg.output_dir.clone();
    let records = run_sweep(&cfg, Some(&out.join("records.csv")))?;

    println!("K     eps      err_l2      err_hm1     bound2      gamma_k  gamma_ang  status");
    for r in &records {
        println!(
            "{:<5} {:<8.0e} {:<11.4e} {:<11.4e} {:<11.4e} {:<8.4} {:<10.4} {}",
            r.k_max, r.eps, r.err_l2, r.err_hm1, r.bound2, r.gamma_k, r.gamma_angle, r.status
        );
    }

    let summary = report(&records, Some(&cfg.bound_template()?), &out.join("report"))?;
    println!("\nbound fit: {}", summary.fit_status);
    if let Some(f) = &summary.fit {
        println!(
            "  alpha = {:.4}, C = {:.4e} (least squares {:.4e}), rms log residual {:.3}",
            f.params.alpha, f.params.c, f.c_least_squares, f.rms_log_residual
        );
    }
    println!("degenerate plots: {:?}", summary.degenerate_plots);
    println!("report written to {}", out.join("report").display());
    Ok(())
}
