//! The lemma checks behind `helio-isp verify-lemmas`, on the shipped config.
//!
//! ```bash
//! cargo run --release --example verify_lemmas
//! ```

use helio_isp::verify::verify_lemmas;
use helio_isp::ExperimentConfig;

fn main() -> helio_isp::Result<()> {
    let cfg = ExperimentConfig::default_config();
    let report = verify_lemmas(&cfg)?;
    for c in &report.checks {
        println!(
            "{:<4} {:<26} {}",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    println!("\nall passed: {}", report.all_passed());
    Ok(())
}
