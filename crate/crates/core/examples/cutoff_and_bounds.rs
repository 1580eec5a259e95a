//! Cutoff radius, harmonic-measure bound, stability bounds and the n0 table.
//!
//! ```bash
//! cargo run --release --example cutoff_and_bounds
//! ```

use helio_isp::continuation::{m2_const, n0_of_k};
use helio_isp::spectral::{
    bound_thm1, bound_thm2, cutoff_s_ln, harmonic_measure_lb, BoundParams, HarmonicMeasureBound,
};

fn main() -> helio_isp::Result<()> {
    println!("cutoff at K = 2, alpha = 0.5, R = 1");
    for ln_eps in [-10.0, -100.0, -1e3, -1e4, -1e6] {
        let (s, case) = cutoff_s_ln(2.0, ln_eps, 0.5, 1.0)?;
        println!("  ln eps = {ln_eps:<8e} s = {s:<10.5} {case:?}");
    }

    let h = HarmonicMeasureBound { k_max: 1.0 };
    println!("\nharmonic measure lower bound, K = 1");
    for k in [1.1, 2f64.powf(0.25), 1.5, 2.0, 4.0] {
        println!("  k = {k:<8.4} lb = {:.6}", harmonic_measure_lb(&h, k)?);
    }

    let p = BoundParams {
        alpha: 0.5,
        c: 1.0,
        m: 1.0,
        m0: 1.0,
        n: 1,
        radius: 1.0,
    };
    println!("\nbounds with C = M = M0 = 1, n = 1, alpha = 0.5");
    println!("  K    eps     bound1       bound2");
    for k in [2.0, 4.0, 8.0] {
        for eps in [1e-4, 1e-8] {
            println!(
                "  {k:<4} {eps:<7e} {:<12.4e} {:.4e}",
                bound_thm1(&p, k, eps)?,
                bound_thm2(&p, k, eps)?
            );
        }
    }

    println!("\nn0 and M2 (|f|_L1 = 1)");
    for k in [0.25, 1.25, 2.0, 5.0, 12.5] {
        println!(
            "  k = {k:<6} n0 = {:<3} M2 = {:.4e}",
            n0_of_k(k),
            m2_const(k, 1.0)
        );
    }
    Ok(())
}
