//! Split the spectral energy at radius s into I1 (inside) and I2 (outside)
//! and watch the tail of a C^1 bump decay like s^{-5}.
//!
//! ```bash
//! cargo run --release --example plancherel_split
//! ```

use helio_isp::source_models::source_norms;
use helio_isp::spectral::{i1, i2, RadialQuadrature};
use helio_isp::{QuadratureSpec, SourceComponent, SourceModel, Vec3};
use num_complex::Complex64;

fn main() -> helio_isp::Result<()> {
    let rq = RadialQuadrature::default();
    let gaussian = SourceModel::centered_gaussian(0.2, 1.2)?;
    let bump = SourceModel::new(
        1.0,
        vec![SourceComponent::bump(
            Vec3::zeros(),
            Complex64::new(1.0, 0.0),
            0.5,
            2,
        )],
    )?;

    for (name, src) in [("gaussian", &gaussian), ("bump m=2", &bump)] {
        let l2 = source_norms(src, &QuadratureSpec::default())?.l2;
        println!("{name}: |f|^2 = {:.8e}", l2 * l2);
        println!("  s      I1           I2           rel. defect");
        for s in [1.0, 2.0, 5.0, 10.0, 20.0] {
            let (a, b) = (i1(s, src, &rq), i2(s, src, &rq));
            println!(
                "  {s:<6} {a:<12.6e} {b:<12.6e} {:.2e}",
                (a + b - l2 * l2).abs() / (l2 * l2)
            );
        }
    }

    let s: Vec<f64> = (0..8)
        .map(|i| 4.0 * 2f64.powf(i as f64 * 3.0 / 7.0))
        .collect();
    let tail: Vec<f64> = s.iter().map(|&s| i2(s, &bump, &rq)).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = s.iter().zip(&tail).map(|(s, t)| (s.ln(), t.ln())).unzip();
    let (mx, my) = (x.iter().sum::<f64>() / 8.0, y.iter().sum::<f64>() / 8.0);
    let slope = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    println!("\nbump tail slope on [4, 32]: {slope:.3}");
    Ok(())
}
