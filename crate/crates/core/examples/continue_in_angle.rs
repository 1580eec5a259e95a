//! Continue one wavenumber shell from the data cap to a larger chart patch.
//!
//! Two off-center Gaussians give a far field whose modulus varies with the
//! direction and peaks outside the data cap, so the extension has something
//! to recover and the exponent reacts to the patch size.
//!
//! ```bash
//! cargo run --release --example continue_in_angle
//! ```

use std::f64::consts::PI;

use helio_isp::continuation::{
    continue_in_angle, inscribed_half_width, AngleContinuationProblem, Patch, RegularizationSpec,
};
use helio_isp::quadrature::{fibonacci_cap, ChartFrame};
use helio_isp::source_models::source_norms;
use helio_isp::{QuadratureSpec, SourceComponent, SourceModel, Vec3};
use num_complex::Complex64;

fn main() -> helio_isp::Result<()> {
    let source = SourceModel::new(
        1.7,
        vec![
            SourceComponent::gaussian(Vec3::new(0.5, 0.0, 0.0), Complex64::new(1.0, 0.0), 0.2),
            SourceComponent::gaussian(
                Vec3::new(-0.5, 0.0, 0.0),
                Complex64::from_polar(0.5, -1.5),
                0.2,
            ),
        ],
    )?;
    let (k, delta) = (3.0, 0.3);
    let x0 = Vec3::new(0.0, 0.0, 1.0);
    let frame = ChartFrame::around(&x0);
    let l1 = source_norms(&source, &QuadratureSpec::default())?.l1;
    let scale = (2.0 * PI).powf(1.5);
    let u = |d: &Vec3| source.closed_form_fourier(&(d * k)) * scale;

    let dirs = fibonacci_cap(&x0, delta, 96);
    let values: Vec<Complex64> = dirs.iter().map(&u).collect();

    println!("delta1   |E|/|Omega|  degree  rel.err   gamma_emp  slack      passed");
    for delta1 in [0.45, 0.6, 0.9] {
        let h = inscribed_half_width(delta1);
        let omega = Patch::centered(h);
        let problem = AngleContinuationProblem::from_directions(
            k,
            frame,
            &dirs,
            &values,
            omega,
            l1,
            source.support_radius(),
        );
        let n = 25;
        let targets: Vec<(f64, f64)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                let t = |m: usize| -h + 2.0 * h * (m as f64 + 0.5) / n as f64;
                (t(i), t(j))
            })
            .collect();
        let res = continue_in_angle(&problem, &targets, &RegularizationSpec::default())?;
        let truth: Vec<Complex64> = targets
            .iter()
            .map(|&(t, q)| u(&frame.chart(t, q)))
            .collect();
        let sup = truth.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let err = res
            .extended
            .iter()
            .zip(&truth)
            .map(|((_, v), w)| (v - w).norm())
            .fold(0.0, f64::max);
        let ratio = problem.patch_small.area() / omega.area();
        println!(
            "{delta1:<8.2} {ratio:<12.4} {:<7} {:<9.3e} {:<10.5} {:<10.3e} {}",
            res.degree,
            err / sup,
            res.gamma_emp,
            res.certificate.slack,
            res.certificate.passed()
        );
    }
    Ok(())
}
