//! Synthesize limited-aperture far-field data and compare it with the
//! closed-form transform, then write the dataset to disk.
//!
//! ```bash
//! cargo run --release --example synthesize_far_field
//! ```

use std::f64::consts::PI;
use std::path::Path;

use helio_isp::forward::far_field;
use helio_isp::{synthesize_dataset, Aperture, QuadratureSpec, SourceComponent, SourceModel, Vec3};
use num_complex::Complex64;

fn main() -> helio_isp::Result<()> {
    let source = SourceModel::new(
        1.5,
        vec![
            SourceComponent::gaussian(Vec3::new(0.2, -0.1, 0.0), Complex64::new(1.0, 0.0), 0.2),
            SourceComponent::bump(Vec3::new(-0.3, 0.2, 0.1), Complex64::new(0.0, 0.7), 0.4, 2),
        ],
    )?;
    let quad = QuadratureSpec::new(64);
    let scale = (2.0 * PI).powf(1.5);

    println!("k      x_hat                      |u_quad|     rel. diff");
    for (k, d) in [
        (1.0, Vec3::z()),
        (5.0, Vec3::new(1.0, 1.0, 0.0)),
        (12.0, Vec3::new(-1.0, 0.5, 2.0)),
    ] {
        let d = d.normalize();
        let q = far_field(&source, &d, k, &quad)?;
        let exact = source.closed_form_fourier(&(d * k)) * scale;
        println!(
            "{k:<6} ({:+.3}, {:+.3}, {:+.3})   {:<12.5e} {:.2e}",
            d.x,
            d.y,
            d.z,
            q.norm(),
            (q - exact).norm() / exact.norm()
        );
    }

    let aperture = Aperture::new(Vec3::z(), 0.5)?;
    let ds = synthesize_dataset(&source, &aperture, 4.0, 64, 24, 1e-4, 1, &quad)?;
    println!(
        "\ndataset: {} directions x {} wavenumbers, noise {:e}, sup |u| = {:.4e}",
        ds.n_dirs(),
        ds.n_freqs(),
        ds.noise_level,
        helio_isp::forward::sup_norm(&ds)?
    );
    let out = Path::new("out/examples");
    ds.write(out, "synthesized")?;
    println!("written to {}", out.display());
    Ok(())
}
