use helio_isp::reconstruct::{
    error_metrics, reconstruct_truncated_fourier, tikhonov_objective, tikhonov_solve,
    BallQuadrature,
};
use helio_isp::source_models::source_norms;
use helio_isp::spectral::{i2, RadialQuadrature};
use helio_isp::{
    reconstruct_pipeline, reconstruct_tikhonov, synthesize_dataset, Aperture, FarFieldDataset,
    GridSpec, PipelineConfig, QuadratureSpec, SourceModel, Vec3, VoxelGrid,
};
use num_complex::Complex64;

fn gaussian() -> SourceModel {
    SourceModel::centered_gaussian(0.2, 1.2).unwrap()
}

fn oracle_reconstruction(m: &SourceModel, s: f64, n: usize, nodes_per_unit: usize) -> VoxelGrid {
    let r = m.support_radius();
    oracle_reconstruction_on(m, s, n, r, nodes_per_unit)
}

fn oracle_reconstruction_on(
    m: &SourceModel,
    s: f64,
    n: usize,
    grid_radius: f64,
    nodes_per_unit: usize,
) -> VoxelGrid {
    let ball = BallQuadrature::for_inversion(s, m.support_radius(), grid_radius, nodes_per_unit);
    let samples = ball.oracle_samples(m);
    reconstruct_truncated_fourier(&samples, &ball, &GridSpec::new(n).unwrap(), grid_radius).unwrap()
}

#[test]
fn zero_spectrum_gives_zero_grid() {
    let m = SourceModel::empty(1.2);
    let g = oracle_reconstruction(&m, 4.0, 16, 4);
    assert!(g.values.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
}

#[test]
fn wide_band_oracle_inversion_recovers_the_gaussian() {
    let m = gaussian();
    let g = oracle_reconstruction(&m, 30.0, 24, 2);
    let (l2, hm1) = error_metrics(&g, &m);
    let norm = source_norms(&m, &QuadratureSpec::default()).unwrap().l2;
    assert!(l2 / norm <= 1e-3, "{}", l2 / norm);
    assert!(hm1 <= l2);
}

#[test]
fn truncation_error_is_the_spectral_tail() {
    let m = gaussian();
    let s = 8.0;
    // the band-limited reconstruction rings outside the support, so the box is wider
    let g = oracle_reconstruction_on(&m, s, 32, 2.4, 8);
    let (l2, _) = error_metrics(&g, &m);
    let tail = i2(s, &m, &RadialQuadrature::default());
    assert!(
        (l2 * l2 - tail).abs() <= 0.1 * tail,
        "{} vs {tail}",
        l2 * l2
    );
}

#[test]
fn coverage_is_checked() {
    let m = gaussian();
    let r = m.support_radius();
    let ball = BallQuadrature::for_inversion(4.0, r, r, 4);
    let mut samples = ball.oracle_samples(&m);
    samples.points.pop();
    samples.values.pop();
    assert!(
        reconstruct_truncated_fourier(&samples, &ball, &GridSpec::new(16).unwrap(), r).is_err()
    );
}

fn noisy(
    k_max: f64,
    eps: f64,
    delta: f64,
    n_dirs: usize,
    n_freqs: usize,
    m: &SourceModel,
) -> FarFieldDataset {
    let ap = Aperture::new(Vec3::z(), delta).unwrap();
    synthesize_dataset(
        m,
        &ap,
        k_max,
        n_dirs,
        n_freqs,
        eps,
        11,
        &QuadratureSpec::default(),
    )
    .unwrap()
}

#[test]
fn zero_dataset_reconstructs_zero() {
    let m = gaussian();
    let ds = noisy(2.0, 0.0, 0.5, 64, 24, &m).scaled(Complex64::new(0.0, 0.0));
    let cfg = PipelineConfig {
        radius: m.support_radius(),
        f_l1_bound: Some(1.0),
        ..PipelineConfig::default()
    };
    let res = reconstruct_pipeline(&ds, &cfg, &GridSpec::new(16).unwrap(), Some(&m)).unwrap();
    assert!(res
        .grid
        .as_ref()
        .unwrap()
        .values
        .iter()
        .all(|v| v.norm() == 0.0));
    let norms = source_norms(&m, &QuadratureSpec::default()).unwrap();
    let (l2, hm1) = (res.err_l2.unwrap(), res.err_hm1.unwrap());
    assert!(
        (l2 - norms.l2).abs() <= 1e-4 * norms.l2,
        "{l2} {}",
        norms.l2
    );
    assert!(
        (hm1 - norms.h_minus_1).abs() <= 1e-4 * norms.h_minus_1,
        "{hm1} {}",
        norms.h_minus_1
    );
}

#[test]
fn pipeline_improves_with_the_band() {
    let m = gaussian();
    let cfg = PipelineConfig {
        radius: m.support_radius(),
        ..PipelineConfig::default()
    };
    let grid = GridSpec::new(24).unwrap();
    let errs: Vec<f64> = [2.0, 4.0, 8.0]
        .iter()
        .map(|&k| {
            let res = reconstruct_pipeline(&noisy(k, 1e-4, 0.5, 64, 24, &m), &cfg, &grid, Some(&m))
                .unwrap();
            let (l2, hm1) = (res.err_l2.unwrap(), res.err_hm1.unwrap());
            assert!(hm1 <= l2);
            hm1
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] <= 1.05 * w[0]), "{errs:?}");
}

#[test]
fn tikhonov_zero_data_and_penalty_dominance() {
    let m = gaussian();
    let ds = noisy(3.0, 0.0, 0.5, 16, 6, &m);
    let grid = GridSpec::new(16).unwrap();
    let zero =
        reconstruct_tikhonov(&ds.scaled(Complex64::new(0.0, 0.0)), &grid, 1.2, 1e-3).unwrap();
    assert!(zero.values.iter().all(|v| v.norm() == 0.0));

    let norms: Vec<f64> = [1e-4, 1e-2, 1.0]
        .iter()
        .map(|&l| reconstruct_tikhonov(&ds, &grid, 1.2, l).unwrap().l2_norm())
        .collect();
    assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
}

#[test]
fn tikhonov_minimizes_its_objective() {
    let m = gaussian();
    let ds = noisy(3.0, 1e-4, 0.5, 24, 8, &m);
    let grid = GridSpec::new(16).unwrap();
    let lambda = 1e-6;
    let (v, _) = tikhonov_solve(&ds, &grid, 1.2, lambda).unwrap();
    let truth = VoxelGrid::sample(&m, 1.2, 16);
    assert!(tikhonov_objective(&ds, &v, lambda) <= tikhonov_objective(&ds, &truth, lambda) + 1e-8);
}

#[test]
fn tikhonov_full_aperture_reaches_ten_percent() {
    // wide enough that the band |xi| < 8 holds all but ~1e-3 of the energy
    let m = SourceModel::centered_gaussian(0.35, 2.2).unwrap();
    let ds = noisy(8.0, 1e-4, 1.99, 200, 10, &m);
    let grid = GridSpec::new(16).unwrap();
    let norm = source_norms(&m, &QuadratureSpec::default()).unwrap().l2;
    let errs: Vec<(f64, f64)> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&l| {
            (
                l,
                error_metrics(&reconstruct_tikhonov(&ds, &grid, 2.2, l).unwrap(), &m).0 / norm,
            )
        })
        .collect();
    let best = errs.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    assert!(best <= 0.1, "{errs:?}");
}
