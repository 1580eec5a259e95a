use std::f64::consts::PI;

use helio_isp::harness::{run_sweep, StabilityRecord};
use helio_isp::source_models::source_norms;
use helio_isp::spectral::{
    bound_fit, bound_thm1, bound_thm2, cutoff_s, cutoff_s_ln, fourier_on_cone, harmonic_measure_lb,
    i1, i1_complex, i2, sector_j, spectral_factor, BoundKind, BoundParams, CutoffCase,
    HarmonicMeasureBound, RadialQuadrature,
};
use helio_isp::{
    synthesize_dataset, Aperture, Error, ExperimentConfig, QuadratureSpec, SourceModel, Vec3,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn gaussian() -> SourceModel {
    SourceModel::centered_gaussian(0.2, 1.2).unwrap()
}

fn params(alpha: f64, c: f64) -> BoundParams {
    BoundParams {
        alpha,
        c,
        m: 3.0,
        m0: 0.5,
        n: 1,
        radius: 1.0,
    }
}

fn record(k: f64, eps: f64, l2: f64, hm1: f64) -> StabilityRecord {
    StabilityRecord {
        k_max: k,
        eps,
        delta: 0.5,
        err_l2: l2,
        err_hm1: hm1,
        cutoff_s: k,
        bound1: 0.0,
        bound2: 0.0,
        gamma_k: 0.5,
        gamma_angle: 0.5,
        status: "ok".into(),
        wall_s: 0.0,
    }
}

#[test]
fn i1_is_nondecreasing_and_closes_at_large_radius() {
    let m = gaussian();
    let rq = RadialQuadrature::default();
    let v: Vec<f64> = (1..=10).map(|j| i1(2.0 * j as f64, &m, &rq)).collect();
    assert!(v.windows(2).all(|w| w[1] >= w[0]));
    let total = (PI * 0.04f64).powf(1.5);
    assert!((i1(40.0, &m, &rq) - total).abs() <= 1e-6 * total);
}

#[test]
fn zero_source_has_no_energy() {
    let m = SourceModel::empty(1.0);
    let rq = RadialQuadrature::default();
    assert_eq!(i1(3.0, &m, &rq), 0.0);
    assert_eq!(i2(3.0, &m, &rq), 0.0);
    assert_eq!(sector_j(2.0, 0.0, 1.0), 0.0);
}

#[test]
fn sector_j_decays() {
    let m = gaussian();
    let rq = RadialQuadrature::default();
    let top = i1(60.0, &m, &rq);
    assert!(sector_j(60.0, top, 1.2) < 1e-60);
}

#[test]
fn complex_i1_bounded_by_growth_estimate() {
    let m = gaussian();
    let l1 = source_norms(&m, &QuadratureSpec::default()).unwrap().l1;
    for (r, th) in [(2.0, 0.3), (5.0, 0.7), (9.0, -0.5)] {
        let k = Complex64::from_polar(r, th);
        let v = i1_complex(&m, k).unwrap();
        let bound =
            4.0 * PI / 3.0 * (2.0 * PI).powi(-3) * l1 * l1 * r.powi(3) * (2.4 * k.im.abs()).exp();
        assert!(v.norm() <= bound, "{k}: {} > {bound}", v.norm());
    }
}

#[test]
fn harmonic_measure_decreases_past_the_junction() {
    let h = HarmonicMeasureBound { k_max: 1.5 };
    let ks: Vec<f64> = (1..8)
        .map(|j| 1.5 * 2f64.powf(0.25) + 0.3 * j as f64)
        .collect();
    let v: Vec<f64> = ks
        .iter()
        .map(|&k| harmonic_measure_lb(&h, k).unwrap())
        .collect();
    assert!(v.windows(2).all(|w| w[1] < w[0]));
    assert!(matches!(
        harmonic_measure_lb(&h, 1.5),
        Err(Error::OutOfDomain(_))
    ));
}

#[test]
fn log_branch_scales_with_quartic_root() {
    let mut last = 0.0;
    for ln_eps in [-1e4, -1e6, -1e8] {
        let (a, c1) = cutoff_s_ln(2.0, ln_eps, 0.5, 1.0).unwrap();
        let (b, c2) = cutoff_s_ln(2.0, 2.0 * ln_eps, 0.5, 1.0).unwrap();
        assert_eq!((c1, c2), (CutoffCase::LogBranch, CutoffCase::LogBranch));
        last = b / a;
    }
    assert!((last - 2f64.powf(0.25)).abs() < 1e-12);
    assert!(matches!(
        cutoff_s(2.0, (-1f64).exp(), 0.5, 1.0),
        Err(Error::EpsTooLarge(_))
    ));
}

#[test]
fn bounds_follow_their_formulas() {
    let p = BoundParams {
        alpha: 0.5,
        c: 1.0,
        m: 1.0,
        m0: 1.0,
        n: 1,
        radius: 1.0,
    };
    let (k, eps) = (3.0f64, 1e-6f64);
    let l = eps.ln().abs();
    let holder = k.powi(3) * (2.0 * k * 0.5).exp() * eps;
    let b1 = holder + 1.0 / (k.powf(2.0 / 3.0) * l.powf(0.25));
    let b2 = holder + 1.0 / (k.powf(4.0 / 3.0) * l.sqrt());
    assert!((bound_thm1(&p, k, eps).unwrap() - b1).abs() <= 1e-14 * b1);
    assert!((bound_thm2(&p, k, eps).unwrap() - b2).abs() <= 1e-14 * b2);

    // eps -> 0 leaves the logarithmic term, which falls with K
    let tiny = 1e-300f64;
    let log_only = 1.0 / (k.powf(2.0 / 3.0) * tiny.ln().abs().powf(0.25));
    assert!((bound_thm1(&p, k, tiny).unwrap() - log_only).abs() <= 1e-12 * log_only);
    assert!(bound_thm2(&p, 4.0, tiny).unwrap() < bound_thm2(&p, 2.0, tiny).unwrap());
}

#[test]
fn fit_recovers_its_own_forward_model() {
    let truth = params(0.4, 2.0);
    let mut records = Vec::new();
    for k in [2.0, 3.0, 4.0] {
        for eps in [1e-2, 1e-3, 1e-4, 1e-5] {
            let b1 = bound_thm1(&truth, k, eps).unwrap();
            let b2 = bound_thm2(&truth, k, eps).unwrap();
            records.push(record(k, eps, b1.sqrt(), b2.sqrt()));
        }
    }
    let fit = bound_fit(
        &records,
        &params(0.5, 1.0),
        &[BoundKind::L2, BoundKind::Hm1],
    )
    .unwrap();
    assert!(
        (fit.params.alpha - 0.4).abs() < 1e-6,
        "{}",
        fit.params.alpha
    );
    assert!((fit.params.c - 2.0).abs() < 1e-6, "{}", fit.params.c);
}

#[test]
fn fit_rejects_degenerate_records() {
    let zeros: Vec<StabilityRecord> = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
        .iter()
        .map(|&e| record(2.0, e, 0.0, 0.0))
        .collect();
    assert!(matches!(
        bound_fit(&zeros, &params(0.5, 1.0), &[BoundKind::L2]),
        Err(Error::FitOutOfRange { .. })
    ));
    let narrow: Vec<StabilityRecord> = (0..6)
        .map(|j| record(2.0, 1e-3 * (1.0 + j as f64), 0.1, 0.01))
        .collect();
    assert!(matches!(
        bound_fit(&narrow, &params(0.5, 1.0), &[BoundKind::L2]),
        Err(Error::InsufficientRecords(_))
    ));
}

#[test]
fn fitted_bound_majorizes_pipeline_records() {
    let mut cfg = ExperimentConfig::default_config();
    cfg.k_list = vec![2.0, 4.0, 8.0];
    let records = run_sweep(&cfg, None).unwrap();
    let template = cfg.bound_template().unwrap();
    let fit = bound_fit(&records, &template, &[BoundKind::L2, BoundKind::Hm1]).unwrap();
    for r in &records {
        let b1 = bound_thm1(&fit.params, r.k_max, r.eps).unwrap();
        let b2 = bound_thm2(&fit.params, r.k_max, r.eps).unwrap();
        assert!(r.err_l2.powi(2) <= b1 * (1.0 + 1e-12) && r.err_hm1.powi(2) <= b2 * (1.0 + 1e-12));
    }
}

#[test]
fn cone_samples_rescale_the_data() {
    let m = gaussian();
    let ap = Aperture::new(Vec3::z(), 0.5).unwrap();
    let ds = synthesize_dataset(&m, &ap, 3.0, 10, 6, 0.0, 0, &QuadratureSpec::default()).unwrap();
    let cone = fourier_on_cone(&ds).unwrap();
    assert_eq!(cone.len(), 60);
    for (p, v) in cone.points.iter().zip(&cone.values) {
        let exact = m.closed_form_fourier(p);
        assert!(
            (v - exact).norm() <= 1e-6 * exact.norm() + spectral_factor() * m.far_field_floor()
        );
    }
    let path = std::env::temp_dir().join(format!("helio-isp-cone-{}.csv", std::process::id()));
    cone.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(text.starts_with("xi_x,xi_y,xi_z,re,im,provenance\n"));
    assert_eq!(text.lines().count(), 61);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn plancherel_split_closes(s in 1.0f64..20.0) {
        let m = gaussian();
        let rq = RadialQuadrature::default();
        let total = (PI * 0.04f64).powf(1.5);
        prop_assert!((i1(s, &m, &rq) + i2(s, &m, &rq) - total).abs() <= 1e-3 * total);
    }

    #[test]
    fn bounds_are_positive_and_ordered_in_c(k in 1.01f64..10.0, ln_eps in -200.0f64..-1.01, a in 0.01f64..0.99) {
        let p = params(a, 1.0);
        let q = params(a, 2.0);
        let b = bound_thm1(&p, k, ln_eps.exp()).unwrap();
        prop_assert!(b > 0.0);
        prop_assert!((bound_thm1(&q, k, ln_eps.exp()).unwrap() - 2.0 * b).abs() <= 1e-12 * b);
    }
}
