use std::f64::consts::PI;

use helio_isp::continuation::{
    cell_grid_gamma, continue_in_angle, continue_in_k, inscribed_half_width, m2_const, n0_of_k,
    AngleContinuationProblem, ContinuationResult, KContinuationProblem, Patch, RegularizationSpec,
    SamplePoint,
};
use helio_isp::forward::wavenumber_grid;
use helio_isp::quadrature::{fibonacci_cap, ChartFrame};
use helio_isp::source_models::source_norms;
use helio_isp::{Error, QuadratureSpec, SourceComponent, SourceModel, Vec3};
use num_complex::Complex64;
use proptest::prelude::*;

fn gaussian() -> SourceModel {
    SourceModel::centered_gaussian(0.2, 1.2).unwrap()
}

fn l1(m: &SourceModel) -> f64 {
    source_norms(m, &QuadratureSpec::default()).unwrap().l1
}

fn u(m: &SourceModel, xi: Vec3) -> Complex64 {
    m.closed_form_fourier(&xi) * (2.0 * PI).powf(1.5)
}

fn k_problem(k_max: f64, a: f64, noise: f64) -> KContinuationProblem {
    let m = gaussian();
    let x0 = Vec3::z();
    let samples = wavenumber_grid(k_max, 32)
        .into_iter()
        .enumerate()
        .map(|(i, k)| {
            let wobble = Complex64::from_polar(noise, i as f64 * 2.1);
            (k, u(&m, x0 * k) + wobble)
        })
        .collect();
    KContinuationProblem::new(x0, samples, k_max, a, l1(&m), m.support_radius())
}

fn symmetric_grid(a: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| -a + 2.0 * a * (i as f64 + 0.5) / n as f64)
        .collect()
}

fn sup(res: &ContinuationResult) -> f64 {
    res.extended
        .iter()
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max)
}

fn two_gaussians() -> SourceModel {
    SourceModel::new(
        1.7,
        vec![
            SourceComponent::gaussian(Vec3::new(0.5, 0.0, 0.0), Complex64::new(1.0, 0.0), 0.2),
            SourceComponent::gaussian(
                Vec3::new(-0.5, 0.0, 0.0),
                Complex64::from_polar(0.5, -1.5),
                0.2,
            ),
        ],
    )
    .unwrap()
}

fn angle_problem_with(
    delta1: f64,
    n_dirs: usize,
) -> (AngleContinuationProblem, Vec<(f64, f64)>, ChartFrame) {
    let m = two_gaussians();
    let k = 3.0;
    let x0 = Vec3::z();
    let frame = ChartFrame::around(&x0);
    let dirs = fibonacci_cap(&x0, 0.3, n_dirs);
    let values: Vec<Complex64> = dirs.iter().map(|d| u(&m, d * k)).collect();
    let h = inscribed_half_width(delta1);
    let p = AngleContinuationProblem::from_directions(
        k,
        frame,
        &dirs,
        &values,
        Patch::centered(h),
        l1(&m),
        m.support_radius(),
    );
    let n = 15;
    let targets = (0..n * n)
        .map(|i| {
            let t = |j: usize| -h + 2.0 * h * (j as f64 + 0.5) / n as f64;
            (t(i / n), t(i % n))
        })
        .collect();
    (p, targets, frame)
}

fn angle_problem(delta1: f64) -> (AngleContinuationProblem, Vec<(f64, f64)>, ChartFrame) {
    angle_problem_with(delta1, 96)
}

#[test]
fn m2_examples() {
    assert_eq!(m2_const(0.25, 0.0), 0.0);
    assert_eq!(m2_const(0.25, 1.0), 1.0);
    assert!((m2_const(2.0, 2.0) - 64.0 / 3.0).abs() < 1e-12);
    assert_eq!(n0_of_k(2.0), 3);
}

#[test]
fn gamma_single_cell_and_monotone() {
    let rho = 0.5;
    let (_, g) = cell_grid_gamma(rho, 2.0 * rho / 5.0).unwrap();
    let want = (8f64 / 7.0).ln() / (120f64 / 7.0).ln();
    assert!((g - want).abs() < 1e-12, "{g} {want}");
    let gs: Vec<f64> = [0.02, 0.05, 0.1, 0.15, 0.2]
        .iter()
        .map(|&l| cell_grid_gamma(rho, l).unwrap().1)
        .collect();
    assert!(gs.windows(2).all(|w| w[1] > w[0]), "{gs:?}");
    assert!(cell_grid_gamma(rho, 0.0).is_err());
}

#[test]
fn zero_samples_give_zero_extension() {
    let mut p = k_problem(4.0, 8.0, 0.0);
    for s in &mut p.samples {
        s.1 = Complex64::new(0.0, 0.0);
    }
    let res = continue_in_k(&p, &symmetric_grid(8.0, 21), &RegularizationSpec::default()).unwrap();
    assert_eq!(sup(&res), 0.0);
    assert!(res.certificate.passed());

    let (mut p, targets, _) = angle_problem(0.6);
    for s in &mut p.samples {
        s.1 = Complex64::new(0.0, 0.0);
    }
    let res = continue_in_angle(&p, &targets, &RegularizationSpec::default()).unwrap();
    assert_eq!(sup(&res), 0.0);
    assert!(res.certificate.passed());
}

#[test]
fn k_extension_is_even_for_centered_gaussian() {
    let p = k_problem(4.0, 8.0, 0.0);
    let targets = symmetric_grid(8.0, 200);
    let reg = RegularizationSpec {
        conjugate_reflection: true,
        ..RegularizationSpec::default()
    };
    let res = continue_in_k(&p, &targets, &reg).unwrap();
    let n = res.extended.len();
    let scale = sup(&res);
    for i in 0..n / 2 {
        let d = (res.extended[i].1 - res.extended[n - 1 - i].1).norm();
        assert!(d <= 1e-6 * scale, "{i}: {d:e}");
    }
}

#[test]
fn k_extension_reproduces_noisy_samples() {
    let noise = 1e-5;
    let p = k_problem(4.0, 8.0, noise);
    let ks: Vec<f64> = p.samples.iter().map(|s| s.0).collect();
    let res = continue_in_k(&p, &ks, &RegularizationSpec::with_noise(noise)).unwrap();
    let worst = res
        .extended
        .iter()
        .zip(&p.samples)
        .map(|((_, v), (_, y))| (v - y).norm())
        .fold(0.0, f64::max);
    assert!(worst <= 2.0 * noise + 1e-8, "{worst:e}");
}

#[test]
fn k_exponent_does_not_grow_with_a() {
    let mut last = f64::INFINITY;
    for a in [8.0, 16.0, 32.0] {
        let res = continue_in_k(
            &k_problem(4.0, a, 0.0),
            &symmetric_grid(a, 201),
            &RegularizationSpec::default(),
        )
        .unwrap();
        assert!(
            res.gamma_emp <= last + 1e-3,
            "a = {a}: {} after {last}",
            res.gamma_emp
        );
        last = res.gamma_emp;
    }
}

#[test]
fn k_rejects_inconsistent_prior() {
    let mut p = k_problem(4.0, 8.0, 0.0);
    p.samples[0].1 = Complex64::new(2.0 * p.m3, 0.0);
    let r = continue_in_k(&p, &symmetric_grid(8.0, 11), &RegularizationSpec::default());
    assert!(matches!(r, Err(Error::BoundViolated { .. })), "{r:?}");
}

#[test]
fn angle_extension_reproduces_samples() {
    let (p, _, _) = angle_problem(0.6);
    let pts: Vec<(f64, f64)> = p.samples.iter().map(|s| s.0).collect();
    let res = continue_in_angle(&p, &pts, &RegularizationSpec::default()).unwrap();
    let scale = p.samples.iter().map(|s| s.1.norm()).fold(0.0, f64::max);
    let worst = res
        .extended
        .iter()
        .zip(&p.samples)
        .map(|((_, v), (_, y))| (v - y).norm())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-6 * scale, "{worst:e}");
}

#[test]
fn angle_degree_is_stable_under_doubling() {
    // enough samples that the doubled degree is still determined by the data
    let (p, targets, frame) = angle_problem_with(0.6, 400);
    let base = continue_in_angle(&p, &targets, &RegularizationSpec::default()).unwrap();
    let doubled = RegularizationSpec {
        fixed_degree: Some(2 * base.degree),
        ..RegularizationSpec::default()
    };
    let res = continue_in_angle(&p, &targets, &doubled).unwrap();
    let (a, b) = (sup(&base), sup(&res));
    assert!(
        (a - b).abs() <= 0.01 * a,
        "degree {}: {a} vs {b}",
        base.degree
    );

    let m = two_gaussians();
    let truth = targets
        .iter()
        .map(|&(t, q)| u(&m, frame.chart(t, q) * 3.0).norm())
        .fold(0.0, f64::max);
    assert!((a - truth).abs() <= 0.05 * truth);
}

#[test]
fn extended_points_follow_targets() {
    let (p, targets, _) = angle_problem(0.45);
    let res = continue_in_angle(&p, &targets, &RegularizationSpec::default()).unwrap();
    assert_eq!(res.extended.len(), targets.len());
    assert!(matches!(res.extended[0].0, SamplePoint::Angles { .. }));
    assert!(res.gamma_emp > 0.0 && res.gamma_emp < 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn n0_maximizes_the_sequence(k in 0.01f64..30.0) {
        let n0 = n0_of_k(k);
        let term = |n: usize| (1..=n).fold(0.0, |acc, j| acc + (2.0 * k / j as f64).ln());
        let top = term(n0);
        for n in 0..(4.0 * k).ceil() as usize + 10 {
            prop_assert!(term(n) <= top + 1e-12 * top.abs().max(1.0));
        }
    }

    #[test]
    fn m2_is_at_least_the_l1_norm(k in 0.01f64..20.0, f in 0.0f64..5.0) {
        prop_assert!(m2_const(k, f) >= f);
    }
}
