use std::f64::consts::PI;

use helio_isp::forward::far_field;
use helio_isp::source_models::source_norms;
use helio_isp::{QuadratureSpec, SourceComponent, SourceModel, Vec3};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mixed() -> SourceModel {
    SourceModel::new(
        1.5,
        vec![
            SourceComponent::gaussian(Vec3::new(0.3, 0.0, -0.2), Complex64::new(1.0, 0.5), 0.15),
            SourceComponent::bump(Vec3::new(-0.4, 0.3, 0.2), Complex64::new(-0.7, 0.0), 0.6, 3),
        ],
    )
    .unwrap()
}

#[test]
fn empty_model_is_zero_everywhere() {
    let m = SourceModel::empty(1.0);
    assert_eq!(m.eval(&Vec3::zeros()), Complex64::new(0.0, 0.0));
    assert_eq!(
        m.closed_form_fourier(&Vec3::new(1.0, 2.0, 3.0)),
        Complex64::new(0.0, 0.0)
    );
}

#[test]
fn gaussian_l2_norm_matches_analytic_value() {
    let sigma: f64 = 0.2;
    let m = SourceModel::centered_gaussian(sigma, 1.2).unwrap();
    let n = source_norms(&m, &QuadratureSpec::default()).unwrap();
    let want = (PI * sigma * sigma).powf(0.75);
    assert!((n.l2 - want).abs() <= 2e-7 * want, "{} {want}", n.l2);
    assert!(n.h_minus_1 < n.l2);
    assert_eq!(n.sobolev_order_bound, None);
}

#[test]
fn norms_are_homogeneous() {
    let m = mixed();
    let q = QuadratureSpec::default();
    let a = source_norms(&m, &q).unwrap();
    let b = source_norms(&m.scaled(Complex64::new(2.0, 0.0)), &q).unwrap();
    for (x, y) in [(a.l1, b.l1), (a.l2, b.l2), (a.h_minus_1, b.h_minus_1)] {
        assert!((y - 2.0 * x).abs() <= 1e-12 * y, "{x} {y}");
    }
}

#[test]
fn bump_smoothness_is_bookkept_by_kind() {
    assert_eq!(mixed().sobolev_order_bound(), Some(3));
}

#[test]
fn vanishes_outside_the_support_ball() {
    let m = mixed();
    let r = m.support_radius();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let d = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if d.norm() < 1e-3 {
            continue;
        }
        let y = d.normalize() * rng.gen_range(r * (1.0 + 1e-12)..2.0 * r);
        assert_eq!(m.eval(&y), Complex64::new(0.0, 0.0));
    }
}

#[test]
fn closed_form_matches_quadrature_for_gaussians() {
    let m = SourceModel::new(
        1.5,
        vec![
            SourceComponent::gaussian(Vec3::new(0.2, -0.1, 0.3), Complex64::new(1.0, 0.0), 0.18),
            SourceComponent::gaussian(Vec3::new(-0.3, 0.1, 0.0), Complex64::new(0.0, -0.5), 0.15),
        ],
    )
    .unwrap();
    let quad = QuadratureSpec::new(96);
    let floor = m.far_field_floor();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..40 {
        let d = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        )
        .normalize();
        let k = rng.gen_range(0.0..40.0);
        let q = far_field(&m, &d, k, &quad).unwrap();
        let exact = m.closed_form_fourier(&(d * k)) * (2.0 * PI).powf(1.5);
        assert!(
            (q - exact).norm() <= 1e-6 * exact.norm() + floor,
            "k = {k}: {q} vs {exact}"
        );
    }
}

fn component() -> impl Strategy<Value = SourceComponent> {
    let center =
        (-0.3f64..0.3, -0.3f64..0.3, -0.3f64..0.3).prop_map(|(x, y, z)| Vec3::new(x, y, z));
    let amp = (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b));
    prop_oneof![
        (center.clone(), amp.clone(), 0.05f64..0.1)
            .prop_map(|(c, a, s)| SourceComponent::gaussian(c, a, s)),
        (center, amp, 0.1f64..0.6, 1u32..4)
            .prop_map(|(c, a, r, m)| SourceComponent::bump(c, a, r, m)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn real_sources_have_even_transform_modulus(
        c in (-0.3f64..0.3, -0.3f64..0.3, -0.3f64..0.3),
        xi in (-20.0f64..20.0, -20.0f64..20.0, -20.0f64..20.0),
    ) {
        let m = SourceModel::new(1.5, vec![
            SourceComponent::gaussian(Vec3::new(c.0, c.1, c.2), Complex64::new(1.0, 0.0), 0.1),
            SourceComponent::bump(Vec3::zeros(), Complex64::new(0.5, 0.0), 0.4, 2),
        ]).unwrap();
        let xi = Vec3::new(xi.0, xi.1, xi.2);
        let (a, b) = (m.closed_form_fourier(&xi), m.closed_form_fourier(&-xi));
        prop_assert!((a - b.conj()).norm() <= 1e-14 * (1.0 + a.norm()));
    }

    #[test]
    fn json_round_trip(parts in prop::collection::vec(component(), 0..4)) {
        let m = SourceModel::new(1.5, parts).unwrap();
        let back = SourceModel::from_json(&m.to_json()).unwrap();
        prop_assert_eq!(back, m);
    }
}
