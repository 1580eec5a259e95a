use std::f64::consts::PI;

use helio_isp::forward::{far_field, radiated_field, sup_norm, FarFieldOperator};
use helio_isp::quadrature::GaussLegendre;
use helio_isp::{
    synthesize_dataset, Aperture, Error, FarFieldDataset, QuadratureSpec, SourceComponent,
    SourceModel, Vec3,
};
use num_complex::Complex64;

fn real_source() -> SourceModel {
    SourceModel::new(
        1.5,
        vec![
            SourceComponent::gaussian(Vec3::new(0.3, 0.1, -0.2), Complex64::new(1.0, 0.0), 0.15),
            SourceComponent::bump(Vec3::new(-0.3, 0.0, 0.2), Complex64::new(0.5, 0.0), 0.5, 3),
        ],
    )
    .unwrap()
}

fn dirs() -> Vec<Vec3> {
    vec![
        Vec3::z(),
        Vec3::new(1.0, 1.0, 0.0).normalize(),
        Vec3::new(-0.3, 0.4, 0.8).normalize(),
        Vec3::new(0.5, -0.5, -0.7).normalize(),
    ]
}

#[test]
fn zero_wavenumber_integrates_the_source() {
    let m = SourceModel::centered_gaussian(0.2, 1.2).unwrap();
    let v = far_field(&m, &Vec3::x(), 0.0, &QuadratureSpec::default()).unwrap();
    let want = (2.0 * PI * 0.04f64).powf(1.5);
    assert!(
        (v.re - want).abs() <= 1e-6 * want + m.far_field_floor(),
        "{v} {want}"
    );
    assert!(v.im.abs() < 1e-15);
}

#[test]
fn real_sources_are_conjugate_symmetric() {
    let op = FarFieldOperator::new(&real_source(), &QuadratureSpec::default()).unwrap();
    for d in dirs() {
        for k in [0.5, 3.0, 9.0] {
            let (a, b) = (op.far_field(&d, k).unwrap(), op.far_field(&-d, k).unwrap());
            assert!((a.conj() - b).norm() <= 1e-10, "{a} {b}");
        }
    }
}

#[test]
fn translation_multiplies_by_a_phase() {
    let m = SourceModel::new(
        1.5,
        vec![SourceComponent::gaussian(
            Vec3::new(0.1, 0.0, 0.0),
            Complex64::new(1.0, 0.3),
            0.2,
        )],
    )
    .unwrap();
    let c = Vec3::new(0.1, 0.2, -0.1);
    let shifted = m.translated(&c).unwrap();
    let quad = QuadratureSpec::default();
    let (a, b) = (
        FarFieldOperator::new(&m, &quad).unwrap(),
        FarFieldOperator::new(&shifted, &quad).unwrap(),
    );
    for d in dirs() {
        for k in [1.0, 4.0, 10.0] {
            let want = a.far_field(&d, k).unwrap() * Complex64::from_polar(1.0, -k * d.dot(&c));
            let got = b.far_field(&d, k).unwrap();
            // the two sources are cut at |y| = R at different distances from the center
            let floor = m.far_field_floor() + shifted.far_field_floor();
            assert!(
                (got - want).norm() <= 1e-8 * want.norm() + floor,
                "{got} {want}"
            );
        }
    }
}

#[test]
fn radiated_field_approaches_the_far_field() {
    let m = real_source();
    let quad = QuadratureSpec::new(48);
    let (k, t) = (2.0, 1e3);
    for d in dirs() {
        let u = radiated_field(&m, &(d * t), k, &quad).unwrap();
        let scaled = u * 4.0 * PI * t * Complex64::from_polar(1.0, -k * t);
        let far = far_field(&m, &d, k, &quad).unwrap();
        let dev = (scaled - far).norm() / far.norm();
        assert!(dev <= 2.0 / t * m.support_radius() * k, "{dev:e}");
    }
}

#[test]
fn radiated_field_of_centered_gaussian_matches_radial_reduction() {
    let sigma: f64 = 0.2;
    let m = SourceModel::centered_gaussian(sigma, 1.2).unwrap();
    let (k, x) = (1.0, 2.0);
    let u = radiated_field(&m, &Vec3::new(x, 0.0, 0.0), k, &QuadratureSpec::default()).unwrap();
    // shell average of the Green's function for r < |x|
    let radial = GaussLegendre::new(80).integrate(0.0, 6.0 * sigma, |r| {
        (-0.5 * r * r / (sigma * sigma)).exp() * r * (k * r).sin() / k
    });
    let want = Complex64::from_polar(radial / x, k * x);
    assert!((u - want).norm() <= 1e-6 * want.norm(), "{u} {want}");
    assert!(matches!(
        radiated_field(&m, &Vec3::new(1.0, 0.0, 0.0), k, &QuadratureSpec::default()),
        Err(Error::EvaluationInsideSupport { .. })
    ));
}

fn dataset(noise: f64, seed: u64) -> FarFieldDataset {
    let ap = Aperture::new(Vec3::new(1.0, 0.0, 1.0).normalize(), 0.4).unwrap();
    synthesize_dataset(
        &real_source(),
        &ap,
        6.0,
        20,
        8,
        noise,
        seed,
        &QuadratureSpec::default(),
    )
    .unwrap()
}

#[test]
fn clean_dataset_equals_the_far_field() {
    let ds = dataset(0.0, 1);
    let op = FarFieldOperator::new(&real_source(), &QuadratureSpec::default()).unwrap();
    for (i, d) in ds.directions.iter().enumerate() {
        assert!((d - ds.aperture.x0_hat).norm() < ds.aperture.delta);
        for (j, &k) in ds.wavenumbers.iter().enumerate() {
            assert!(k > 0.0 && k < ds.k_max);
            assert_eq!(ds.value(i, j), op.far_field(d, k).unwrap());
        }
    }
    ds.validate().unwrap();
}

#[test]
fn noise_is_bounded_and_seeded() {
    let clean = dataset(0.0, 5);
    let a = dataset(1e-3, 5);
    let b = dataset(1e-3, 5);
    assert_eq!(a, b);
    let worst = a
        .values
        .iter()
        .zip(&clean.values)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-3 && worst > 0.0);
    assert_ne!(a, dataset(1e-3, 6));
}

#[test]
fn dataset_round_trips_through_files() {
    let ds = dataset(1e-4, 2);
    let dir = std::env::temp_dir().join(format!("helio-isp-forward-{}", std::process::id()));
    ds.write(&dir, "ds").unwrap();
    let header = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "json"))
        .unwrap();
    let back = FarFieldDataset::read(&header).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(back, ds);
}

#[test]
fn sup_of_centered_gaussian_is_at_the_lowest_wavenumber() {
    let m = SourceModel::centered_gaussian(0.2, 1.2).unwrap();
    let ap = Aperture::new(Vec3::z(), 0.5).unwrap();
    let ds = synthesize_dataset(&m, &ap, 10.0, 16, 12, 0.0, 0, &QuadratureSpec::default()).unwrap();
    let eps = sup_norm(&ds).unwrap();
    let at_k0 = (0..ds.n_dirs())
        .map(|i| ds.value(i, 0).norm())
        .fold(0.0, f64::max);
    assert_eq!(eps, at_k0);
}

#[test]
fn rejects_bad_apertures_and_sizes() {
    assert!(Aperture::new(Vec3::z(), 0.0).is_err());
    assert!(Aperture::new(Vec3::zeros(), 0.5).is_err());
    assert_eq!(
        Aperture::new(Vec3::new(0.0, 0.0, 2.0), 0.5).unwrap().x0_hat,
        Vec3::z()
    );
    let ap = Aperture::new(Vec3::z(), 0.5).unwrap();
    let m = real_source();
    let q = QuadratureSpec::default();
    assert!(synthesize_dataset(&m, &ap, 4.0, 0, 8, 0.0, 0, &q).is_err());
    assert!(synthesize_dataset(&m, &ap, 4.0, 8, 1, 0.0, 0, &q).is_err());
}
