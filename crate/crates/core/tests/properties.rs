use nalgebra::Matrix3;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shrinkerlab::analytic::CatalogPiece;
use shrinkerlab::catalog::random_rotation;
use shrinkerlab::certificate::{certify_catalog, certify_instability};
use shrinkerlab::curvature::CurvatureSource;
use shrinkerlab::cutoff::SingularSetProxy;
use shrinkerlab::eigen::lowest_dirichlet_eigenvalue;
use shrinkerlab::growth::ball_volume;
use shrinkerlab::io::{parse_shrnk, write_shrnk};
use shrinkerlab::operators::WeightedOperators;
use shrinkerlab::{build_mesh, GeneralizedCylinder};

fn rotation3(seed: u64) -> Matrix3<f64> {
    let q = random_rotation(&mut ChaCha8Rng::seed_from_u64(seed), 3);
    Matrix3::from_fn(|i, j| q[(i, j)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn certificate_is_rotation_invariant(seed in any::<u64>(), k in 0usize..=2) {
        // mapping drops the analytic lift of the quadrature, so compare two mapped copies
        let mesh = build_mesh(&GeneralizedCylinder::shrinker(2, k).unwrap(), 5.0, 0.35).unwrap().map_vertices(|v| *v).unwrap();
        let q = rotation3(seed);
        let turned = mesh.map_vertices(|v| q * v).unwrap();
        let proxy = SingularSetProxy::empty(0.05, 5.0).unwrap();
        let a = certify_instability(&mesh, 8f64.sqrt(), 5.0, &proxy, 1e-3).unwrap();
        let b = certify_instability(&turned, 8f64.sqrt(), 5.0, &proxy, 1e-3).unwrap();
        prop_assert!((a.mass - b.mass).abs() <= 1e-10 * a.mass);
        prop_assert!((a.energy - b.energy).abs() <= 1e-10 * a.mass);
        prop_assert_eq!(a.fires, b.fires);
    }

    #[test]
    fn catalog_margin_grows_with_r2(n in 1usize..=3, pick in 0usize..=3, j in 0usize..40) {
        let k = pick.min(n);
        let r1 = (4.0 + 2.0 * n as f64).sqrt();
        let r2 = r1 + 1.05 + 0.25 * j as f64;
        let shape = GeneralizedCylinder::shrinker(n, k).unwrap();
        let lo = certify_catalog(&CatalogPiece::new(shape.clone(), r2).unwrap(), r1, r2).unwrap();
        let hi = certify_catalog(&CatalogPiece::new(shape, r2 + 0.25).unwrap(), r1, r2 + 0.25).unwrap();
        prop_assert!(hi.margin >= lo.margin - 1e-12, "{} -> {}", lo.margin, hi.margin);
        prop_assert!(!lo.fires || hi.fires);
    }

    #[test]
    fn ball_volume_is_monotone(a in 0.1f64..4.0, b in 0.1f64..4.0, k in 0usize..=2) {
        let mesh = build_mesh(&GeneralizedCylinder::shrinker(2, k).unwrap(), 4.0, 0.4).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(ball_volume(&mesh, lo) <= ball_volume(&mesh, hi) + 1e-12);
    }

    #[test]
    fn shrnk_round_trip_is_exact(seed in any::<u64>(), k in 0usize..=1) {
        let q = rotation3(seed);
        let mesh = build_mesh(&GeneralizedCylinder::shrinker(2, k).unwrap(), 3.0, 0.5).unwrap().map_vertices(|v| q * v).unwrap();
        let mut buf = Vec::new();
        write_shrnk(&mesh, &mut buf).unwrap();
        let back = parse_shrnk(buf.as_slice()).unwrap();
        prop_assert_eq!(back.vertices(), mesh.vertices());
        prop_assert_eq!(back.simplex_count(), mesh.simplex_count());
    }
}

#[test]
fn certificate_field_bounds_the_eigenvalue() {
    let mesh = build_mesh(&GeneralizedCylinder::shrinker(1, 0).unwrap(), 4.0, 0.02).unwrap();
    let ops = WeightedOperators::assemble_with_curvature(&mesh, CurvatureSource::Analytic).unwrap();
    let proxy = SingularSetProxy::empty(0.05, 4.0).unwrap();
    let cert = certify_instability(&mesh, 6f64.sqrt(), 4.0, &proxy, 1e-3).unwrap();
    assert!(cert.fires);
    // the certificate's forms are the Rayleigh quotient's forms
    assert!((ops.mass_inner(&cert.field, &cert.field) - cert.mass).abs() <= 1e-12 * cert.mass);
    assert!((ops.dirichlet_form(&cert.field, &cert.field) - cert.energy).abs() <= 1e-12 * cert.energy);
    let spectrum = lowest_dirichlet_eigenvalue(&ops).unwrap();
    let q = ops.rayleigh_quotient(&cert.field).unwrap();
    assert!(spectrum.eigenvalue <= q + 1e-12, "{} > {q}", spectrum.eigenvalue);
    // a firing field has Q(w) < 1/2 − 1/2 = 0 on the line, where |A|² = 0
    assert!(q < 0.0);
}
