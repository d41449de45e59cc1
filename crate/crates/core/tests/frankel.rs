use nalgebra::{DMatrix, Vector3};
use shrinkerlab::frankel::*;
use shrinkerlab::{build_mesh, DiscreteHypersurface, Error, GeneralizedCylinder};

fn rotation2(theta: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
}

fn line(theta: f64, radius: f64, h: f64) -> DiscreteHypersurface {
    let shape = GeneralizedCylinder::shrinker(1, 0).unwrap().rotated(&rotation2(theta)).unwrap();
    build_mesh(&shape, radius, h).unwrap()
}

fn circle(rho: f64, radius: f64, h: f64) -> DiscreteHypersurface {
    build_mesh(&GeneralizedCylinder::with_radius(1, 1, rho).unwrap(), radius, h).unwrap()
}

#[test]
fn sphere_meets_plane() {
    let sphere = build_mesh(&GeneralizedCylinder::shrinker(2, 2).unwrap(), 3.0, 0.3).unwrap();
    let plane = build_mesh(&GeneralizedCylinder::shrinker(2, 0).unwrap(), 3.0, 0.3).unwrap();
    let w = intersection_test(&sphere, &plane, 3.0).unwrap();
    assert!(!w.is_empty());
    assert!(w.iter().all(|w| (w.point().norm() - 2.0).abs() < 0.1));
}

#[test]
fn cylinder_meets_plane_on_circle() {
    let cyl = build_mesh(&GeneralizedCylinder::shrinker(2, 1).unwrap(), 3.0, 0.3).unwrap();
    // the cylinder axis is the last coordinate; the plane x3 = 0 is the disk rotated
    let q = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0]);
    let plane = build_mesh(&GeneralizedCylinder::shrinker(2, 0).unwrap().rotated(&q).unwrap(), 3.0, 0.3).unwrap();
    let w = intersection_test(&cyl, &plane, 3.0).unwrap();
    assert!(!w.is_empty());
}

#[test]
fn circle_misses_far_line() {
    let c = circle(2f64.sqrt(), 4.0, 0.05);
    let far = line(0.0, 4.0, 0.05).map_vertices(|v| v + Vector3::new(3.0, 0.0, 0.0)).unwrap();
    assert!(intersection_test(&c, &far, 4.0).unwrap().is_empty());
}

#[test]
fn dimension_mismatch() {
    let c = circle(2f64.sqrt(), 4.0, 0.1);
    let s = build_mesh(&GeneralizedCylinder::shrinker(2, 2).unwrap(), 3.0, 0.3).unwrap();
    assert!(matches!(intersection_test(&c, &s, 4.0), Err(Error::DimensionMismatch(_))));
}

#[test]
fn identical_meshes_overlap_everywhere() {
    let c = circle(2f64.sqrt(), 4.0, 0.1);
    let w = intersection_test(&c, &c, 4.0).unwrap();
    for s in 0..c.simplex_count() {
        assert!(w.iter().any(|w| w.0 == s && w.1 == s));
    }
}

#[test]
fn tangent_double_touches_only_at_the_tangency() {
    let c = circle(2f64.sqrt(), 8.0, 0.1);
    // mirror image in the line x = √2; the vertex at (√2, 0) is shared exactly
    let other = c.map_vertices(|v| Vector3::new(2.0 * 2f64.sqrt() - v.x, v.y, 0.0)).unwrap();
    let w = intersection_test(&c, &other, 8.0).unwrap();
    assert!(!w.is_empty());
    let tangency = Vector3::new(2f64.sqrt(), 0.0, 0.0);
    for witness in &w {
        assert!((witness.point() - tangency).norm() < 1e-9, "{witness:?}");
    }
}

#[test]
fn segment_between_concentric_circles_is_radial() {
    let a = circle(2f64.sqrt(), 4.0, 0.05);
    let b = circle(1.0, 4.0, 0.05);
    let seg = match find_segment(&a, &b, 2f64.sqrt()).unwrap() {
        SegmentSearch::Segment(s) => s,
        other => panic!("{other:?}"),
    };
    assert!((seg.length() - (2f64.sqrt() - 1.0)).abs() < 1e-2);
    let (p, q) = seg.endpoints();
    assert!(p.normalize().dot(&q.normalize()) > 1.0 - 1e-6);
}

#[test]
fn segment_search_reports_intersection() {
    let a = circle(2f64.sqrt(), 4.0, 0.05);
    let b = line(0.3, 4.0, 0.05);
    assert!(matches!(find_segment(&a, &b, 2f64.sqrt()).unwrap(), SegmentSearch::Intersect(w) if !w.is_empty()));
}

#[test]
fn segment_search_rejects_surfaces_outside_the_core_ball() {
    let a = circle(2f64.sqrt(), 4.0, 0.05);
    let b = circle(1.9, 4.0, 0.05);
    assert!(matches!(find_segment(&a, &b, 2f64.sqrt()), Err(Error::SurfaceMissesCoreBall { which: 2, .. })));
    assert!(matches!(find_segment(&a, &b, 2.0).unwrap(), SegmentSearch::Segment(_)));
}

#[test]
fn straight_segment_is_recovered_without_obstacles() {
    let radius = 1.5;
    let sigma1 = line(0.0, radius, 0.05);
    let far = line(0.0, 4.0, 0.05).map_vertices(|v| v + Vector3::new(3.0, 0.0, 0.0)).unwrap();
    let region = ObstacleRegion::new(&[&far], &Vector3::zeros(), radius).unwrap();
    let mut chain = Chain::from_mesh(&sigma1);
    let count = chain.vertices.len();
    for (i, v) in chain.vertices.iter_mut().enumerate() {
        if i != 0 && i + 1 != count {
            let t = i as f64 / (count - 1) as f64;
            v.x += 0.2 * (std::f64::consts::PI * t).sin();
        }
    }
    let straight = Chain::from_mesh(&sigma1).energy();
    let out = minimize_f_obstacle(&region, chain, &MinimizeOptions::default()).unwrap();
    assert!(out.monotone());
    assert!(out.f_final <= out.f_initial);
    assert!(out.gamma.vertices.iter().all(|v| v.x.abs() < 1e-3), "max offset");
    assert!((out.f_final - straight).abs() < 1e-6);
}

#[test]
fn coincident_boundary_points_give_zero_area() {
    let region = ObstacleRegion::new(&[], &Vector3::zeros(), 2.0).unwrap();
    let p = Vector3::new(1.0, 0.0, 0.0);
    let chain = Chain { dim: 1, vertices: vec![p, p], simplices: vec![0, 1], fixed: vec![true, true] };
    let out = minimize_f_obstacle(&region, chain, &MinimizeOptions::default()).unwrap();
    assert_eq!(out.f_final, 0.0);
    assert_eq!(out.residual, 0.0);
    assert!(out.converged);
}

#[test]
fn infeasible_boundary_is_rejected() {
    let region = ObstacleRegion::new(&[], &Vector3::zeros(), 1.0).unwrap();
    let chain = Chain {
        dim: 1,
        vertices: vec![Vector3::new(2.0, 0.0, 0.0), Vector3::new(0.0, 0.5, 0.0)],
        simplices: vec![0, 1],
        fixed: vec![true, false],
    };
    assert!(matches!(
        minimize_f_obstacle(&region, chain, &MinimizeOptions::default()),
        Err(Error::InfeasibleBoundary { vertex: 0 })
    ));
}

#[test]
fn catalog_curves_intersect_in_b4() {
    let angles: Vec<f64> = (0..8).map(|j| std::f64::consts::PI * j as f64 / 8.0).collect();
    let mut curves: Vec<DiscreteHypersurface> = angles.iter().map(|&t| line(t, 4.0, 0.05)).collect();
    curves.push(circle(2f64.sqrt(), 4.0, 0.05));
    let opts = FrankelOptions::default();
    for i in 0..curves.len() {
        for j in 0..curves.len() {
            if i == j {
                continue;
            }
            let v = frankel_verdict(&curves[i], &curves[j], 4.0, &opts).unwrap();
            assert!(v.intersects(), "pair {i} {j}");
        }
    }
}

#[test]
fn disjoint_double_yields_firing_evidence() {
    let sigma1 = circle(2f64.sqrt(), 4.0, 0.05);
    let sigma2 = circle(1.9, 4.0, 0.05);
    let opts = FrankelOptions { core_radius: Some(2.0), ..Default::default() };
    let v = frankel_verdict(&sigma1, &sigma2, 4.0, &opts).unwrap();
    let FrankelVerdict::DisjointEvidence { meets_segment, minimizer, .. } = &v else { panic!("{v:?}") };
    assert!(meets_segment);
    assert!(minimizer.monotone());
    assert!(minimizer.contact.iter().any(|c| *c == Contact::Obstacle(1)));
    assert!(minimizer.complementarity <= 1e-6, "{}", minimizer.complementarity);
    assert!(v.certificate_fires());

    let swapped = frankel_verdict(&sigma2, &sigma1, 4.0, &opts).unwrap();
    assert!(!swapped.intersects());
}

#[test]
fn graph_minimizer_between_planes() {
    let disk = build_mesh(&GeneralizedCylinder::shrinker(2, 0).unwrap(), 4.0, 0.4).unwrap();
    let normal = disk.simplex_normal(0);
    let lid = disk.map_vertices(|v| v + normal).unwrap();
    let opts = FrankelOptions { core_radius: None, ..Default::default() };
    let v = frankel_verdict(&disk, &lid, 4.0, &opts).unwrap();
    let FrankelVerdict::DisjointEvidence { minimizer, .. } = &v else { panic!("{v:?}") };
    assert!(minimizer.monotone());
    assert!(minimizer.f_final <= minimizer.f_initial);
    for (a, b) in minimizer.gamma.vertices.iter().zip(disk.vertices()) {
        let d = a - b;
        assert!((d - normal * normal.dot(&d)).norm() < 1e-12);
    }
}
