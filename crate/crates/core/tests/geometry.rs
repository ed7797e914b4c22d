use std::f64::consts::{FRAC_PI_2, PI};

use bubblekit_core::geometry::{
    barycenter_residual, cluster_barycenter, exp_map, geodesic_distance, tangent_project, SpherePoint, TangentVector,
};
use bubblekit_core::Error;
use nalgebra::DVector;
use proptest::prelude::*;

fn pt(c: &[f64]) -> SpherePoint {
    SpherePoint::from_unnormalized(DVector::from_column_slice(c)).unwrap()
}

fn tangent(z: &SpherePoint, v: &[f64]) -> TangentVector {
    TangentVector::new(z.clone(), DVector::from_column_slice(v)).unwrap()
}

#[test]
fn distance_examples() {
    let pole = SpherePoint::north_pole(5);
    assert_eq!(geodesic_distance(&pole, &pole), 0.0);
    let e1 = SpherePoint::basis(5, 0);
    assert!((geodesic_distance(&pole, &e1) - FRAC_PI_2).abs() < 1e-15);
    let m1 = pt(&[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    assert!((geodesic_distance(&e1, &m1) - PI).abs() < 1e-15);
}

#[test]
fn rejects_invalid_points() {
    let short = SpherePoint::new(DVector::from_column_slice(&[0.5, 0.0, 0.0, 0.0, 0.0, 0.5]));
    assert!(matches!(short, Err(Error::NotUnit { .. })));
    let below = SpherePoint::new(DVector::from_column_slice(&[0.0, 0.0, 0.0, 0.0, 0.6, -0.8]));
    assert!(matches!(below, Err(Error::BelowEquator { .. })));
}

#[test]
fn boundary_flag_is_frozen_at_ingestion() {
    let z = pt(&[1.0, 0.0, 0.0, 0.0, 0.0, 5e-10]);
    assert!(z.is_boundary());
    assert_eq!(z.height(), 0.0);
    let y = pt(&[1.0, 0.0, 0.0, 0.0, 0.0, 1e-6]);
    assert!(!y.is_boundary());
}

#[test]
fn projection_examples() {
    let z = SpherePoint::basis(5, 0);
    assert_eq!(tangent_project(&z, &z).norm(), 0.0);
    let x = SpherePoint::basis(5, 2);
    assert_eq!(tangent_project(&x, &z).vec(), x.coords());
    let t: f64 = 0.3;
    let e = SpherePoint::basis(5, 1);
    let xt = SpherePoint::new(z.coords() * t.cos() + e.coords() * t.sin()).unwrap();
    let p = tangent_project(&xt, &z);
    assert!((p.vec() - e.coords() * t.sin()).norm() < 1e-15);
}

#[test]
fn exp_map_examples() {
    let z = SpherePoint::basis(5, 0);
    assert_eq!(exp_map(&z, &TangentVector::zero(z.clone())).unwrap(), z);
    let q = exp_map(&z, &tangent(&z, &[0.0, FRAC_PI_2, 0.0, 0.0, 0.0, 0.0])).unwrap();
    assert!(q.dot(&z).abs() < 1e-15);
    let v = tangent(&z, &[0.0, 0.06, 0.0, 0.08, 0.0, 0.0]);
    let y = exp_map(&z, &v).unwrap();
    let back = tangent_project(&y, &z);
    let expect = v.vec() * (0.1f64.sin() / 0.1);
    assert!((back.vec() - expect).norm() < 1e-15);
    assert!((geodesic_distance(&z, &y) - 0.1).abs() < 1e-15);
    let far = tangent(&z, &[0.0, PI, 0.0, 0.0, 0.0, 0.0]);
    assert!(matches!(exp_map(&z, &far), Err(Error::OutOfChart { .. })));
}

#[test]
fn barycenter_examples() {
    let a = pt(&[0.3, 0.4, 0.0, 0.0, 0.0, 0.5]);
    assert!((cluster_barycenter(std::slice::from_ref(&a)).unwrap().coords() - a.coords()).norm() < 1e-15);

    let z = SpherePoint::basis(5, 0);
    let l = exp_map(&z, &tangent(&z, &[0.0, 0.2, 0.0, 0.0, 0.0, 0.0])).unwrap();
    let r = exp_map(&z, &tangent(&z, &[0.0, -0.2, 0.0, 0.0, 0.0, 0.0])).unwrap();
    let c = cluster_barycenter(&[l, r]).unwrap();
    assert!((c.coords() - z.coords()).norm() < 1e-15);

    // three points on a small circle around z, unevenly spaced
    let pts: Vec<SpherePoint> = [0.0, 2.0, 4.5]
        .iter()
        .map(|&t: &f64| exp_map(&z, &tangent(&z, &[0.0, 0.05 * t.cos(), 0.05 * t.sin(), 0.0, 0.0, 0.0])).unwrap())
        .collect();
    let c = cluster_barycenter(&pts).unwrap();
    assert!(barycenter_residual(&pts, &c) < 1e-10);

    let opposite = [SpherePoint::basis(5, 0), pt(&[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0])];
    assert!(matches!(cluster_barycenter(&opposite), Err(Error::DegenerateBarycenter { .. })));
    assert!(matches!(cluster_barycenter(&[]), Err(Error::Empty(_))));
}

#[test]
fn distance_is_chord_to_first_order() {
    let a = SpherePoint::north_pole(6);
    let mut ratios = Vec::new();
    for s in [1e-1, 1e-2, 1e-3] {
        let b = exp_map(&a, &tangent(&a, &[s, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
        let chord = (a.coords() - b.coords()).norm();
        ratios.push((geodesic_distance(&a, &b) / chord - 1.0) / (chord * chord));
    }
    // the exact limit is 1/24
    for r in &ratios {
        assert!((r - 1.0 / 24.0).abs() < 1e-3, "{ratios:?}");
    }
}

fn half_sphere_point(n: usize) -> impl Strategy<Value = SpherePoint> {
    prop::collection::vec(-1.0f64..1.0, n + 1).prop_filter_map("degenerate", move |mut v| {
        v[n] = v[n].abs();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-3 {
            return None;
        }
        SpherePoint::from_unnormalized(DVector::from_vec(v)).ok()
    })
}

proptest! {
    #[test]
    fn triangle_inequality(a in half_sphere_point(5), b in half_sphere_point(5), c in half_sphere_point(5)) {
        let ab = geodesic_distance(&a, &b);
        let bc = geodesic_distance(&b, &c);
        let ac = geodesic_distance(&a, &c);
        prop_assert!(ac <= ab + bc + 1e-10);
        prop_assert_eq!(ab, geodesic_distance(&b, &a));
    }

    #[test]
    fn chord_identity(a in half_sphere_point(7), b in half_sphere_point(7)) {
        let d = geodesic_distance(&a, &b);
        let chord2 = (a.coords() - b.coords()).norm_squared();
        prop_assert!((2.0 * (1.0 - d.cos()) - chord2).abs() <= 1e-12);
    }

    #[test]
    fn barycenter_permutation_invariant(
        pts in prop::collection::vec(half_sphere_point(5), 2..6),
        shift in 0usize..6,
    ) {
        let mut rotated = pts.clone();
        rotated.rotate_left(shift % pts.len());
        rotated.reverse();
        let c1 = cluster_barycenter(&pts);
        let c2 = cluster_barycenter(&rotated);
        match (c1, c2) {
            (Ok(x), Ok(y)) => {
                prop_assert!((x.coords() - y.coords()).norm() < 1e-14);
                prop_assert!(barycenter_residual(&pts, &x) < 1e-10);
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "inconsistent barycenter"),
        }
    }

    #[test]
    fn exp_map_is_isometric_along_geodesics(t in 0.0f64..3.1, k in 1usize..5) {
        // great circles of the boundary sphere stay in the closed half-sphere
        let z = SpherePoint::basis(5, 0);
        let mut v = vec![0.0; 6];
        v[k] = t;
        let y = exp_map(&z, &tangent(&z, &v)).unwrap();
        prop_assert!((geodesic_distance(&z, &y) - t).abs() < 1e-12);
    }
}
