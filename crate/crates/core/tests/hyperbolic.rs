use std::f64::consts::PI;

use koebe_core::hypcore::*;
use koebe_core::koebe::inversive_product;
use nalgebra::DVector;
use proptest::prelude::*;

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn unit(x: f64, y: f64, z: f64) -> DVector<f64> {
    let u = v(&[x, y, z]);
    let n = u.norm();
    if n < 1e-3 {
        v(&[0.0, 0.0, 1.0])
    } else {
        u / n
    }
}

fn any_ball_point() -> impl Strategy<Value = DVector<f64>> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..0.98f64)
        .prop_map(|(x, y, z, r)| unit(x, y, z) * r)
}

fn any_cap() -> impl Strategy<Value = SphericalCap> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.05..(PI - 0.05))
        .prop_map(|(x, y, z, r)| SphericalCap::new(unit(x, y, z), r).unwrap())
}

/// Boundary circle of a cap, sampled as unit vectors.
fn boundary_samples(cap: &SphericalCap, count: usize) -> Vec<DVector<f64>> {
    let c = cap.center();
    let helper = if c[0].abs() < 0.9 { v(&[1.0, 0.0, 0.0]) } else { v(&[0.0, 1.0, 0.0]) };
    let e1 = (&helper - c * c.dot(&helper)).normalize();
    let e2 = c.cross(&e1);
    let (s, co) = cap.radius().sin_cos();
    (0..count)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / count as f64;
            c * co + (&e1 * phi.cos() + &e2 * phi.sin()) * s
        })
        .collect()
}

/// Möbius action on the sphere through the light cone.
fn mobius_on_sphere(t: &LorentzMap, u: &DVector<f64>) -> DVector<f64> {
    let w = t.apply(&MinkowskiVec::from_parts(u, 1.0));
    w.spatial_owned() / w.time()
}

#[test]
fn halfplane_examples() {
    let h = halfplane_check(1.0, 1.0, None).unwrap();
    assert!((h.dist_axis - 0.881374).abs() < 1e-6);
    assert!((h.y_u - 0.707107).abs() < 1e-6);
    assert!(h.dist_circle.is_none());
    let h = halfplane_check(1.0, 1.0, Some(1.0)).unwrap();
    assert!((h.dist_circle.unwrap() - 0.481212).abs() < 1e-6);
    assert!(halfplane_check(1.0, 1.0, Some(1.5)).is_err());
}

#[test]
fn ball_chart_of_origin() {
    assert_eq!(ball_chart(&HPoint::origin(3)), v(&[0.0, 0.0, 0.0]));
    assert!(ball_chart_inverse(&v(&[0.6, 0.8, 0.0])).is_err());
}

#[test]
fn origin_distance_to_cap_plane() {
    let cap = SphericalCap::from_slice(&[0.0, 0.0, 1.0], PI / 3.0).unwrap();
    let d = plane_distance(&HPoint::origin(3), &cap_to_pole(&cap));
    assert!((d.tanh() - 0.5).abs() < 1e-15);
}

#[test]
fn long_compositions_stay_lorentz() {
    let mut t = LorentzMap::identity(3);
    for seed in 0..100 {
        t = random_mobius(seed, 0.5, 3).compose(&t).renormalized();
        assert!(t.form_defect() < 1e-8);
        assert!(t.is_orthochronous());
    }
    let p = t.apply_point(&HPoint::origin(3));
    assert!((p.vec().norm_sq() + 1.0).abs() < 1e-8);
}

#[test]
fn antipodal_ideal_directions_are_opposite() {
    let o = HPoint::origin(3);
    let a = ideal_direction(&o, &v(&[0.0, 0.0, 1.0]));
    let b = ideal_direction(&o, &v(&[0.0, 0.0, -1.0]));
    assert!((a.norm() - 1.0).abs() < 1e-15);
    assert!(a.vec.add(&b.vec).as_vector().norm() < 1e-15);
    assert!((a.vec.spatial()[2] - 1.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ball_chart_roundtrip(b in any_ball_point()) {
        let p = ball_chart_inverse(&b).unwrap();
        prop_assert!((p.vec().norm_sq() + 1.0).abs() < 1e-9 * p.vec().time().powi(2));
        prop_assert!((ball_chart(&p) - &b).norm() < 1e-12);
    }

    #[test]
    fn boost_to_origin_maps_point_to_origin(b in any_ball_point()) {
        let p = ball_chart_inverse(&b).unwrap();
        let t = boost_to_origin(&p);
        prop_assert!(t.apply_point(&p).distance_from_origin() < 1e-9);
        prop_assert!((t.rapidity() - p.distance_from_origin()).abs() < 1e-9);
        prop_assert!(t.form_defect() < 1e-8 * p.vec().time().powi(2));
    }

    #[test]
    fn geodesic_exp_travels_its_length(b in any_ball_point(), x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64, s in 0.0..4.0f64) {
        let p = ball_chart_inverse(&(b * 0.8)).unwrap();
        let dir = TangentVec::new(p.clone(), MinkowskiVec::from_parts(&unit(x, y, z), 0.0));
        let q = geodesic_exp(&p, &dir, s);
        prop_assert!((p.distance(&q) - s).abs() < 1e-8 * (1.0 + s));
    }

    #[test]
    fn isometries_preserve_distance(a in any_ball_point(), b in any_ball_point(), seed in any::<u64>()) {
        let p = ball_chart_inverse(&(a * 0.9)).unwrap();
        let q = ball_chart_inverse(&(b * 0.9)).unwrap();
        let t = random_mobius(seed, 2.0, 3);
        let d = p.distance(&q);
        let dt = t.apply_point(&p).distance(&t.apply_point(&q));
        prop_assert!((d - dt).abs() < 1e-8 * (1.0 + d));
    }

    #[test]
    fn pole_roundtrip(cap in any_cap()) {
        let back = pole_to_cap(&cap_to_pole(&cap)).unwrap();
        prop_assert!((back.center() - cap.center()).norm() < 1e-12);
        prop_assert!((back.radius() - cap.radius()).abs() < 1e-12);
        prop_assert!((cap_to_pole(&cap).norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn origin_distance_matches_cap_radius(cap in any_cap()) {
        prop_assume!(cap.radius() < PI / 2.0 - 1e-3);
        let d = plane_distance(&HPoint::origin(3), &cap_to_pole(&cap));
        prop_assert!(d > 0.0);
        prop_assert!((d.tanh() - cap.radius().cos()).abs() < 1e-12);
    }

    #[test]
    fn inversive_product_is_invariant(a in any_cap(), b in any_cap(), seed in any::<u64>()) {
        let t = random_mobius(seed, 2.0, 3);
        let before = inversive_product(&a, &b);
        let after = inversive_product(&apply_cap(&t, &a).unwrap(), &apply_cap(&t, &b).unwrap());
        prop_assert!((before - after).abs() < 1e-9 * (1.0 + before.abs()));
    }

    #[test]
    fn apply_cap_matches_boundary_images(cap in any_cap(), seed in any::<u64>()) {
        let t = random_mobius(seed, 1.5, 3);
        let image = apply_cap(&t, &cap).unwrap();
        let cos_r = image.radius().cos();
        for u in boundary_samples(&cap, 12) {
            let w = mobius_on_sphere(&t, &u);
            prop_assert!((w.norm() - 1.0).abs() < 1e-9);
            prop_assert!((image.center().dot(&w) - cos_r).abs() < 1e-8);
        }
        let inside = mobius_on_sphere(&t, cap.center());
        prop_assert!(image.contains(&inside));
    }

    #[test]
    fn halfplane_agrees_with_embedded_plane(a in 0.05..5.0f64, t in 0.05..5.0f64, r in 0.05..5.0f64) {
        prop_assume!(r * r < a * a + t * t - 1e-3);
        let h = halfplane_check(a, t, Some(r)).unwrap();
        // upper half-plane -> hyperboloid, inside the first two spatial axes of H^3
        let rho2 = a * a + t * t;
        let p = HPoint::from_spatial(&v(&[a / t, (rho2 - 1.0) / (2.0 * t), 0.0]));
        let axis = MinkowskiVec::new(&[-1.0, 0.0, 0.0], 0.0);
        let circle = MinkowskiVec::new(&[0.0, -(r * r + 1.0) / (2.0 * r), 0.0], -(r * r - 1.0) / (2.0 * r));
        prop_assert!((plane_distance(&p, &axis) - h.dist_axis).abs() < 1e-9 * (1.0 + h.dist_axis.abs()));
        let dc = h.dist_circle.unwrap();
        prop_assert!((plane_distance(&p, &circle) - dc).abs() < 1e-9 * (1.0 + dc.abs()));
    }

    #[test]
    fn unit_normal_points_at_plane(b in any_ball_point(), cap in any_cap()) {
        let p = ball_chart_inverse(&(b * 0.5)).unwrap();
        let s = cap_to_pole(&cap);
        let d = plane_distance(&p, &s);
        prop_assume!(d > 1e-3);
        let n = unit_normal_toward(&p, &s).unwrap();
        prop_assert!((n.norm() - 1.0).abs() < 1e-9);
        prop_assert!(n.vec.dot(p.vec()).abs() < 1e-9 * p.vec().time());
        let q = geodesic_exp(&p, &n, 0.5 * d);
        prop_assert!((plane_distance(&q, &s) - 0.5 * d).abs() < 1e-8 * (1.0 + d));
    }
}
