mod common;

use koebe_core::centers::*;
use koebe_core::koebe::{reconstruct, EuclideanPolyhedron, KoebeCapSystem, Solid};
use nalgebra::{Matrix3, Matrix5, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::perturbed;

/// Bounded perturbed fixtures of every solid.
fn fixtures() -> Vec<(String, KoebeCapSystem)> {
    let mut out = Vec::new();
    for solid in Solid::ALL {
        for seed in 0..20 {
            let s = perturbed(solid, seed, 1.2);
            if s.is_bounded() && s.origin_in_domain() {
                out.push((format!("{solid} seed {seed}"), s));
            }
        }
    }
    assert!(out.len() >= 50, "only {} bounded fixtures", out.len());
    out
}

fn fan(poly: &EuclideanPolyhedron, face: &[usize]) -> Vec<[Vector3<f64>; 3]> {
    (1..face.len() - 1)
        .map(|k| [poly.vertices[face[0]], poly.vertices[face[k]], poly.vertices[face[k + 1]]])
        .collect()
}

fn edges(poly: &EuclideanPolyhedron) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for f in &poly.faces {
        for k in 0..f.len() {
            let (a, b) = (f[k], f[(k + 1) % f.len()]);
            if a < b {
                out.push((a, b));
            }
        }
    }
    out
}

/// Centroid and total length of the edge skeleton.
fn wireframe(poly: &EuclideanPolyhedron) -> (Vector3<f64>, f64) {
    let mut sum = Vector3::zeros();
    let mut total = 0.0;
    for (a, b) in edges(poly) {
        let l = poly.edge_length(a, b);
        sum += (poly.vertices[a] + poly.vertices[b]) * (0.5 * l);
        total += l;
    }
    (sum / total, total)
}

/// Centroid and area of the boundary surface.
fn surface(poly: &EuclideanPolyhedron) -> (Vector3<f64>, f64) {
    let mut sum = Vector3::zeros();
    let mut total = 0.0;
    for f in &poly.faces {
        for [a, b, c] in fan(poly, f) {
            let area = 0.5 * (b - a).cross(&(c - a)).norm();
            sum += (a + b + c) * (area / 3.0);
            total += area;
        }
    }
    (sum / total, total)
}

/// Centroid and volume of the solid, by cones from the origin.
fn solid(poly: &EuclideanPolyhedron) -> (Vector3<f64>, f64) {
    let mut sum = Vector3::zeros();
    let mut total = 0.0;
    for f in &poly.faces {
        for [a, b, c] in fan(poly, f) {
            let vol = Matrix3::from_columns(&[a, b, c]).determinant().abs() / 6.0;
            sum += (a + b + c) * (vol / 4.0);
            total += vol;
        }
    }
    (sum / total, total)
}

/// Circumcenter of the tetrahedron `o, a, b, c`.
fn tetra_circumcenter(a: Vector3<f64>, b: Vector3<f64>, c: Vector3<f64>) -> Vector3<f64> {
    let m = Matrix3::from_rows(&[a.transpose(), b.transpose(), c.transpose()]);
    let rhs = Vector3::new(a.norm_squared(), b.norm_squared(), c.norm_squared()) * 0.5;
    m.lu().solve(&rhs).unwrap()
}

#[test]
fn skeleton_centers_match_integration() {
    for (name, s) in fixtures() {
        let poly = reconstruct(&s).unwrap();
        let n = poly.vertices.len() as f64;
        let avg: Vector3<f64> = poly.vertices.iter().sum::<Vector3<f64>>() / n;
        assert!((cm0(&s).point - avg).norm() < 1e-9, "cm0 {name}");
        let (c1, _) = wireframe(&poly);
        assert!((cm1(&s).point - c1).norm() < 1e-9, "cm1 {name}");
        let (c2, _) = surface(&poly);
        assert!((cm2(&s).point - c2).norm() < 1e-9, "cm2 {name}");
        let (c3, _) = solid(&poly);
        assert!((cm3(&s).point - c3).norm() < 1e-8, "cm3 {name}");
        let m = poly.tangency_points.len() as f64;
        let tb: Vector3<f64> = poly.tangency_points.iter().sum::<Vector3<f64>>() / m;
        assert!((tangency_barycenter(&s).point - tb).norm() < 1e-9, "tangency {name}");
    }
}

#[test]
fn normalizers_are_length_area_volume() {
    for (name, s) in fixtures() {
        let poly = reconstruct(&s).unwrap();
        let (_, length) = wireframe(&poly);
        let (_, area) = surface(&poly);
        let (_, volume) = solid(&poly);
        let a1 = cm1(&s).normalizer.unwrap();
        let a2 = cm2(&s).normalizer.unwrap();
        let a3 = cm3(&s).normalizer.unwrap();
        assert!((a1 - length).abs() < 1e-8 * length, "{name}: {a1} vs {length}");
        assert!((a2 - area).abs() < 1e-8 * area, "{name}: {a2} vs {area}");
        assert!((a3 - 3.0 * volume).abs() < 1e-8 * volume, "{name}: {a3} vs {volume}");
    }
}

#[test]
fn ccm_matches_direct_circumcenters() {
    for (name, s) in fixtures() {
        if !s.combinatorics().is_simplicial() {
            continue;
        }
        let poly = reconstruct(&s).unwrap();
        let mut sum = Vector3::zeros();
        let mut total = 0.0;
        for f in &poly.faces {
            let [a, b, c] = [0, 1, 2].map(|k| poly.vertices[f[k]]);
            let vol = Matrix3::from_columns(&[a, b, c]).determinant().abs() / 6.0;
            sum += tetra_circumcenter(a, b, c) * vol;
            total += vol;
        }
        let g = ccm(&s).unwrap();
        assert!((g.point - sum / total).norm() < 1e-9, "{name}");
        assert!((g.normalizer.unwrap() - total).abs() < 1e-9 * total, "{name}");
    }
}

#[test]
fn cone_circumcenters_are_equidistant() {
    for (name, s) in fixtures() {
        if !s.combinatorics().is_simplicial() {
            continue;
        }
        let poly = reconstruct(&s).unwrap();
        for (j, f) in poly.faces.iter().enumerate() {
            let x = cone_circumcenter(&s, j).unwrap();
            let r = x.norm();
            for &i in f {
                let d = (poly.vertices[i] - x).norm();
                assert!((d - r).abs() < 1e-9 * (1.0 + r), "{name} face {j}");
            }
        }
    }
}

fn cayley_menger_volume(d: [[f64; 4]; 4]) -> f64 {
    let m = Matrix5::from_fn(|r, c| match (r, c) {
        (0, 0) => 0.0,
        (0, _) | (_, 0) => 1.0,
        _ => d[r - 1][c - 1].powi(2),
    });
    (m.determinant() / 288.0).sqrt()
}

#[test]
fn simplex_volume_matches_cayley_menger() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 1000 {
        let t: [f64; 3] = [0, 1, 2].map(|_| rng.random_range(0.05..3.0));
        if t[0] * t[1] * t[2] >= t[0] + t[1] + t[2] {
            continue;
        }
        let mut d = [[0.0; 4]; 4];
        for a in 0..3 {
            d[0][a + 1] = (1.0 + t[a] * t[a]).sqrt();
            d[a + 1][0] = d[0][a + 1];
            for b in 0..3 {
                if a != b {
                    d[a + 1][b + 1] = t[a] + t[b];
                }
            }
        }
        let want = cayley_menger_volume(d);
        let got = simplex_volume(t[0], t[1], t[2]).unwrap();
        assert!((got - want).abs() < 1e-9 * (1.0 + want), "{t:?}: {got} vs {want}");
        checked += 1;
    }
    assert!(simplex_volume(2.0, 2.0, 2.0).is_err());
}

/// Smallest ball by enumerating supports of up to four points.
fn brute_force_ball(points: &[Vector3<f64>]) -> (Vector3<f64>, f64) {
    let n = points.len();
    let mut best = (Vector3::zeros(), f64::INFINITY);
    let mut consider = |c: Vector3<f64>, r: f64| {
        if r < best.1 && points.iter().all(|p| (p - c).norm() <= r * (1.0 + 1e-9) + 1e-12) {
            best = (c, r);
        }
    };
    for i in 0..n {
        consider(points[i], 0.0);
        for j in i + 1..n {
            let c = (points[i] + points[j]) / 2.0;
            consider(c, (points[i] - c).norm());
            for k in j + 1..n {
                let (a, b) = (points[j] - points[i], points[k] - points[i]);
                let w = a.cross(&b);
                if w.norm_squared() > 1e-20 {
                    let off = (b * a.norm_squared() - a * b.norm_squared()).cross(&w) / (2.0 * w.norm_squared());
                    consider(points[i] + off, off.norm());
                }
                for l in k + 1..n {
                    let m = Matrix3::from_rows(&[
                        (points[j] - points[i]).transpose(),
                        (points[k] - points[i]).transpose(),
                        (points[l] - points[i]).transpose(),
                    ]);
                    let rhs = Vector3::new(
                        (points[j] - points[i]).norm_squared(),
                        (points[k] - points[i]).norm_squared(),
                        (points[l] - points[i]).norm_squared(),
                    ) * 0.5;
                    if m.determinant().abs() > 1e-12 {
                        let off = m.lu().solve(&rhs).unwrap();
                        consider(points[i] + off, off.norm());
                    }
                }
            }
        }
    }
    best
}

#[test]
fn welzl_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let n = rng.random_range(1..10);
        let pts: Vec<Vector3<f64>> = (0..n)
            .map(|_| Vector3::from_fn(|_, _| rng.random_range(-2.0..2.0)))
            .collect();
        let ball = smallest_enclosing_ball(&pts);
        let (c, r) = brute_force_ball(&pts);
        assert!((ball.radius - r).abs() < 1e-9, "{} vs {r}", ball.radius);
        assert!((ball.center - c).norm() < 1e-7);
    }
}

#[test]
fn min_norm_point_is_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        let n = rng.random_range(1..8);
        let pts: Vec<Vector3<f64>> = (0..n)
            .map(|_| Vector3::from_fn(|_, _| rng.random_range(-1.0..2.0)))
            .collect();
        let (x, w) = min_norm_point(&pts);
        let combo: Vector3<f64> = pts.iter().zip(&w).map(|(p, &c)| p * c).sum();
        assert!((combo - x).norm() < 1e-10);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(w.iter().all(|&c| c >= -1e-12));
        // optimality: no hull point has a smaller projection onto x
        for p in &pts {
            assert!(p.dot(&x) >= x.norm_squared() - 1e-9);
        }
    }
}

#[test]
fn canonical_functionals_vanish() {
    for solid in Solid::ALL {
        let s = koebe_core::koebe::generate_canonical(solid);
        let mut specs = vec![
            CenterSpec::Cc,
            CenterSpec::Ic,
            CenterSpec::Cm0,
            CenterSpec::Cm1,
            CenterSpec::Cm2,
            CenterSpec::Cm3,
            CenterSpec::Tangency,
        ];
        if solid.is_simplicial() {
            specs.extend([CenterSpec::Ccm, CenterSpec::Euler(0.5)]);
        }
        for spec in specs {
            let g = center(&s, &spec).unwrap();
            assert!(g.point.norm() < 1e-9, "{solid} {spec}: {}", g.point.norm());
        }
    }
}

#[test]
fn symmetric_circumcenter_discrepancy() {
    let a = 2f64.sqrt().atan();
    let c = compare_circumcenter([a; 3]).unwrap();
    for k in 0..3 {
        assert!((c.printed[k] - 3.0).abs() < 1e-9);
        assert!((c.gram[k] - 1.5 * 3f64.sqrt()).abs() < 1e-9);
        assert!((c.ratio[k] - c.predicted_ratio[k]).abs() < 1e-9);
    }
}
