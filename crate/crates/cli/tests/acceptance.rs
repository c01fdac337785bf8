//! One test per acceptance criterion. Each prints a single PASS/FAIL line to
//! stderr (uncaptured) before asserting.

use std::f64::consts::FRAC_PI_4;
use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use koebe_core::centers::*;
use koebe_core::fields::*;
use koebe_core::hypcore::*;
use koebe_core::koebe::*;
use koebe_core::solver::*;
use nalgebra::{DVector, Matrix3, Matrix5, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: u32, title: &str, ok: bool, detail: &str) {
    let line = format!(
        "criterion {n:>2} {}: {title}; {detail}\n",
        if ok { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "{}", line.trim_end());
}

fn perturbed(solid: Solid, seed: u64, rapidity: f64) -> KoebeCapSystem {
    perturb(&generate_canonical(solid), &random_mobius(seed, rapidity, 3)).unwrap()
}

/// Specs of the round-trip sweep, simplicial-only ones last.
fn sweep_specs(solid: Solid) -> Vec<CenterSpec> {
    let mut specs = vec![CenterSpec::Cm0, CenterSpec::Cm1, CenterSpec::Cm2, CenterSpec::Tangency];
    if solid.is_simplicial() {
        specs.extend([CenterSpec::Ccm, CenterSpec::Euler(0.5), CenterSpec::Euler(0.9)]);
    }
    specs
}

const SWEEP: [Solid; 3] = [Solid::Tetrahedron, Solid::Cube, Solid::Octahedron];

/// `|g(T(P))|` recomputed from the reported transformation.
fn recomputed_residual(s: &KoebeCapSystem, spec: &CenterSpec, r: &SolveReport) -> f64 {
    let moved = perturb(s, &r.transform).unwrap();
    center(&moved, spec).unwrap().point.norm()
}

/// Bounded perturbed fixtures with the origin in the domain.
fn fixtures() -> Vec<(String, KoebeCapSystem)> {
    let mut out = Vec::new();
    for solid in Solid::ALL {
        for seed in 0..20 {
            let s = perturbed(solid, seed, 1.2);
            if s.is_bounded() && s.origin_in_domain() {
                out.push((format!("{solid}/{seed}"), s));
            }
        }
    }
    out
}

fn fan(poly: &EuclideanPolyhedron, f: &[usize]) -> Vec<[Vector3<f64>; 3]> {
    (1..f.len() - 1)
        .map(|k| [poly.vertices[f[0]], poly.vertices[f[k]], poly.vertices[f[k + 1]]])
        .collect()
}

/// Centroids and measures of the vertex set, edge skeleton, surface and solid.
fn skeleton_integrals(poly: &EuclideanPolyhedron) -> [(Vector3<f64>, f64); 4] {
    let n = poly.vertices.len() as f64;
    let c0 = poly.vertices.iter().sum::<Vector3<f64>>() / n;
    let (mut s1, mut l) = (Vector3::zeros(), 0.0);
    let (mut s2, mut a) = (Vector3::zeros(), 0.0);
    let (mut s3, mut v) = (Vector3::zeros(), 0.0);
    for f in &poly.faces {
        for k in 0..f.len() {
            let (i, j) = (f[k], f[(k + 1) % f.len()]);
            if i < j {
                let len = poly.edge_length(i, j);
                s1 += (poly.vertices[i] + poly.vertices[j]) * (0.5 * len);
                l += len;
            }
        }
        for [p, q, r] in fan(poly, f) {
            let area = 0.5 * (q - p).cross(&(r - p)).norm();
            s2 += (p + q + r) * (area / 3.0);
            a += area;
            let vol = Matrix3::from_columns(&[p, q, r]).determinant().abs() / 6.0;
            s3 += (p + q + r) * (vol / 4.0);
            v += vol;
        }
    }
    [(c0, n), (s1 / l, l), (s2 / a, a), (s3 / v, v)]
}

#[test]
fn criterion_01_canonical_fixtures() {
    let started = Instant::now();
    let mut worst_validate: f64 = 0.0;
    let mut worst_g: f64 = 0.0;
    let mut count = 0;
    let mut invalid = Vec::new();
    for solid in Solid::ALL {
        let s = generate_canonical(solid);
        let report = validate(&s, 1e-9);
        if !report.passed() {
            invalid.push(solid.name());
        }
        for c in report.checks.iter().filter(|c| !c.informational) {
            worst_validate = worst_validate.max(c.worst);
        }
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
            worst_g = worst_g.max(center(&s, &spec).unwrap().point.norm());
            count += 1;
        }
    }
    let elapsed = started.elapsed();
    let ok = invalid.is_empty() && worst_g < 1e-9 && elapsed < Duration::from_secs(1);
    verdict(
        1,
        "canonical fixtures",
        ok,
        &format!(
            "5 solids valid at 1e-9 (worst check {worst_validate:.1e}), {count} functionals, max |g| {worst_g:.1e}, {:.3} s",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_02_mobius_round_trip() {
    let mut failures = Vec::new();
    let mut runs = 0;
    let (mut max_res, mut max_iter, mut max_time): (f64, usize, Duration) = (0.0, 0, Duration::ZERO);
    for solid in SWEEP {
        for seed in 0..100 {
            let s = perturbed(solid, seed, 2.0);
            for spec in sweep_specs(solid) {
                runs += 1;
                let r = solve(&s, &spec, &SolveOptions::default()).unwrap();
                let res = recomputed_residual(&s, &spec, &r);
                max_res = max_res.max(res);
                max_iter = max_iter.max(r.iterations);
                max_time = max_time.max(r.wall_time);
                if r.status != SolveStatus::Converged
                    || res >= 1e-7
                    || r.iterations > 200
                    || r.wall_time >= Duration::from_secs(1)
                {
                    failures.push(format!("{solid}/{seed}/{spec}: {} {res:.1e}", r.status));
                }
            }
        }
    }
    verdict(
        2,
        "Möbius round-trip",
        failures.is_empty(),
        &format!(
            "{}/{runs} converged, max |g(T(P))| {max_res:.1e}, max iterations {max_iter}, max time {:.1} ms{}",
            runs - failures.len(),
            max_time.as_secs_f64() * 1e3,
            if failures.is_empty() { String::new() } else { format!(", first failures {:?}", &failures[..failures.len().min(3)]) }
        ),
    );
}

#[test]
fn criterion_03_minimax_specs() {
    let mut failures = Vec::new();
    let mut runs = 0;
    let (mut worst_cc, mut worst_ic): (f64, f64) = (0.0, 0.0);
    for solid in SWEEP {
        for seed in 0..100 {
            let s = perturbed(solid, seed, 2.0);
            runs += 2;
            let cc = solve(&s, &CenterSpec::Cc, &SolveOptions::default()).unwrap();
            let moved = perturb(&s, &cc.transform).unwrap();
            let ball = smallest_enclosing_ball(&reconstruct(&moved).unwrap().vertices);
            worst_cc = worst_cc.max(ball.center.norm());
            if cc.status != SolveStatus::Converged || ball.center.norm() >= 1e-7 {
                failures.push(format!("{solid}/{seed}/cc: {} {:.1e}", cc.status, ball.center.norm()));
            }
            let ic = solve(&s, &CenterSpec::Ic, &SolveOptions::default()).unwrap();
            let cert = ic_certificate(&perturb(&s, &ic.transform).unwrap(), CERTIFICATE_TOLERANCE);
            worst_ic = worst_ic.max(cert.hull_distance);
            if ic.status != SolveStatus::Converged || !cert.passed {
                failures.push(format!("{solid}/{seed}/ic: {} {:.1e}", ic.status, cert.hull_distance));
            }
        }
    }
    verdict(
        3,
        "minimax specs",
        failures.is_empty(),
        &format!(
            "{}/{runs} pass, max enclosing-ball offset {worst_cc:.1e}, max ic hull distance {worst_ic:.1e}{}",
            runs - failures.len(),
            if failures.is_empty() { String::new() } else { format!(", first failures {:?}", &failures[..failures.len().min(3)]) }
        ),
    );
}

fn cayley_menger(d: [[f64; 4]; 4]) -> f64 {
    let m = Matrix5::from_fn(|r, c| match (r, c) {
        (0, 0) => 0.0,
        (0, _) | (_, 0) => 1.0,
        _ => d[r - 1][c - 1].powi(2),
    });
    (m.determinant() / 288.0).sqrt()
}

#[test]
fn criterion_04_oracle_equivalence() {
    let tol = [1e-9, 1e-9, 1e-9, 1e-8];
    let mut worst = [0.0f64; 4];
    let mut worst_cone: f64 = 0.0;
    let fx = fixtures();
    for (_, s) in &fx {
        let poly = reconstruct(s).unwrap();
        let oracle = skeleton_integrals(&poly);
        let ours = [cm0(s), cm1(s), cm2(s), cm3(s)];
        for k in 0..4 {
            worst[k] = worst[k].max((ours[k].point - oracle[k].0).norm());
        }
        if s.combinatorics().is_simplicial() {
            for (j, f) in poly.faces.iter().enumerate() {
                let x = cone_circumcenter(s, j).unwrap();
                for &i in f {
                    let gap = ((poly.vertices[i] - x).norm() - x.norm()).abs() / (1.0 + x.norm());
                    worst_cone = worst_cone.max(gap);
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_volume: f64 = 0.0;
    let mut triples = 0;
    while triples < 1000 {
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
        let want = cayley_menger(d);
        let got = simplex_volume(t[0], t[1], t[2]).unwrap();
        worst_volume = worst_volume.max((got - want).abs() / (1.0 + want));
        triples += 1;
    }
    let ok = (0..4).all(|k| worst[k] < tol[k]) && worst_volume < 1e-9 && worst_cone < 1e-9;
    verdict(
        4,
        "oracle equivalence",
        ok,
        &format!(
            "{} fixtures, cm0..cm3 errors {:.1e} {:.1e} {:.1e} {:.1e}, simplex volume {worst_volume:.1e} on {triples} triples, cone equidistance {worst_cone:.1e}",
            fx.len(),
            worst[0],
            worst[1],
            worst[2],
            worst[3]
        ),
    );
}

#[test]
fn criterion_05_normalizer_identities() {
    let mut worst = [0.0f64; 3];
    let fx = fixtures();
    for (_, s) in &fx {
        let poly = reconstruct(s).unwrap();
        let [_, (_, length), (_, area), (_, volume)] = skeleton_integrals(&poly);
        let a = [cm1(s), cm2(s), cm3(s)].map(|g| g.normalizer.unwrap());
        let want = [length, area, 3.0 * volume];
        for k in 0..3 {
            worst[k] = worst[k].max((a[k] - want[k]).abs() / want[k]);
        }
    }
    verdict(
        5,
        "normalizer identities",
        worst.iter().all(|&w| w < 1e-8),
        &format!(
            "{} fixtures, relative errors length {:.1e}, area {:.1e}, 3 volume {:.1e}",
            fx.len(),
            worst[0],
            worst[1],
            worst[2]
        ),
    );
}

fn spatial3(v: &MinkowskiVec) -> Vector3<f64> {
    let s = v.spatial();
    Vector3::new(s[0], s[1], s[2])
}

fn gap(a: &MinkowskiVec, b: &MinkowskiVec) -> f64 {
    a.sub(b).as_vector().norm()
}

#[test]
fn criterion_06_field_consistency() {
    // verbatim fields against the generic lift
    let mut worst_verbatim: f64 = 0.0;
    for solid in [Solid::Tetrahedron, Solid::Cube, Solid::Octahedron, Solid::Icosahedron] {
        for seed in 0..5 {
            let s = perturbed(solid, seed, 1.5);
            for p in random_domain_points(&s, 5, seed) {
                let scale = 1.0 + p.vec().time();
                for (spec, v) in [
                    (CenterSpec::Cm1, field_cm1_verbatim(&p, &s).unwrap()),
                    (CenterSpec::Cm2, field_cm2_verbatim(&p, &s).unwrap()),
                    (CenterSpec::Cm3, field_cm3_verbatim(&p, &s).unwrap()),
                ] {
                    let l = lift_field(&spec, &s, &p).unwrap();
                    worst_verbatim = worst_verbatim.max(gap(&l.total.vec, &v.total.vec) / scale);
                }
            }
        }
    }
    // value at the origin
    let o = HPoint::origin(3);
    let mut worst_kappa: f64 = 0.0;
    for (_, s) in fixtures() {
        let n = s.n_vertices() as f64;
        for (spec, factor) in [
            (CenterSpec::Cm0, None),
            (CenterSpec::Cm1, Some(2.0)),
            (CenterSpec::Cm2, Some(3.0)),
            (CenterSpec::Cm3, Some(4.0)),
        ] {
            let g = center(&s, &spec).unwrap();
            let kappa = factor.map_or(n, |f| f * g.normalizer.unwrap());
            let h = lift_field(&spec, &s, &o).unwrap();
            let err = (spatial3(&h.total.vec) - g.point * kappa).norm() / kappa.max(1.0);
            worst_kappa = worst_kappa.max(err).max((h.kappa.unwrap() - kappa).abs() / kappa);
        }
    }
    // equivariance
    let base = perturbed(Solid::Octahedron, 3, 0.8);
    let points = random_domain_points(&base, 5, 1);
    let specs = [
        CenterSpec::Cm0,
        CenterSpec::Cm1,
        CenterSpec::Cm2,
        CenterSpec::Cm3,
        CenterSpec::Ccm,
        CenterSpec::Euler(0.5),
        CenterSpec::Tangency,
    ];
    let mut worst_equiv: f64 = 0.0;
    for seed in 0..100 {
        let t = random_mobius(seed, 1.5, 3);
        let moved = perturb(&base, &t).unwrap();
        let p = &points[seed as usize % points.len()];
        let tp = t.apply_point(p);
        for spec in &specs {
            let pushed = t.apply_tangent(&lift_field(spec, &base, p).unwrap().total);
            let direct = lift_field(spec, &moved, &tp).unwrap();
            let scale = (1.0 + tp.vec().time()) * direct.residual.max(1.0);
            worst_equiv = worst_equiv.max(gap(&pushed.vec, &direct.total.vec) / scale);
        }
    }
    verdict(
        6,
        "field consistency",
        worst_verbatim < 1e-10 && worst_kappa < 1e-9 && worst_equiv < 1e-9,
        &format!(
            "verbatim vs lift {worst_verbatim:.1e}, kappa g at o {worst_kappa:.1e}, equivariance over 100 isometries {worst_equiv:.1e} (relative)"
        ),
    );
}

fn six_caps(seed: u64) -> Vec<SphericalCap> {
    let t = random_mobius(seed, 1.5, 4);
    (0..6)
        .map(|k| {
            let mut c = DVector::zeros(4);
            c[k / 2] = if k % 2 == 0 { 1.0 } else { -1.0 };
            apply_cap(&t, &SphericalCap::new(c, 0.9 * FRAC_PI_4).unwrap()).unwrap()
        })
        .collect()
}

#[test]
fn criterion_07_gradient_structure() {
    let mut worst_grad: f64 = 0.0;
    let mut worst_rise: f64 = 0.0;
    let mut curves = 0;
    let forward = TraceOptions {
        direction: FlowDirection::Forward,
        ..TraceOptions::default()
    };
    for seed in 0..5 {
        let t = random_mobius(seed, 1.0, 3);
        let caps = perturb(&generate_canonical(Solid::Cube), &t).unwrap().vertex_caps().to_vec();
        for w in [WeightFamily::Sec, WeightFamily::Tan, WeightFamily::PowSec(2.0)] {
            let weights = vec![w; caps.len()];
            for q in [[0.0, 0.0, 0.0], [0.3, 0.2, -0.1], [-0.4, 0.1, 0.3]] {
                let p = t.apply_point(&HPoint::from_spatial(&DVector::from_column_slice(&q)));
                let f = weighted_cap_field(&p, &caps, &weights).unwrap();
                let frame = LorentzMap::boost_from_origin(&p);
                let h = 1e-5;
                let mut err: f64 = 0.0;
                for i in 0..3 {
                    let mut e = [0.0; 3];
                    e[i] = 1.0;
                    let dir = frame.apply_tangent(&TangentVec::new(HPoint::origin(3), MinkowskiVec::new(&e, 0.0)));
                    let up = potential(&geodesic_exp(&p, &dir, h), &caps, &weights).unwrap();
                    let down = potential(&geodesic_exp(&p, &dir, -h), &caps, &weights).unwrap();
                    err = err.max((f.total.inner(&dir) + (up - down) / (2.0 * h)).abs());
                }
                worst_grad = worst_grad.max(err / f.residual.max(1e-3));
                let curve = trace_caps(&caps, &weights, &p, &forward).unwrap();
                curves += 1;
                let values: Vec<f64> = curve
                    .samples
                    .iter()
                    .map(|(_, x)| potential(x, &caps, &weights).unwrap())
                    .collect();
                for pair in values.windows(2) {
                    worst_rise = worst_rise.max((pair[1] - pair[0]) / pair[0].abs().max(1.0));
                }
            }
        }
    }
    verdict(
        7,
        "gradient structure",
        worst_grad < 1e-5 && worst_rise <= 1e-12,
        &format!(
            "field vs -grad potential relative error {worst_grad:.1e}, largest potential increase along {curves} forward traces {worst_rise:.1e}"
        ),
    );
}

#[test]
fn criterion_08_condition_checker() {
    let tetra = generate_canonical(Solid::Tetrahedron);
    let r = check_condition(tetra.vertex_caps(), &[WeightFamily::Sec; 4]).unwrap();
    let tetra_ok = !r.passed()
        && r.failures().all(|c| c.indices.len() == 2 && c.lhs == 2.0 && c.rhs == 2.0)
        && r.summary() == "condition (2) fails: |I(q)|=2, n=4";
    let cube = generate_canonical(Solid::Cube);
    let cube_ok = check_condition(cube.vertex_caps(), &[WeightFamily::Sec; 8]).unwrap().passed();
    let caps = six_caps(1);
    let six = check_condition(&caps, &[WeightFamily::Sec; 6]).unwrap();
    let solved = solve_caps(&caps, &[WeightFamily::Sec; 6], &SolveOptions::default()).unwrap();
    let six_ok = six.passed() && solved.status == SolveStatus::Converged && solved.residual < 1e-7;
    verdict(
        8,
        "condition checker",
        tetra_ok && cube_ok && six_ok,
        &format!(
            "tetra: {}; cube: {}; six caps on S^3: {}, solve {} residual {:.1e}",
            r.summary(),
            if cube_ok { "holds" } else { "fails" },
            six.summary(),
            solved.status,
            solved.residual
        ),
    );
}

#[test]
fn criterion_09_drift_construction() {
    let t = generate_canonical(Solid::Tetrahedron);
    let mut escaped = None;
    for step in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0] {
        let (moved, _) = drift_construction(&t, 0, step).unwrap();
        let norm = cm0(&moved).point.norm();
        if norm > 1.0 {
            escaped = Some((step, norm, moved));
            break;
        }
    }
    let Some((step, norm, moved)) = escaped else {
        verdict(9, "drift construction", false, "|cm0| never exceeded 1");
        return;
    };
    let r = solve(&moved, &CenterSpec::Cm0, &SolveOptions::default()).unwrap();
    let res = recomputed_residual(&moved, &CenterSpec::Cm0, &r);
    verdict(
        9,
        "drift construction",
        r.status == SolveStatus::Converged && res < 1e-8,
        &format!("step {step}: |cm0| = {norm:.4}; re-centered {} to {res:.1e}", r.status),
    );
}

#[test]
fn criterion_10_cm3_honesty() {
    let mut converged = 0;
    let mut other = 0;
    let mut dishonest = Vec::new();
    let mut wrong_status = Vec::new();
    for solid in SWEEP {
        for seed in 0..100 {
            let s = perturbed(solid, seed, 2.0);
            let r = solve(&s, &CenterSpec::Cm3, &SolveOptions::default()).unwrap();
            match r.status {
                SolveStatus::Converged => {
                    converged += 1;
                    let res = recomputed_residual(&s, &CenterSpec::Cm3, &r);
                    if !(res < 1e-8 && r.residual < 1e-8) {
                        dishonest.push(format!("{solid}/{seed}: {res:.1e}"));
                    }
                }
                SolveStatus::MaxIter => other += 1,
                st => wrong_status.push(format!("{solid}/{seed}: {st}")),
            }
        }
    }
    // the command-line surface of non-convergence
    let dir = tempfile::TempDir::new().unwrap();
    let input = dir.path().join("t.json");
    let generated = Command::new(env!("CARGO_BIN_EXE_koebe"))
        .args(["generate", "tetrahedron", "--rapidity", "1.0", "--seed", "3", "-o"])
        .arg(&input)
        .status()
        .unwrap();
    assert!(generated.success());
    let out = Command::new(env!("CARGO_BIN_EXE_koebe"))
        .args(["center", "--spec", "cm3", "--max-iter", "1"])
        .arg(&input)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    let cli_ok = out.status.code() == Some(3) && stdout.starts_with("MaxIter");
    verdict(
        10,
        "cm3 honesty",
        dishonest.is_empty() && wrong_status.is_empty() && cli_ok,
        &format!(
            "{converged} converged (all re-checked below 1e-8: {}), {other} MaxIter, other statuses {:?}; --max-iter 1 exits {:?} with `{}`",
            dishonest.is_empty(),
            wrong_status,
            out.status.code(),
            stdout.trim()
        ),
    );
}

#[test]
fn criterion_11_circumcenter_discrepancy() {
    let out = Command::new(env!("CARGO_BIN_EXE_koebe"))
        .args(["circumcenter-report", "--samples", "3", "--seed", "1"])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    let row = |label: &str| -> Vec<f64> {
        text.lines()
            .find(|l| l.starts_with(label))
            .map(|l| {
                l[label.len()..]
                    .trim()
                    .trim_matches(|c| c == '[' || c == ']')
                    .split(',')
                    .map(|x| x.trim().parse().unwrap())
                    .collect()
            })
            .unwrap_or_default()
    };
    let printed = row("N (printed)");
    let gram = row("N (Gram solve)");
    let sym_ok = printed.len() == 3
        && gram.len() == 3
        && printed.iter().all(|x| (x - 3.0).abs() < 1e-9)
        && gram.iter().all(|x| (x - 1.5 * 3f64.sqrt()).abs() < 1e-9);
    let asym = text.matches("asymmetric instance").count();
    verdict(
        11,
        "circumcenter discrepancy ledger",
        out.status.success() && sym_ok && asym == 3,
        &format!(
            "symmetric t = sqrt 2: printed N = {:?}, Gram N = {:?} (3 sqrt 3 / 2 = {:.6}); {asym} asymmetric instances reported",
            printed,
            gram,
            1.5 * 3f64.sqrt()
        ),
    );
}

#[test]
fn criterion_12_uniqueness_probe() {
    let mut instances = 0;
    let mut disagree: Vec<String> = Vec::new();
    let mut worst: f64 = 0.0;
    for solid in SWEEP {
        for spec in sweep_specs(solid) {
            let mut bad = 0;
            for seed in 0..10 {
                let s = perturbed(solid, seed, 2.0);
                let opts = SolveOptions {
                    seed,
                    ..SolveOptions::default()
                };
                let (reports, spread) = multistart(&s, &spec, 20, &opts).unwrap();
                instances += 1;
                let all = reports.iter().all(|r| r.status == SolveStatus::Converged);
                if !all || spread >= 1e-6 {
                    bad += 1;
                }
                if all {
                    worst = worst.max(spread);
                }
            }
            if bad > 0 {
                disagree.push(format!("{solid}/{spec} {bad}/10"));
            }
        }
    }
    verdict(
        12,
        "uniqueness probe",
        disagree.is_empty(),
        &format!(
            "{instances} instances x 20 starts; largest spread {worst:.2e}; disagreeing {:?}",
            disagree
        ),
    );
}
