//! Finding the point `p` of `D` whose boost to the origin centers a cap system,
//! the minimax solver for the circumscribed and inscribed balls, and the
//! integral-curve tracer.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::centers::{self, CenterError, CenterSpec, CERTIFICATE_TOLERANCE};
use crate::fields::{
    self, check_condition, check_disconnected, min_plane_distance, ConditionReport,
    FieldError, WeightFamily,
};
use crate::hypcore::{
    apply_cap, ball_chart, ball_chart_inverse, boost_to_origin, cap_to_pole, geodesic_exp,
    random_unit, HPoint, LorentzMap, MinkowskiVec, SphericalCap, TangentVec,
};
use crate::koebe::{
    perturb, pole_tangency_point, validate, KoebeCapSystem, KoebeError, DEFAULT_TOLERANCE,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid cap system: {0}")]
    Invalid(String),
    #[error(transparent)]
    Spec(#[from] CenterError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Koebe(#[from] KoebeError),
    #[error("start point is outside the domain")]
    StartOutsideDomain,
    #[error("{0}")]
    Options(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Newton with flow fallback and restarts from alternative start points.
    Auto,
    Newton,
    Flow,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(Method::Auto),
            "newton" => Ok(Method::Newton),
            "flow" => Ok(Method::Flow),
            other => Err(format!("unknown solver method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Target for `|g(T(P))|`.
    pub tol_residual: f64,
    pub tol_step: f64,
    pub max_iter: usize,
    pub method: Method,
    /// Iterates keep at least this hyperbolic distance from every plane.
    pub boundary_margin: f64,
    pub seed: u64,
    /// Explicit start point; must lie in `D`.
    pub start: Option<HPoint>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_residual: 1e-8,
            tol_step: 1e-12,
            max_iter: 200,
            method: Method::Auto,
            boundary_margin: 1e-6,
            seed: 0,
            start: None,
        }
    }
}

impl SolveOptions {
    pub fn check(&self) -> Result<(), SolveError> {
        if !(self.tol_residual > 0.0 && self.tol_step > 0.0 && self.boundary_margin > 0.0) {
            return Err(SolveError::Options("tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(SolveError::Options("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    BoundaryEscape,
    ConditionViolated,
    NotSupported,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolveStatus::Converged => "Converged",
            SolveStatus::MaxIter => "MaxIter",
            SolveStatus::BoundaryEscape => "BoundaryEscape",
            SolveStatus::ConditionViolated => "ConditionViolated",
            SolveStatus::NotSupported => "NotSupported",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub point: HPoint,
    /// `boost_to_origin(point)`.
    pub transform: LorentzMap,
    /// Final `|g(T(P))|`; for minimax solves, the certificate's hull distance.
    pub residual: f64,
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub wall_time: Duration,
    pub message: Option<String>,
    pub condition: Option<ConditionReport>,
}

/// A centering problem: planes bounding the domain, the residual of the
/// boosted system, and the intrinsic field.
trait Problem: Sync {
    fn dim(&self) -> usize;
    fn poles(&self) -> &[MinkowskiVec];
    /// `g(boost_to_origin(p)(S))`; `None` where undefined.
    fn residual(&self, p: &HPoint) -> Option<DVector<f64>>;
    fn field(&self, p: &HPoint) -> Option<TangentVec>;
    /// Ideal points used for the centering start.
    fn anchors(&self) -> Vec<DVector<f64>>;
}

struct KoebeProblem<'a> {
    system: &'a KoebeCapSystem,
    spec: CenterSpec,
    poles: Vec<MinkowskiVec>,
}

impl<'a> KoebeProblem<'a> {
    fn new(system: &'a KoebeCapSystem, spec: CenterSpec) -> Self {
        Self {
            system,
            spec,
            poles: system.all_poles(),
        }
    }
}

impl Problem for KoebeProblem<'_> {
    fn dim(&self) -> usize {
        3
    }

    fn poles(&self) -> &[MinkowskiVec] {
        &self.poles
    }

    fn residual(&self, p: &HPoint) -> Option<DVector<f64>> {
        let moved = perturb(self.system, &boost_to_origin(p)).ok()?;
        let g = centers::center(&moved, &self.spec).ok()?;
        Some(DVector::from_column_slice(g.point.as_slice()))
    }

    fn field(&self, p: &HPoint) -> Option<TangentVec> {
        fields::lift_field(&self.spec, self.system, p)
            .ok()
            .map(|f| f.total)
    }

    fn anchors(&self) -> Vec<DVector<f64>> {
        let vp = self.system.vertex_poles();
        self.system
            .combinatorics()
            .edges()
            .iter()
            .map(|&[i, j]| DVector::from_column_slice(pole_tangency_point(&vp[i], &vp[j]).as_slice()))
            .collect()
    }
}

struct CapsProblem<'a> {
    caps: &'a [SphericalCap],
    weights: &'a [WeightFamily],
    poles: Vec<MinkowskiVec>,
}

impl Problem for CapsProblem<'_> {
    fn dim(&self) -> usize {
        self.caps[0].spatial_dim()
    }

    fn poles(&self) -> &[MinkowskiVec] {
        &self.poles
    }

    fn residual(&self, p: &HPoint) -> Option<DVector<f64>> {
        let t = boost_to_origin(p);
        let mut sum = DVector::zeros(self.dim());
        for (c, w) in self.caps.iter().zip(self.weights) {
            let moved = apply_cap(&t, c).ok()?;
            if !moved.is_proper() {
                return None;
            }
            sum += moved.center() * w.weight(moved.radius());
        }
        Some(sum)
    }

    fn field(&self, p: &HPoint) -> Option<TangentVec> {
        fields::weighted_cap_field(p, self.caps, self.weights)
            .ok()
            .map(|f| f.total)
    }

    fn anchors(&self) -> Vec<DVector<f64>> {
        self.caps.iter().map(|c| c.center().clone()).collect()
    }
}

fn feasible(problem: &dyn Problem, b: &DVector<f64>, margin: f64) -> Option<HPoint> {
    let p = ball_chart_inverse(b).ok()?;
    (min_plane_distance(&p, problem.poles()) > margin).then_some(p)
}

fn fd_jacobian(
    problem: &dyn Problem,
    b: &DVector<f64>,
    margin: f64,
) -> Option<DMatrix<f64>> {
    let m = b.len();
    let mut jac = DMatrix::zeros(m, m);
    for k in 0..m {
        let mut h = 1e-6;
        let col = loop {
            let mut bp = b.clone();
            let mut bm = b.clone();
            bp[k] += h;
            bm[k] -= h;
            let rp = feasible(problem, &bp, 0.5 * margin).and_then(|p| problem.residual(&p));
            let rm = feasible(problem, &bm, 0.5 * margin).and_then(|p| problem.residual(&p));
            if let (Some(rp), Some(rm)) = (rp, rm) {
                break (rp - rm) / (2.0 * h);
            }
            h *= 0.1;
            if h < 1e-10 {
                return None;
            }
        };
        jac.set_column(k, &col);
    }
    Some(jac)
}

fn linear_solve(a: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(x) = a.clone().lu().solve(rhs) {
        if x.iter().all(|v| v.is_finite()) {
            return Some(x);
        }
    }
    a.clone().svd(true, true).solve(rhs, 1e-14).ok()
}

struct State {
    b: DVector<f64>,
    p: HPoint,
    r: DVector<f64>,
}

fn newton_step(problem: &dyn Problem, s: &State, opts: &SolveOptions) -> Option<State> {
    let jac = fd_jacobian(problem, &s.b, opts.boundary_margin)?;
    let delta = linear_solve(&jac, &(-&s.r))?;
    let r0 = s.r.norm();
    let mut t = 1.0;
    while t * delta.norm() >= opts.tol_step {
        let b = &s.b + &delta * t;
        if let Some(p) = feasible(problem, &b, opts.boundary_margin) {
            if let Some(r) = problem.residual(&p) {
                if r.norm() < (1.0 - 1e-4 * t) * r0 {
                    return Some(State { b, p, r });
                }
            }
        }
        t *= 0.5;
    }
    None
}

fn flow_step(
    problem: &dyn Problem,
    s: &State,
    gamma: &mut f64,
    opts: &SolveOptions,
) -> Option<State> {
    let h = problem.field(&s.p)?;
    let len = h.norm();
    if !(len > 0.0) {
        return None;
    }
    let dir = h.scale(1.0 / len);
    let r0 = s.r.norm();
    while *gamma >= opts.tol_step {
        for sign in [-1.0, 1.0] {
            let p = geodesic_exp(&s.p, &dir, sign * *gamma);
            if min_plane_distance(&p, problem.poles()) <= opts.boundary_margin {
                continue;
            }
            if let Some(r) = problem.residual(&p) {
                if r.norm() < r0 {
                    *gamma = (*gamma * 1.5).min(1.0);
                    return Some(State {
                        b: ball_chart(&p),
                        p,
                        r,
                    });
                }
            }
        }
        *gamma *= 0.5;
    }
    None
}

struct RunOutcome {
    status: SolveStatus,
    state: State,
    history: Vec<f64>,
    iterations: usize,
}

fn run_from(
    problem: &dyn Problem,
    start: HPoint,
    opts: &SolveOptions,
    budget: usize,
) -> Option<RunOutcome> {
    let r = problem.residual(&start)?;
    let mut s = State {
        b: ball_chart(&start),
        p: start,
        r,
    };
    let mut history = vec![s.r.norm()];
    let mut iterations = 0;
    let mut use_newton = opts.method != Method::Flow;
    let mut gamma = s.r.norm().clamp(1e-6, 0.5);
    let mut failed_switches = 0;
    let status = loop {
        if s.r.norm() <= opts.tol_residual {
            break SolveStatus::Converged;
        }
        if iterations >= budget {
            break SolveStatus::MaxIter;
        }
        iterations += 1;
        let next = if use_newton {
            newton_step(problem, &s, opts)
        } else {
            flow_step(problem, &s, &mut gamma, opts)
        };
        match next {
            Some(n) => {
                s = n;
                history.push(s.r.norm());
                failed_switches = 0;
            }
            None => {
                failed_switches += 1;
                if opts.method != Method::Auto || failed_switches >= 2 {
                    let near_boundary = min_plane_distance(&s.p, problem.poles()) < 1e-3;
                    break if near_boundary {
                        SolveStatus::BoundaryEscape
                    } else {
                        SolveStatus::MaxIter
                    };
                }
                use_newton = !use_newton;
                gamma = s.r.norm().clamp(1e-6, 0.5);
            }
        }
    };
    Some(RunOutcome {
        status,
        state: s,
        history,
        iterations,
    })
}

/// The point of `H^{d+1}` from which the given ideal points have barycenter
/// zero: the minimizer of the convex sum of Busemann functions
/// `sum_k log(-<p, (u_k, 1)>)`. Needs at least three points, none carrying
/// half of the total.
pub fn ideal_centering_point(points: &[DVector<f64>]) -> Option<HPoint> {
    let dim = points.first()?.len();
    let lights: Vec<MinkowskiVec> = points
        .iter()
        .map(|u| MinkowskiVec::from_parts(&u.normalize(), 1.0))
        .collect();
    let objective = |p: &HPoint| -> f64 { lights.iter().map(|l| (-p.vec().dot(l)).ln()).sum() };
    let mut p = HPoint::origin(dim);
    for _ in 0..100 {
        let frame = LorentzMap::boost_from_origin(&p);
        let inv = frame.inverse();
        let mut grad = DVector::zeros(dim);
        let mut hess = DMatrix::identity(dim, dim) * points.len() as f64;
        for l in &lights {
            let moved = inv.apply(l);
            let u = moved.spatial_owned() / moved.time();
            grad += &u;
            hess -= &u * u.transpose();
        }
        if grad.norm() < 1e-14 * points.len() as f64 {
            return Some(p);
        }
        let step = linear_solve(&hess, &grad)?;
        let f0 = objective(&p);
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let x = &step * t;
            let local = HPoint::from_spatial(&(&x / x.norm().max(1e-300) * x.norm().sinh()));
            let candidate = frame.apply_point(&local);
            if objective(&candidate) < f0 {
                p = candidate;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Some(p);
        }
    }
    Some(p)
}

/// Locally maximizes `min_k d_k(p)` over the `objective` planes inside the
/// region bounded by the `domain` planes, by Nelder-Mead in ball coordinates.
fn nelder_mead_maximin(
    objective: &[MinkowskiVec],
    domain: &[MinkowskiVec],
    start: &HPoint,
    iters: usize,
) -> HPoint {
    let dim = start.spatial_dim();
    let f = |b: &DVector<f64>| -> f64 {
        match ball_chart_inverse(b) {
            Ok(p) if min_plane_distance(&p, domain) > 0.0 => -min_plane_distance(&p, objective),
            _ => f64::INFINITY,
        }
    };
    let b0 = ball_chart(start);
    let scale = 0.1 * (1.0 - b0.norm()).max(1e-3);
    let mut simplex: Vec<(DVector<f64>, f64)> = (0..=dim)
        .map(|k| {
            let mut b = b0.clone();
            if k > 0 {
                b[k - 1] += scale;
            }
            let v = f(&b);
            (b, v)
        })
        .collect();
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[dim].1 - simplex[0].1;
        let size = simplex
            .iter()
            .map(|(b, _)| (b - &simplex[0].0).norm())
            .fold(0.0, f64::max);
        if spread.abs() < 1e-15 && size < 1e-13 {
            break;
        }
        let centroid = simplex[..dim]
            .iter()
            .fold(DVector::zeros(dim), |acc, (b, _)| acc + b)
            / dim as f64;
        let worst = simplex[dim].clone();
        let reflect = &centroid + (&centroid - &worst.0);
        let fr = f(&reflect);
        if fr < simplex[0].1 {
            let expand = &centroid + (&reflect - &centroid) * 2.0;
            let fe = f(&expand);
            simplex[dim] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflect, fr);
        } else {
            let contract = if fr < worst.1 {
                &centroid + (&reflect - &centroid) * 0.5
            } else {
                &centroid + (&worst.0 - &centroid) * 0.5
            };
            let fc = f(&contract);
            if fc < worst.1.min(fr) {
                simplex[dim] = (contract, fc);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let b = &best + (&item.0 - &best) * 0.5;
                    let v = f(&b);
                    *item = (b, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    ball_chart_inverse(&simplex[0].0).unwrap_or_else(|_| start.clone())
}

/// Local data of plane `s` in the frame of `frame` (which maps `o` to `p`):
/// distance, gradient and Hessian of the distance at the frame origin.
fn plane_jet(frame_inv: &LorentzMap, s: &MinkowskiVec) -> (f64, DVector<f64>, DMatrix<f64>) {
    let moved = frame_inv.apply(s);
    let a = moved.spatial_owned();
    let tau = moved.time();
    let d = tau.asinh();
    let c = d.cosh();
    let grad = -&a / c;
    let dim = a.len();
    let hess = DMatrix::identity(dim, dim) * (tau / c) - &a * a.transpose() * (tau / (c * c * c));
    (d, grad, hess)
}

/// Residual and Jacobian of the optimality system of `max_p min_i d_i(p)` on
/// an active set: `d_i = t`, `sum mu_i grad d_i = 0`, `sum mu_i = 1`, with
/// derivatives taken in the frame centered at `p`.
fn kkt_system(
    poles: &[MinkowskiVec],
    active: &[usize],
    p: &HPoint,
    t: f64,
    mu: &[f64],
) -> (DVector<f64>, DMatrix<f64>, LorentzMap) {
    let dim = p.spatial_dim();
    let frame = LorentzMap::boost_from_origin(p);
    let inv = frame.inverse();
    let k = active.len();
    let mut jac = DMatrix::zeros(k + dim + 1, dim + 1 + k);
    let mut f = DVector::zeros(k + dim + 1);
    let mut lag_hess = DMatrix::zeros(dim, dim);
    let mut lag_grad = DVector::zeros(dim);
    for (r, &i) in active.iter().enumerate() {
        let (d, g, h) = plane_jet(&inv, &poles[i]);
        jac.view_mut((r, 0), (1, dim)).copy_from(&g.transpose());
        jac[(r, dim)] = -1.0;
        f[r] = d - t;
        lag_hess += h * mu[r];
        lag_grad += &g * mu[r];
        jac.view_mut((k, dim + 1 + r), (dim, 1)).copy_from(&g);
        jac[(k + dim, dim + 1 + r)] = 1.0;
    }
    jac.view_mut((k, 0), (dim, dim)).copy_from(&lag_hess);
    f.rows_mut(k, dim).copy_from(&lag_grad);
    f[k + dim] = mu.iter().sum::<f64>() - 1.0;
    (f, jac, frame)
}

fn move_in_frame(frame: &LorentzMap, dx: &DVector<f64>) -> HPoint {
    let n = dx.norm();
    if n == 0.0 {
        return frame.apply_point(&HPoint::origin(dx.len()));
    }
    frame.apply_point(&HPoint::from_spatial(&(dx * (n.sinh() / n))))
}

fn distances(poles: &[MinkowskiVec], p: &HPoint) -> Vec<f64> {
    poles
        .iter()
        .map(|s| crate::hypcore::plane_distance(p, s))
        .collect()
}

/// Multipliers minimizing `|sum mu_i grad d_i|` subject to `sum mu_i = 1`.
fn initial_multipliers(poles: &[MinkowskiVec], active: &[usize], p: &HPoint) -> Vec<f64> {
    let dim = p.spatial_dim();
    let k = active.len();
    let inv = LorentzMap::boost_from_origin(p).inverse();
    let mut a = DMatrix::zeros(dim + 1, k);
    for (r, &i) in active.iter().enumerate() {
        let (_, g, _) = plane_jet(&inv, &poles[i]);
        a.view_mut((0, r), (dim, 1)).copy_from(&g);
        a[(dim, r)] = 1.0;
    }
    let mut rhs = DVector::zeros(dim + 1);
    rhs[dim] = 1.0;
    match a.svd(true, true).solve(&rhs, 1e-12) {
        Ok(m) => m.iter().copied().collect(),
        Err(_) => vec![1.0 / k as f64; k],
    }
}

/// Newton on the optimality system with active-set updates, from `start`.
/// Returns the point when it verifies as a local maximin.
fn kkt_polish(poles: &[MinkowskiVec], start: &HPoint, active_tol: f64) -> Option<HPoint> {
    let mut p = start.clone();
    let d0 = distances(poles, &p);
    let phi = d0.iter().copied().fold(f64::INFINITY, f64::min);
    let mut active: Vec<usize> = (0..poles.len())
        .filter(|&i| d0[i] <= phi + active_tol)
        .collect();
    let mut mu = initial_multipliers(poles, &active, &p);
    let mut t = phi;
    for _round in 0..20 {
        for _ in 0..50 {
            let (f, jac, frame) = kkt_system(poles, &active, &p, t, &mu);
            let f0 = f.norm();
            if f0 < 1e-14 {
                break;
            }
            let step = jac.svd(true, true).solve(&(-&f), 1e-13).ok()?;
            let k = active.len();
            let dim = p.spatial_dim();
            let mut scale = 1.0;
            let mut improved = false;
            while scale > 1e-6 {
                let dx = step.rows(0, dim) * scale;
                let q = move_in_frame(&frame, &dx.into_owned());
                let tq = t + step[dim] * scale;
                let mq: Vec<f64> = (0..k).map(|r| mu[r] + step[dim + 1 + r] * scale).collect();
                let (fq, _, _) = kkt_system(poles, &active, &q, tq, &mq);
                if fq.norm() < f0 * (1.0 - 1e-4 * scale) {
                    p = q;
                    t = tq;
                    mu = mq;
                    improved = true;
                    break;
                }
                scale *= 0.5;
            }
            if !improved {
                break;
            }
        }
        let d = distances(poles, &p);
        if let Some(r) = (0..mu.len())
            .filter(|&r| mu[r] < -1e-10)
            .min_by(|&a, &b| mu[a].total_cmp(&mu[b]))
        {
            active.remove(r);
            mu.remove(r);
            if active.is_empty() {
                return None;
            }
            mu = initial_multipliers(poles, &active, &p);
            t = active.iter().map(|&i| d[i]).fold(f64::INFINITY, f64::min);
            continue;
        }
        if let Some(j) = (0..poles.len())
            .filter(|j| !active.contains(j))
            .min_by(|&a, &b| d[a].total_cmp(&d[b]))
            .filter(|&j| d[j] < t - 1e-12)
        {
            active.push(j);
            mu.push(0.0);
            continue;
        }
        let (f, _, _) = kkt_system(poles, &active, &p, t, &mu);
        return (f.norm() < 1e-11).then_some(p);
    }
    None
}

/// Refines a rough maximin point. Candidate active sets come from several
/// gaps above the smallest distance; the first verified candidate wins, and
/// the rough point is kept when no candidate verifies.
fn polish_maximin(poles: &[MinkowskiVec], rough: HPoint) -> HPoint {
    let phi = |p: &HPoint| distances(poles, p).into_iter().fold(f64::INFINITY, f64::min);
    let rough_phi = phi(&rough);
    for k in 2..=10 {
        if let Some(q) = kkt_polish(poles, &rough, 10f64.powi(-k)) {
            if phi(&q) >= rough_phi - 1e-12 {
                return q;
            }
        }
    }
    rough
}

/// Which plane family the minimax solver balances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlaneFamily {
    /// Circumscribed ball: vertex planes.
    VertexPlanes,
    /// Inscribed ball: face planes.
    FacePlanes,
}

fn starting_points(problem: &dyn Problem, margin: f64) -> Vec<HPoint> {
    let dim = problem.dim();
    let o = HPoint::origin(dim);
    let mut starts = Vec::new();
    if min_plane_distance(&o, problem.poles()) > margin {
        starts.push(o.clone());
    }
    if let Some(c) = ideal_centering_point(&problem.anchors()) {
        if min_plane_distance(&c, problem.poles()) > margin {
            starts.push(c);
        }
    }
    let seed = starts.last().cloned().unwrap_or(o);
    let deep = nelder_mead_maximin(problem.poles(), problem.poles(), &seed, 4000);
    if min_plane_distance(&deep, problem.poles()) > margin {
        starts.push(deep);
    }
    starts
}

fn finish(
    problem: &dyn Problem,
    outcome: Option<RunOutcome>,
    fallback: HPoint,
    started: Instant,
) -> SolveReport {
    match outcome {
        Some(o) => SolveReport {
            status: o.status,
            transform: boost_to_origin(&o.state.p),
            residual: o.state.r.norm(),
            point: o.state.p,
            residual_history: o.history,
            iterations: o.iterations,
            wall_time: started.elapsed(),
            message: None,
            condition: None,
        },
        None => {
            let residual = problem
                .residual(&fallback)
                .map(|r| r.norm())
                .unwrap_or(f64::NAN);
            SolveReport {
                status: SolveStatus::BoundaryEscape,
                transform: boost_to_origin(&fallback),
                point: fallback,
                residual,
                residual_history: vec![],
                iterations: 0,
                wall_time: started.elapsed(),
                message: Some("no start point inside the domain".into()),
                condition: None,
            }
        }
    }
}

fn solve_problem(problem: &dyn Problem, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    opts.check()?;
    let started = Instant::now();
    let starts = match &opts.start {
        Some(p) => {
            if min_plane_distance(p, problem.poles()) <= 0.0 {
                return Err(SolveError::StartOutsideDomain);
            }
            vec![p.clone()]
        }
        None => starting_points(problem, opts.boundary_margin),
    };
    let fallback = starts
        .first()
        .cloned()
        .unwrap_or_else(|| HPoint::origin(problem.dim()));
    let mut best: Option<RunOutcome> = None;
    let mut used = 0;
    for start in starts {
        if used >= opts.max_iter {
            break;
        }
        let Some(out) = run_from(problem, start, opts, opts.max_iter - used) else {
            continue;
        };
        used += out.iterations;
        let done = out.status == SolveStatus::Converged || opts.method != Method::Auto;
        let better = best
            .as_ref()
            .is_none_or(|b| out.state.r.norm() < b.state.r.norm());
        if better {
            let mut out = out;
            if let Some(prev) = &best {
                let mut h = prev.history.clone();
                h.extend(out.history);
                out.history = h;
            }
            best = Some(out);
        }
        if done {
            break;
        }
    }
    if let Some(b) = best.as_mut() {
        b.iterations = used;
    }
    Ok(finish(problem, best, fallback, started))
}

fn check_system(system: &KoebeCapSystem) -> Result<(), SolveError> {
    let report = validate(system, DEFAULT_TOLERANCE);
    if !report.passed() {
        let names: Vec<_> = report.failures().iter().map(|c| c.name).collect();
        return Err(SolveError::Invalid(names.join(", ")));
    }
    Ok(())
}

fn refused(dim: usize, condition: ConditionReport, started: Instant, msg: String) -> SolveReport {
    let o = HPoint::origin(dim);
    SolveReport {
        status: SolveStatus::ConditionViolated,
        transform: LorentzMap::identity(dim),
        point: o,
        residual: f64::NAN,
        residual_history: vec![],
        iterations: 0,
        wall_time: started.elapsed(),
        message: Some(msg),
        condition: Some(condition),
    }
}

/// Finds `p` in `D` with `g(boost_to_origin(p)(S)) = o`.
pub fn solve(
    system: &KoebeCapSystem,
    spec: &CenterSpec,
    opts: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    check_system(system)?;
    spec.check_combinatorics(system.combinatorics())?;
    match spec {
        CenterSpec::Cc => return solve_minimax(system, PlaneFamily::VertexPlanes),
        CenterSpec::Ic => return solve_minimax(system, PlaneFamily::FacePlanes),
        CenterSpec::WeightedCaps(w) => {
            let weights = vec![*w; system.n_vertices()];
            let condition = check_condition(system.vertex_caps(), &weights)?;
            if !condition.passed() {
                let msg = condition.summary();
                return Ok(refused(3, condition, Instant::now(), msg));
            }
        }
        _ => {}
    }
    let problem = KoebeProblem::new(system, *spec);
    solve_problem(&problem, opts)
}

/// Centers a weighted cap system on `S^d`: finds `T` with
/// `sum_i w_i(rho_T(C_i)) c_T(C_i) = o`. Refuses when the hypotheses fail.
pub fn solve_caps(
    caps: &[SphericalCap],
    weights: &[WeightFamily],
    opts: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    if caps.is_empty() {
        return Err(SolveError::Invalid("no caps".into()));
    }
    let dim = caps[0].spatial_dim();
    if caps.iter().any(|c| c.spatial_dim() != dim) {
        return Err(SolveError::Invalid("caps of mixed dimension".into()));
    }
    let started = Instant::now();
    let condition = check_condition(caps, weights)?;
    if !check_disconnected(caps) {
        let msg = "the union of the cap interiors is connected".to_string();
        return Ok(refused(dim, condition, started, msg));
    }
    if !condition.passed() {
        let msg = condition.summary();
        return Ok(refused(dim, condition, started, msg));
    }
    let problem = CapsProblem {
        caps,
        weights,
        poles: caps.iter().map(cap_to_pole).collect(),
    };
    let mut report = solve_problem(&problem, opts)?;
    report.condition = Some(condition);
    Ok(report)
}

/// Maximizes the smallest distance to the chosen plane family. The boosted
/// system then has its circumscribed (or inscribed) ball centered at `o`.
pub fn solve_minimax(
    system: &KoebeCapSystem,
    family: PlaneFamily,
) -> Result<SolveReport, SolveError> {
    check_system(system)?;
    let started = Instant::now();
    let comb = system.combinatorics();
    let (poles, adjacent): (Vec<MinkowskiVec>, Vec<[usize; 2]>) = match family {
        PlaneFamily::VertexPlanes => (system.vertex_poles(), comb.edges().to_vec()),
        PlaneFamily::FacePlanes => (
            system.face_poles(),
            comb.edge_faces().iter().map(|&[a, b]| [a.min(b), a.max(b)]).collect(),
        ),
    };
    let domain = system.all_poles();
    let problem = KoebeProblem::new(system, CenterSpec::Cm0);
    let mut seeds = starting_points(&problem, 1e-9);
    seeds.extend(tube_midpoints(&poles, &adjacent, &domain));
    seeds.extend(random_domain_points(system, 8, 0x5eed));

    let evaluate = |p: HPoint| -> Option<(HPoint, LorentzMap, centers::CertificateReport)> {
        let transform = boost_to_origin(&p);
        let moved = perturb(system, &transform).ok()?;
        let cert = match family {
            PlaneFamily::VertexPlanes => centers::cc_certificate(&moved, CERTIFICATE_TOLERANCE),
            PlaneFamily::FacePlanes => centers::ic_certificate(&moved, CERTIFICATE_TOLERANCE),
        };
        Some((p, transform, cert))
    };
    let mut best: Option<(HPoint, LorentzMap, centers::CertificateReport)> = None;
    let mut attempts = 0;
    for seed in seeds {
        attempts += 1;
        let mut rough = seed;
        for _ in 0..4 {
            rough = nelder_mead_maximin(&poles, &domain, &rough, 3000);
        }
        let Some(candidate) = evaluate(polish_maximin(&poles, rough)) else {
            continue;
        };
        let passed = candidate.2.passed;
        let better = best
            .as_ref()
            .is_none_or(|b| candidate.2.hull_distance < b.2.hull_distance);
        if passed || better {
            best = Some(candidate);
        }
        if passed {
            break;
        }
    }
    let (point, transform, cert) = best.ok_or_else(|| {
        SolveError::Invalid("no start point inside the domain".into())
    })?;
    let residual = match cert.enclosing_ball {
        Some(b) => cert.hull_distance.max(b.center.norm()),
        None => cert.hull_distance,
    };
    Ok(SolveReport {
        status: if cert.passed {
            SolveStatus::Converged
        } else {
            SolveStatus::MaxIter
        },
        point,
        transform,
        residual,
        residual_history: vec![residual],
        iterations: attempts,
        wall_time: started.elapsed(),
        message: None,
        condition: None,
    })
}

/// Midpoints of the common perpendiculars of non-adjacent plane pairs that
/// lie in `D`, nearest pairs first.
fn tube_midpoints(
    poles: &[MinkowskiVec],
    adjacent: &[[usize; 2]],
    domain: &[MinkowskiVec],
) -> Vec<HPoint> {
    let mut out: Vec<(f64, HPoint)> = Vec::new();
    for i in 0..poles.len() {
        for j in i + 1..poles.len() {
            if adjacent.contains(&[i, j]) {
                continue;
            }
            let x = poles[i].add(&poles[j]);
            if x.norm_sq() >= 0.0 || x.time() <= 0.0 {
                continue;
            }
            let Ok(p) = HPoint::from_timelike(&x) else {
                continue;
            };
            if min_plane_distance(&p, domain) > 0.0 {
                out.push((crate::hypcore::plane_distance(&p, &poles[i]), p));
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.into_iter().map(|(_, p)| p).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowDirection {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Endpoint {
    Zero,
    VertexPlane(usize),
    FacePlane(usize),
    Undetermined,
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Endpoint::Zero => f.write_str("Zero"),
            Endpoint::VertexPlane(i) => write!(f, "VertexPlane({i})"),
            Endpoint::FacePlane(j) => write!(f, "FacePlane({j})"),
            Endpoint::Undetermined => f.write_str("Undetermined"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceOptions {
    pub direction: FlowDirection,
    /// Residual `|g(T(P))|` below which the curve ends at a zero.
    pub tol_residual: f64,
    /// Distance to a plane below which the curve ends on it.
    pub boundary_epsilon: f64,
    /// Local error tolerance per step, in hyperbolic length.
    pub local_tolerance: f64,
    /// Largest hyperbolic distance between consecutive samples.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            direction: FlowDirection::Backward,
            tol_residual: 1e-8,
            boundary_epsilon: 1e-6,
            local_tolerance: 1e-8,
            max_step: 0.05,
            max_steps: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralCurve {
    /// `(arc length, point)` samples.
    pub samples: Vec<(f64, HPoint)>,
    pub endpoint: Endpoint,
    pub final_residual: f64,
    /// Residual `|g(T(P))|` at each sample.
    pub residuals: Vec<f64>,
}

impl IntegralCurve {
    pub fn end(&self) -> &HPoint {
        &self.samples.last().expect("curve has samples").1
    }
}

/// Ball-chart velocity of the normalized field `sign h / (1 + |h|)`.
fn ball_velocity(problem: &dyn Problem, b: &DVector<f64>, sign: f64) -> Option<DVector<f64>> {
    let p = ball_chart_inverse(b).ok()?;
    if min_plane_distance(&p, problem.poles()) <= 0.0 {
        return None;
    }
    let h = problem.field(&p)?;
    let v = h.vec.scale(sign / (1.0 + h.norm()));
    let t = p.vec().time();
    let x = p.vec().spatial_owned();
    Some(v.spatial_owned() / (1.0 + t) - x * (v.time() / ((1.0 + t) * (1.0 + t))))
}

fn trace_problem(
    problem: &dyn Problem,
    n_vertex_planes: usize,
    p0: &HPoint,
    opts: &TraceOptions,
) -> Result<IntegralCurve, SolveError> {
    if min_plane_distance(p0, problem.poles()) <= 0.0 {
        return Err(SolveError::StartOutsideDomain);
    }
    let sign = match opts.direction {
        FlowDirection::Forward => 1.0,
        FlowDirection::Backward => -1.0,
    };
    let classify_plane = |k: usize| {
        if k < n_vertex_planes {
            Endpoint::VertexPlane(k)
        } else {
            Endpoint::FacePlane(k - n_vertex_planes)
        }
    };
    let nearest = |p: &HPoint| -> (usize, f64) {
        problem
            .poles()
            .iter()
            .enumerate()
            .map(|(k, s)| (k, crate::hypcore::plane_distance(p, s)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one plane")
    };
    let res = |p: &HPoint| problem.residual(p).map(|r| r.norm()).unwrap_or(f64::NAN);

    // Dormand-Prince 5(4)
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let _ = C;

    let mut b = ball_chart(p0);
    let mut p = p0.clone();
    let mut arc = 0.0;
    let mut samples = vec![(0.0, p.clone())];
    let r0 = res(&p);
    let mut residuals = vec![r0];
    let mut h: f64 = 0.01;
    let mut endpoint = Endpoint::Undetermined;
    let mut steps = 0;
    loop {
        let r = *residuals.last().unwrap();
        if r < opts.tol_residual {
            endpoint = Endpoint::Zero;
            break;
        }
        let (k_near, d_near) = nearest(&p);
        if d_near < opts.boundary_epsilon {
            endpoint = classify_plane(k_near);
            break;
        }
        if steps >= opts.max_steps || b.norm() > 1.0 - 1e-12 {
            break;
        }
        steps += 1;
        h = h.min(opts.max_step).min(0.1 * d_near);
        let mut accepted = None;
        for _ in 0..60 {
            let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
            let mut ok = true;
            for stage in 0..7 {
                let mut y = b.clone();
                for (j, kj) in k.iter().enumerate() {
                    y += kj * (h * A[stage][j]);
                }
                match ball_velocity(problem, &y, sign) {
                    Some(v) => k.push(v),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                h *= 0.25;
                continue;
            }
            let mut y5 = b.clone();
            let mut y4 = b.clone();
            for s in 0..7 {
                y5 += &k[s] * (h * B5[s]);
                y4 += &k[s] * (h * B4[s]);
            }
            // convert the ball-chart error to hyperbolic length
            let conformal = 2.0 / (1.0 - y5.norm_squared()).max(1e-300);
            let err = (&y5 - &y4).norm() * conformal;
            if err <= opts.local_tolerance {
                accepted = Some(y5);
                let grow = if err > 0.0 {
                    0.9 * (opts.local_tolerance / err).powf(0.2)
                } else {
                    5.0
                };
                h *= grow.clamp(1.0, 5.0);
                break;
            }
            h *= (0.9 * (opts.local_tolerance / err).powf(0.25)).clamp(0.1, 0.9);
        }
        let Some(next) = accepted else {
            break;
        };
        let Ok(q) = ball_chart_inverse(&next) else {
            break;
        };
        if min_plane_distance(&q, problem.poles()) <= 0.0 {
            break;
        }
        arc += p.distance(&q);
        b = next;
        p = q;
        residuals.push(res(&p));
        samples.push((arc, p.clone()));
    }
    Ok(IntegralCurve {
        final_residual: *residuals.last().unwrap(),
        samples,
        endpoint,
        residuals,
    })
}

/// Integrates the lifted field of `spec` from `p0`. Backward integration runs
/// toward zeros of the field; forward integration runs into the bounding planes.
pub fn trace_curve(
    system: &KoebeCapSystem,
    spec: &CenterSpec,
    p0: &HPoint,
    opts: &TraceOptions,
) -> Result<IntegralCurve, SolveError> {
    if spec.is_minimax() {
        return Err(FieldError::NoField(spec.name()).into());
    }
    spec.check_combinatorics(system.combinatorics())?;
    let problem = KoebeProblem::new(system, *spec);
    trace_problem(&problem, system.n_vertices(), p0, opts)
}

/// Integrates the weighted cap field from `p0`.
pub fn trace_caps(
    caps: &[SphericalCap],
    weights: &[WeightFamily],
    p0: &HPoint,
    opts: &TraceOptions,
) -> Result<IntegralCurve, SolveError> {
    if weights.len() != caps.len() || caps.is_empty() {
        return Err(FieldError::WeightCount(weights.len(), caps.len()).into());
    }
    let problem = CapsProblem {
        caps,
        weights,
        poles: caps.iter().map(cap_to_pole).collect(),
    };
    trace_problem(&problem, caps.len(), p0, opts)
}

/// `count` random points of `D`, drawn deterministically from `seed` around
/// the deepest point.
pub fn random_domain_points(system: &KoebeCapSystem, count: usize, seed: u64) -> Vec<HPoint> {
    let poles = system.all_poles();
    let problem = KoebeProblem::new(system, CenterSpec::Cm0);
    let center = starting_points(&problem, 1e-9)
        .pop()
        .unwrap_or_else(|| HPoint::origin(3));
    let depth = min_plane_distance(&center, &poles);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frame = LorentzMap::boost_from_origin(&center);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let dir = random_unit(&mut rng, 3);
        let r: f64 = rng.random_range(0.0..1.0) * 2.0 * depth.max(0.1);
        let local = HPoint::from_spatial(&(dir * r.sinh()));
        let q = frame.apply_point(&local);
        if min_plane_distance(&q, &poles) > 1e-3 {
            out.push(q);
        }
    }
    out
}

/// Solves from `count` random start points; returns the reports and the
/// largest pairwise distance between converged solutions.
pub fn multistart(
    system: &KoebeCapSystem,
    spec: &CenterSpec,
    count: usize,
    opts: &SolveOptions,
) -> Result<(Vec<SolveReport>, f64), SolveError> {
    let starts = random_domain_points(system, count, opts.seed);
    let mut reports = Vec::with_capacity(count);
    for s in starts {
        let o = SolveOptions {
            start: Some(s),
            ..opts.clone()
        };
        reports.push(solve(system, spec, &o)?);
    }
    let converged: Vec<&HPoint> = reports
        .iter()
        .filter(|r| r.status == SolveStatus::Converged)
        .map(|r| &r.point)
        .collect();
    let mut spread: f64 = 0.0;
    for i in 0..converged.len() {
        for j in i + 1..converged.len() {
            spread = spread.max(converged[i].distance(converged[j]));
        }
    }
    Ok((reports, spread))
}

/// One unit of batch work.
#[derive(Debug, Clone)]
pub struct BatchJob {
    pub id: String,
    pub system: Result<KoebeCapSystem, String>,
    pub spec: CenterSpec,
    pub opts: SolveOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchRow {
    pub id: String,
    pub spec: String,
    pub status: String,
    pub residual: f64,
    pub iterations: usize,
    pub wall_ms: f64,
    pub error: Option<String>,
}

impl BatchRow {
    pub const CSV_HEADER: &'static str = "id,spec,status,residual,iterations,wall_ms,error";

    pub fn to_csv(&self) -> String {
        let err = self
            .error
            .as_deref()
            .map(|e| format!("\"{}\"", e.replace('"', "\"\"")))
            .unwrap_or_default();
        format!(
            "{},{},{},{:e},{},{:.3},{}",
            self.id, self.spec, self.status, self.residual, self.iterations, self.wall_ms, err
        )
    }
}

fn run_job(job: &BatchJob) -> BatchRow {
    let started = Instant::now();
    let result = job
        .system
        .as_ref()
        .map_err(|e| e.clone())
        .and_then(|s| solve(s, &job.spec, &job.opts).map_err(|e| e.to_string()));
    match result {
        Ok(r) => BatchRow {
            id: job.id.clone(),
            spec: job.spec.to_string(),
            status: r.status.to_string(),
            residual: r.residual,
            iterations: r.iterations,
            wall_ms: r.wall_time.as_secs_f64() * 1e3,
            error: r.message,
        },
        Err(e) => BatchRow {
            id: job.id.clone(),
            spec: job.spec.to_string(),
            status: "Error".into(),
            residual: f64::NAN,
            iterations: 0,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            error: Some(e),
        },
    }
}

/// Runs jobs on `workers` threads; rows come back in job order. Errors are
/// recorded per row.
pub fn batch(jobs: &[BatchJob], workers: usize) -> Vec<BatchRow> {
    let workers = workers.clamp(1, jobs.len().max(1));
    let next = AtomicUsize::new(0);
    let rows: Mutex<Vec<Option<BatchRow>>> = Mutex::new(vec![None; jobs.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= jobs.len() {
                    break;
                }
                let row = run_job(&jobs[k]);
                rows.lock().expect("rows lock")[k] = Some(row);
            });
        }
    });
    rows.into_inner()
        .expect("rows lock")
        .into_iter()
        .map(|r| r.expect("every job produces a row"))
        .collect()
}

/// Deterministic per-job seed.
pub fn job_seed(base: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.random()
}
