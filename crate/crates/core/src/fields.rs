//! Hyperbolic vector fields whose zeros are centering points, and the
//! hypothesis checks for weighted cap systems.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::centers::{self, CenterError, CenterSpec, Term};
use crate::hypcore::{
    cap_to_pole, plane_distance, unit_normal_toward, HPoint, HypError, MinkowskiVec,
    SphericalCap, TangentVec,
};
use crate::koebe::KoebeCapSystem;

/// Tolerance for detecting boundary coincidences of caps.
pub const COINCIDENCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("point lies outside the domain: plane {index} at distance {distance:e}")]
    OutsideDomain { index: usize, distance: f64 },
    #[error("non-positive field coefficient {0:e}")]
    NonPositiveCoefficient(f64),
    #[error("too close to the boundary: volume radicand {0:e}")]
    BoundaryProximity(f64),
    #[error("lambda must lie in [0, 1), got {0}")]
    LambdaOutOfRange(f64),
    #[error("weight family {0} has no closed-form limits")]
    NoClosedFormLimit(WeightFamily),
    #[error("{0} has no field")]
    NoField(&'static str),
    #[error("{0} weights for {1} caps")]
    WeightCount(usize, usize),
    #[error(transparent)]
    Center(CenterError),
    #[error(transparent)]
    Geometry(#[from] HypError),
}

impl From<CenterError> for FieldError {
    fn from(e: CenterError) -> Self {
        match e {
            CenterError::VolumeDomain(r) => FieldError::BoundaryProximity(r),
            CenterError::LambdaOutOfRange(l) => FieldError::LambdaOutOfRange(l),
            other => FieldError::Center(other),
        }
    }
}

/// Weight `w(t)` of a cap of spherical radius `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightFamily {
    /// `1 / cos t`
    Sec,
    /// `tan t`
    Tan,
    /// `(1 / cos t)^k`, `k >= 1`
    PowSec(f64),
}

impl WeightFamily {
    pub fn weight(&self, t: f64) -> f64 {
        match *self {
            WeightFamily::Sec => 1.0 / t.cos(),
            WeightFamily::Tan => t.tan(),
            WeightFamily::PowSec(k) => t.cos().powf(-k),
        }
    }

    /// `f(d) = w(arccos tanh d)`.
    pub fn of_distance(&self, d: f64) -> f64 {
        match *self {
            WeightFamily::Sec => 1.0 / d.tanh(),
            WeightFamily::Tan => 1.0 / d.sinh(),
            WeightFamily::PowSec(k) => d.tanh().powf(-k),
        }
    }

    /// An antiderivative `F` of `f`.
    pub fn antiderivative(&self, d: f64) -> f64 {
        match *self {
            WeightFamily::Sec => d.sinh().ln(),
            WeightFamily::Tan => (0.5 * d).tanh().ln(),
            WeightFamily::PowSec(k) if k == 1.0 => d.sinh().ln(),
            WeightFamily::PowSec(k) if k == 2.0 => d - 1.0 / d.tanh(),
            WeightFamily::PowSec(_) => {
                let sign = if d >= 1.0 { 1.0 } else { -1.0 };
                let (a, b) = if d >= 1.0 { (1.0, d) } else { (d, 1.0) };
                sign * adaptive_simpson(&|x| self.of_distance(x), a, b, 1e-13, 50)
            }
        }
    }

    pub fn has_closed_form_potential(&self) -> bool {
        match *self {
            WeightFamily::PowSec(k) => k == 1.0 || k == 2.0,
            _ => true,
        }
    }

    /// `lim_{t -> pi/2} w(t) cos t`.
    pub fn limit_at_hemisphere(&self) -> f64 {
        match *self {
            WeightFamily::Sec | WeightFamily::Tan => 1.0,
            WeightFamily::PowSec(k) if k == 1.0 => 1.0,
            WeightFamily::PowSec(_) => f64::INFINITY,
        }
    }

    /// `lim_{t -> 0} w(t)`.
    pub fn limit_at_point(&self) -> f64 {
        match *self {
            WeightFamily::Sec | WeightFamily::PowSec(_) => 1.0,
            WeightFamily::Tan => 0.0,
        }
    }
}

impl fmt::Display for WeightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFamily::Sec => f.write_str("sec"),
            WeightFamily::Tan => f.write_str("tan"),
            WeightFamily::PowSec(k) => write!(f, "powsec:{k}"),
        }
    }
}

impl FromStr for WeightFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.split_once(':') {
            None if lower == "sec" => Ok(WeightFamily::Sec),
            None if lower == "tan" => Ok(WeightFamily::Tan),
            Some(("powsec", k)) => match k.parse::<f64>() {
                Ok(k) if k >= 1.0 && k.is_finite() => Ok(WeightFamily::PowSec(k)),
                _ => Err(format!("powsec exponent must be a number >= 1, got `{k}`")),
            },
            _ => Err(format!("unknown weight family `{s}`")),
        }
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)
}

/// A tangent vector field value with its per-summand breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldEval {
    pub base: HPoint,
    pub total: TangentVec,
    pub contributions: Vec<(Term, MinkowskiVec)>,
    /// Minkowski norm of `total`.
    pub residual: f64,
    /// For lifted fields, the constant with `total(o) = kappa g(P)`.
    pub kappa: Option<f64>,
}

impl FieldEval {
    fn from_contributions(
        base: &HPoint,
        contributions: Vec<(Term, MinkowskiVec)>,
        kappa: Option<f64>,
    ) -> Self {
        let mut sum = MinkowskiVec::from_vector(nalgebra::DVector::zeros(base.spatial_dim() + 1));
        for (_, v) in &contributions {
            sum = sum.add(v);
        }
        let total = TangentVec::new(base.clone(), sum);
        let residual = total.norm();
        Self {
            base: base.clone(),
            total,
            contributions,
            residual,
            kappa,
        }
    }

    /// Affine combination `a self + b other` at the same base point.
    fn combine(&self, a: f64, other: &FieldEval, b: f64) -> FieldEval {
        let contributions = self
            .contributions
            .iter()
            .map(|(t, v)| (*t, v.scale(a)))
            .chain(other.contributions.iter().map(|(t, v)| (*t, v.scale(b))))
            .collect();
        FieldEval::from_contributions(&self.base, contributions, None)
    }
}

/// Signed distance to the nearest plane, `min_k plane_distance(p, s_k)`.
pub fn min_plane_distance(p: &HPoint, poles: &[MinkowskiVec]) -> f64 {
    poles
        .iter()
        .map(|s| plane_distance(p, s))
        .fold(f64::INFINITY, f64::min)
}

/// Whether `p` lies strictly on the positive side of every vertex and face plane.
pub fn in_domain(p: &HPoint, system: &KoebeCapSystem) -> bool {
    min_plane_distance(p, &system.all_poles()) > 0.0
}

struct Frame {
    dv: Vec<f64>,
    df: Vec<f64>,
    nv: Vec<MinkowskiVec>,
    nf: Vec<MinkowskiVec>,
}

fn distances_and_normals(
    p: &HPoint,
    poles: &[MinkowskiVec],
    offset: usize,
) -> Result<(Vec<f64>, Vec<MinkowskiVec>), FieldError> {
    let mut d = Vec::with_capacity(poles.len());
    let mut n = Vec::with_capacity(poles.len());
    for (k, s) in poles.iter().enumerate() {
        let dist = plane_distance(p, s);
        if !(dist > 0.0) {
            return Err(FieldError::OutsideDomain {
                index: offset + k,
                distance: dist,
            });
        }
        d.push(dist);
        n.push(unit_normal_toward(p, s)?.vec);
    }
    Ok((d, n))
}

fn frame(system: &KoebeCapSystem, p: &HPoint) -> Result<Frame, FieldError> {
    let (dv, nv) = distances_and_normals(p, &system.vertex_poles(), 0)?;
    let (df, nf) = distances_and_normals(p, &system.face_poles(), system.n_vertices())?;
    Ok(Frame { dv, df, nv, nf })
}

/// Angle of parallelism `arccos tanh d`, computed as `atan(csch d)`.
fn parallelism(d: f64) -> f64 {
    1.0_f64.atan2(d.sinh())
}

/// The field obtained by evaluating the coefficient functional of `spec` at the
/// intrinsic angles `alpha_i(p) = arccos tanh d_i(p)` and combining with the
/// unit normals at `p`. Its zero set corresponds to centering points.
pub fn lift_field(
    spec: &CenterSpec,
    system: &KoebeCapSystem,
    p: &HPoint,
) -> Result<FieldEval, FieldError> {
    if spec.is_minimax() {
        return Err(FieldError::NoField(spec.name()));
    }
    let fr = frame(system, p)?;
    let alpha: Vec<f64> = fr.dv.iter().map(|&d| parallelism(d)).collect();
    let beta: Vec<f64> = fr.df.iter().map(|&d| parallelism(d)).collect();
    let c = centers::coefficients(spec, system.combinatorics(), &alpha, &beta)?;
    if spec.has_positive_coefficients() {
        let min = c.min_coefficient();
        if !(min > 0.0) {
            return Err(FieldError::NonPositiveCoefficient(min));
        }
    }
    let contributions = c
        .terms
        .iter()
        .map(|t| {
            let mut v = fr.nv[0].scale(0.0);
            for &(i, w) in &t.vertex {
                v = v.axpy(w, &fr.nv[i]);
            }
            for &(j, w) in &t.face {
                v = v.axpy(w, &fr.nf[j]);
            }
            (t.term, v)
        })
        .collect();
    Ok(FieldEval::from_contributions(p, contributions, Some(c.kappa)))
}

/// Edge-skeleton field written directly in plane distances.
pub fn field_cm1_verbatim(p: &HPoint, system: &KoebeCapSystem) -> Result<FieldEval, FieldError> {
    let fr = frame(system, p)?;
    let contributions = system
        .combinatorics()
        .edges()
        .iter()
        .enumerate()
        .map(|(e, &[i, j])| {
            let (di, dj) = (fr.dv[i], fr.dv[j]);
            let pre = 1.0 / di.sinh() + 1.0 / dj.sinh();
            let v = fr.nv[i]
                .scale(pre / di.tanh())
                .axpy(pre / dj.tanh(), &fr.nv[j]);
            (Term::Edge(e), v)
        })
        .collect();
    Ok(FieldEval::from_contributions(p, contributions, None))
}

fn kite_field(
    p: &HPoint,
    system: &KoebeCapSystem,
    solid: bool,
) -> Result<FieldEval, FieldError> {
    let fr = frame(system, p)?;
    let contributions = system
        .combinatorics()
        .incidences()
        .iter()
        .map(|&(i, j)| {
            let (dv, df) = (fr.dv[i], fr.df[j]);
            let (sv, cf) = (dv.sinh(), df.cosh());
            let pre = if solid {
                df.sinh() / (sv * cf * cf)
            } else {
                1.0 / (sv * cf)
            };
            let den = cf * cf + sv * sv;
            let face = (2.0 * cf * cf + sv * sv) / den * df.tanh();
            let vertex = (cf * cf + 2.0 * sv * sv) / den / dv.tanh();
            let v = fr.nf[j].scale(pre * face).axpy(pre * vertex, &fr.nv[i]);
            (Term::Incidence(i, j), v)
        })
        .collect();
    Ok(FieldEval::from_contributions(p, contributions, None))
}

/// Surface field written directly in plane distances.
pub fn field_cm2_verbatim(p: &HPoint, system: &KoebeCapSystem) -> Result<FieldEval, FieldError> {
    kite_field(p, system, false)
}

/// Solid field written directly in plane distances. Its zero is not known to
/// exist in general.
pub fn field_cm3_verbatim(p: &HPoint, system: &KoebeCapSystem) -> Result<FieldEval, FieldError> {
    kite_field(p, system, true)
}

/// Circumcenter-of-mass field: intrinsic Gram solves per face.
pub fn field_ccm(p: &HPoint, system: &KoebeCapSystem) -> Result<FieldEval, FieldError> {
    lift_field(&CenterSpec::Ccm, system, p)
}

/// The printed closed-form coefficient `B_a` of the circumcenter-of-mass field
/// at plane distances `(d_a, d_b, d_c)`.
pub fn printed_ccm_coefficient(d: [f64; 3]) -> Result<f64, FieldError> {
    let tau = d.map(|x| 1.0 / x.sinh());
    let [ta, tb, tc] = tau;
    let radicand = ta * tb * tc * (ta + tb + tc - ta * tb * tc);
    if !(radicand > 0.0) {
        return Err(FieldError::BoundaryProximity(radicand));
    }
    let s = tb + tc;
    Ok(d[0].tanh() * s * (ta * ta * s + ta * (2.0 * tb * tb * tc * tc + tb * tb + tc * tc)
        - tb * tc * s)
        / radicand.sqrt())
}

/// The printed closed-form circumcenter-of-mass field, for comparison with
/// [`field_ccm`].
pub fn field_ccm_verbatim(p: &HPoint, system: &KoebeCapSystem) -> Result<FieldEval, FieldError> {
    let comb = system.combinatorics();
    if !comb.is_simplicial() {
        return Err(CenterError::NotSimplicial("ccm").into());
    }
    let fr = frame(system, p)?;
    let mut contributions = Vec::with_capacity(comb.n_faces());
    for (j, f) in comb.faces().iter().enumerate() {
        let mut v = fr.nv[0].scale(0.0);
        for k in 0..3 {
            let (a, b, c) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            let coeff = printed_ccm_coefficient([fr.dv[a], fr.dv[b], fr.dv[c]])?;
            v = v.axpy(coeff, &fr.nv[a]);
        }
        contributions.push((Term::Face(j), v));
    }
    Ok(FieldEval::from_contributions(p, contributions, None))
}

/// Pointwise comparison of the printed and normative circumcenter-of-mass fields.
#[derive(Debug, Clone, PartialEq)]
pub struct CcmFieldComparison {
    pub normative_norm: f64,
    pub verbatim_norm: f64,
    /// `<verbatim, normative> / (|verbatim| |normative|)`.
    pub cosine: f64,
    pub norm_ratio: f64,
}

pub fn compare_ccm_fields(
    p: &HPoint,
    system: &KoebeCapSystem,
) -> Result<CcmFieldComparison, FieldError> {
    let a = field_ccm(p, system)?;
    let b = field_ccm_verbatim(p, system)?;
    let cosine = a.total.inner(&b.total) / (a.residual * b.residual);
    Ok(CcmFieldComparison {
        normative_norm: a.residual,
        verbatim_norm: b.residual,
        cosine,
        norm_ratio: b.residual / a.residual,
    })
}

/// `lambda h_cm + (1 - lambda) h_ccm` with the solid field in its verbatim
/// normalization. Its zero is the Euler point for a reparametrized lambda; the
/// solver uses the normalized lift of [`CenterSpec::Euler`] instead.
pub fn field_lambda(
    p: &HPoint,
    system: &KoebeCapSystem,
    lambda: f64,
) -> Result<FieldEval, FieldError> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(FieldError::LambdaOutOfRange(lambda));
    }
    let ccm = field_ccm(p, system)?;
    if lambda == 0.0 {
        return Ok(ccm);
    }
    let cm = field_cm3_verbatim(p, system)?;
    Ok(cm.combine(lambda, &ccm, 1.0 - lambda))
}

/// Weighted cap field `sum_i f_i(d_i(p)) n_i(p)` on `H^{d+1}` for caps on `S^d`.
pub fn weighted_cap_field(
    p: &HPoint,
    caps: &[SphericalCap],
    weights: &[WeightFamily],
) -> Result<FieldEval, FieldError> {
    if weights.len() != caps.len() {
        return Err(FieldError::WeightCount(weights.len(), caps.len()));
    }
    let poles: Vec<MinkowskiVec> = caps.iter().map(cap_to_pole).collect();
    let (d, n) = distances_and_normals(p, &poles, 0)?;
    let contributions = (0..caps.len())
        .map(|i| (Term::Vertex(i), n[i].scale(weights[i].of_distance(d[i]))))
        .collect();
    Ok(FieldEval::from_contributions(p, contributions, Some(1.0)))
}

/// `sum_i F_i(d_i(p))`; the weighted cap field is its negative gradient.
/// Families without a closed-form antiderivative use adaptive quadrature
/// (absolute tolerance about 1e-12 per cap).
pub fn potential(
    p: &HPoint,
    caps: &[SphericalCap],
    weights: &[WeightFamily],
) -> Result<f64, FieldError> {
    if weights.len() != caps.len() {
        return Err(FieldError::WeightCount(weights.len(), caps.len()));
    }
    let mut total = 0.0;
    for (k, (c, w)) in caps.iter().zip(weights).enumerate() {
        let d = plane_distance(p, &cap_to_pole(c));
        if !(d > 0.0) {
            return Err(FieldError::OutsideDomain {
                index: k,
                distance: d,
            });
        }
        total += w.antiderivative(d);
    }
    Ok(total)
}

/// One realized coincidence set and the two limits compared on it.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceCheck {
    pub indices: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub n: usize,
    pub checks: Vec<CoincidenceCheck>,
    /// Realized coincidences of four or more caps, which are not evaluated.
    pub unsupported: Vec<Vec<usize>>,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.unsupported.is_empty() && self.checks.iter().all(|c| c.holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CoincidenceCheck> {
        self.checks.iter().filter(|c| !c.holds)
    }

    /// One line naming the first failing set, if any.
    pub fn summary(&self) -> String {
        match self.failures().next() {
            Some(c) => format!(
                "condition (2) fails: |I(q)|={}, n={}",
                c.indices.len(),
                self.n
            ),
            None if !self.unsupported.is_empty() => format!(
                "condition (2) not evaluated: {} coincidence(s) of 4 or more caps",
                self.unsupported.len()
            ),
            None => "condition (2) holds".to_string(),
        }
    }
}

/// Whether some boundary point lies on every cap in `set`: the poles span a
/// subspace without time-like vectors, i.e. their Gram matrix is positive
/// semidefinite.
fn boundaries_meet(poles: &[MinkowskiVec], set: &[usize]) -> bool {
    let k = set.len();
    let g = DMatrix::from_fn(k, k, |r, s| poles[set[r]].dot(&poles[set[s]]));
    g.symmetric_eigenvalues().min() >= -COINCIDENCE_TOLERANCE
}

/// Checks the limit inequality on every realized coincidence set of up to
/// three caps.
pub fn check_condition(
    caps: &[SphericalCap],
    weights: &[WeightFamily],
) -> Result<ConditionReport, FieldError> {
    let n = caps.len();
    if weights.len() != n {
        return Err(FieldError::WeightCount(weights.len(), n));
    }
    let poles: Vec<MinkowskiVec> = caps.iter().map(cap_to_pole).collect();
    let mut sets: Vec<Vec<usize>> = vec![vec![]];
    sets.extend((0..n).map(|i| vec![i]));
    let mut unsupported = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if !boundaries_meet(&poles, &[i, j]) {
                continue;
            }
            sets.push(vec![i, j]);
            for k in j + 1..n {
                if !boundaries_meet(&poles, &[i, j, k]) {
                    continue;
                }
                sets.push(vec![i, j, k]);
                for l in k + 1..n {
                    if boundaries_meet(&poles, &[i, j, k, l]) {
                        unsupported.push(vec![i, j, k, l]);
                    }
                }
            }
        }
    }
    let checks = sets
        .into_iter()
        .map(|set| {
            let lhs: f64 = set.iter().map(|&i| weights[i].limit_at_hemisphere()).sum();
            let rhs: f64 = (0..n)
                .filter(|i| !set.contains(i))
                .map(|i| weights[i].limit_at_point())
                .sum();
            CoincidenceCheck {
                holds: lhs < rhs,
                indices: set,
                lhs,
                rhs,
            }
        })
        .collect();
    Ok(ConditionReport {
        n,
        checks,
        unsupported,
    })
}

/// Whether the union of the open caps has at least two components. Tangent
/// caps do not overlap. Overlap is decided on angles, `angle(c_a, c_b) <
/// rho_a + rho_b`, which agrees with the pole product test `> -1` whenever
/// `rho_a + rho_b <= pi` and stays correct for caps beyond a hemisphere.
pub fn check_disconnected(caps: &[SphericalCap]) -> bool {
    let n = caps.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            let angle = caps[i].center().dot(caps[j].center()).clamp(-1.0, 1.0).acos();
            if angle < caps[i].radius() + caps[j].radius() - COINCIDENCE_TOLERANCE {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let roots = (0..n).filter(|&i| find(&mut parent, i) == i).count();
    roots >= 2
}
