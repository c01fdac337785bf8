//! Euclidean center functionals of a Koebe polyhedron, written as linear
//! combinations of the cap centers `v_i`, `f_j` with angle-dependent
//! coefficients.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fields::WeightFamily;
use crate::koebe::{pole_tangency_point, KoebeCapSystem, KoebeCombinatorics};

/// Relative tolerance for ties in argmax sets.
pub const TIE_TOLERANCE: f64 = 1e-9;
/// Default distance-to-hull tolerance for certificates.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-7;
/// Largest accepted condition number of a cone Gram matrix.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CenterError {
    #[error("{0} requires simplicial combinatorics")]
    NotSimplicial(&'static str),
    #[error("lambda must lie in [0, 1), got {0}")]
    LambdaOutOfRange(f64),
    #[error("simplex volume radicand {0} is not positive")]
    VolumeDomain(f64),
    #[error("cone Gram matrix of face {face} is degenerate (condition {condition:e})")]
    DegenerateGram { face: usize, condition: f64 },
    #[error("the origin is not inside the polyhedron (a radius is >= pi/2)")]
    OriginOutside,
    #[error("{0} is not a coefficient functional")]
    NotCoefficient(&'static str),
    #[error("unknown center spec `{0}`")]
    UnknownSpec(String),
}

/// Which center functional to drive to the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CenterSpec {
    Cc,
    Ic,
    Cm0,
    Cm1,
    Cm2,
    Cm3,
    Ccm,
    Euler(f64),
    Tangency,
    WeightedCaps(WeightFamily),
}

impl CenterSpec {
    pub fn euler(lambda: f64) -> Result<Self, CenterError> {
        if (0.0..1.0).contains(&lambda) {
            Ok(CenterSpec::Euler(lambda))
        } else {
            Err(CenterError::LambdaOutOfRange(lambda))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CenterSpec::Cc => "cc",
            CenterSpec::Ic => "ic",
            CenterSpec::Cm0 => "cm0",
            CenterSpec::Cm1 => "cm1",
            CenterSpec::Cm2 => "cm2",
            CenterSpec::Cm3 => "cm3",
            CenterSpec::Ccm => "ccm",
            CenterSpec::Euler(_) => "euler",
            CenterSpec::Tangency => "tangency",
            CenterSpec::WeightedCaps(_) => "weighted",
        }
    }

    pub fn requires_simplicial(&self) -> bool {
        matches!(self, CenterSpec::Ccm | CenterSpec::Euler(_))
    }

    /// Specs whose centering is proven to exist.
    pub fn is_experimental(&self) -> bool {
        matches!(self, CenterSpec::Cm3)
    }

    pub fn is_minimax(&self) -> bool {
        matches!(self, CenterSpec::Cc | CenterSpec::Ic)
    }

    /// Specs whose coefficients are positive on every valid system.
    pub fn has_positive_coefficients(&self) -> bool {
        !matches!(
            self,
            CenterSpec::Ccm | CenterSpec::Euler(_) | CenterSpec::Cc | CenterSpec::Ic
        )
    }

    pub fn check_combinatorics(&self, comb: &KoebeCombinatorics) -> Result<(), CenterError> {
        if self.requires_simplicial() && !comb.is_simplicial() {
            return Err(CenterError::NotSimplicial(self.name()));
        }
        Ok(())
    }
}

impl fmt::Display for CenterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CenterSpec::Euler(l) => write!(f, "euler:{l}"),
            CenterSpec::WeightedCaps(w) => write!(f, "weighted:{w}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for CenterSpec {
    type Err = CenterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let (head, arg) = match lower.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (lower.as_str(), None),
        };
        let bad = || CenterError::UnknownSpec(s.to_string());
        let spec = match (head, arg) {
            ("cc", None) => CenterSpec::Cc,
            ("ic", None) => CenterSpec::Ic,
            ("cm0", None) => CenterSpec::Cm0,
            ("cm1", None) => CenterSpec::Cm1,
            ("cm2", None) => CenterSpec::Cm2,
            ("cm3", None) => CenterSpec::Cm3,
            ("ccm", None) => CenterSpec::Ccm,
            ("tangency", None) => CenterSpec::Tangency,
            ("euler", Some(a)) => CenterSpec::euler(a.parse().map_err(|_| bad())?)?,
            ("weighted", Some(a)) => CenterSpec::WeightedCaps(a.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        Ok(spec)
    }
}

/// Key of one summand of a functional or field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Term {
    Vertex(usize),
    Face(usize),
    /// Index into the edge list.
    Edge(usize),
    Incidence(usize, usize),
}

/// One summand: coefficients on vertex-cap and face-cap directions.
#[derive(Debug, Clone, PartialEq)]
pub struct TermCoefficients {
    pub term: Term,
    pub vertex: Vec<(usize, f64)>,
    pub face: Vec<(usize, f64)>,
}

/// `g(P) = (1/kappa) (sum_i w_i v_i + sum_j W_j f_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub vertex: Vec<f64>,
    pub face: Vec<f64>,
    pub kappa: f64,
    /// The functional's own normalizer (`A`, volume, count).
    pub normalizer: f64,
    pub terms: Vec<TermCoefficients>,
}

impl Coefficients {
    fn from_terms(
        n: usize,
        m: usize,
        terms: Vec<TermCoefficients>,
        kappa: f64,
        normalizer: f64,
    ) -> Self {
        let mut vertex = vec![0.0; n];
        let mut face = vec![0.0; m];
        for t in &terms {
            for &(i, c) in &t.vertex {
                vertex[i] += c;
            }
            for &(j, c) in &t.face {
                face[j] += c;
            }
        }
        Self {
            vertex,
            face,
            kappa,
            normalizer,
            terms,
        }
    }

    /// Smallest coefficient among the directions the functional uses.
    pub fn min_coefficient(&self) -> f64 {
        self.terms
            .iter()
            .flat_map(|t| t.vertex.iter().chain(&t.face).map(|&(_, c)| c))
            .fold(f64::INFINITY, f64::min)
    }
}

fn kite_terms(
    comb: &KoebeCombinatorics,
    alpha: &[f64],
    beta: &[f64],
    with_height: bool,
) -> (Vec<TermCoefficients>, f64) {
    let mut total = 0.0;
    let terms = comb
        .incidences()
        .iter()
        .map(|&(i, j)| {
            let a = alpha[i].tan();
            let s = beta[j].sin();
            let h = if with_height { beta[j].cos() } else { 1.0 };
            let weight = a * s * h;
            total += weight;
            let (a2, s2) = (a * a, s * s);
            TermCoefficients {
                term: Term::Incidence(i, j),
                vertex: vec![(i, weight * (a2 + 2.0 * s2) / (a2 + s2) / alpha[i].cos())],
                face: vec![(j, weight * (2.0 * a2 + s2) / (a2 + s2) * beta[j].cos())],
            }
        })
        .collect();
    (terms, total)
}

/// Coefficient functional of `spec` at radii `(alpha, beta)`.
pub fn coefficients(
    spec: &CenterSpec,
    comb: &KoebeCombinatorics,
    alpha: &[f64],
    beta: &[f64],
) -> Result<Coefficients, CenterError> {
    spec.check_combinatorics(comb)?;
    let n = comb.n_vertices();
    let m = comb.n_faces();
    let c = match *spec {
        CenterSpec::Cm0 => {
            let terms = (0..n)
                .map(|i| TermCoefficients {
                    term: Term::Vertex(i),
                    vertex: vec![(i, 1.0 / alpha[i].cos())],
                    face: vec![],
                })
                .collect();
            Coefficients::from_terms(n, m, terms, n as f64, n as f64)
        }
        CenterSpec::Cm1 => {
            let mut total = 0.0;
            let terms = comb
                .edges()
                .iter()
                .enumerate()
                .map(|(e, &[i, j])| {
                    let len = alpha[i].tan() + alpha[j].tan();
                    total += len;
                    TermCoefficients {
                        term: Term::Edge(e),
                        vertex: vec![(i, len / alpha[i].cos()), (j, len / alpha[j].cos())],
                        face: vec![],
                    }
                })
                .collect();
            Coefficients::from_terms(n, m, terms, 2.0 * total, total)
        }
        CenterSpec::Cm2 => {
            let (terms, a) = kite_terms(comb, alpha, beta, false);
            Coefficients::from_terms(n, m, terms, 3.0 * a, a)
        }
        CenterSpec::Cm3 => {
            let (terms, a) = kite_terms(comb, alpha, beta, true);
            Coefficients::from_terms(n, m, terms, 4.0 * a, a)
        }
        CenterSpec::Ccm => {
            let (terms, total) = ccm_terms(comb, alpha)?;
            Coefficients::from_terms(n, m, terms, total, total)
        }
        CenterSpec::Euler(lambda) => {
            if !(0.0..1.0).contains(&lambda) {
                return Err(CenterError::LambdaOutOfRange(lambda));
            }
            let (cm3_terms, a3) = kite_terms(comb, alpha, beta, true);
            let (ccm_terms, volume) = ccm_terms(comb, alpha)?;
            let f3 = lambda * volume / (4.0 * a3);
            let scale = |t: TermCoefficients, f: f64| TermCoefficients {
                term: t.term,
                vertex: t.vertex.into_iter().map(|(k, c)| (k, c * f)).collect(),
                face: t.face.into_iter().map(|(k, c)| (k, c * f)).collect(),
            };
            let terms = cm3_terms
                .into_iter()
                .map(|t| scale(t, f3))
                .chain(ccm_terms.into_iter().map(|t| scale(t, 1.0 - lambda)))
                .collect();
            Coefficients::from_terms(n, m, terms, volume, volume)
        }
        CenterSpec::Tangency => {
            let terms = comb
                .edges()
                .iter()
                .enumerate()
                .map(|(e, &[i, j])| {
                    let s = (alpha[i] + alpha[j]).sin();
                    TermCoefficients {
                        term: Term::Edge(e),
                        vertex: vec![(i, alpha[j].sin() / s), (j, alpha[i].sin() / s)],
                        face: vec![],
                    }
                })
                .collect();
            let e = comb.edges().len() as f64;
            Coefficients::from_terms(n, m, terms, e, e)
        }
        CenterSpec::WeightedCaps(family) => {
            let terms = (0..n)
                .map(|i| TermCoefficients {
                    term: Term::Vertex(i),
                    vertex: vec![(i, family.weight(alpha[i]))],
                    face: vec![],
                })
                .collect();
            Coefficients::from_terms(n, m, terms, 1.0, 1.0)
        }
        CenterSpec::Cc => return Err(CenterError::NotCoefficient("cc")),
        CenterSpec::Ic => return Err(CenterError::NotCoefficient("ic")),
    };
    Ok(c)
}

fn ccm_terms(
    comb: &KoebeCombinatorics,
    alpha: &[f64],
) -> Result<(Vec<TermCoefficients>, f64), CenterError> {
    let mut total = 0.0;
    let mut terms = Vec::with_capacity(comb.n_faces());
    for (j, face) in comb.faces().iter().enumerate() {
        let a = [alpha[face[0]], alpha[face[1]], alpha[face[2]]];
        let vol = simplex_volume(a[0].tan(), a[1].tan(), a[2].tan())?;
        let n = gram_circumcenter_coefficients(a)
            .map_err(|condition| CenterError::DegenerateGram { face: j, condition })?;
        total += vol;
        terms.push(TermCoefficients {
            term: Term::Face(j),
            vertex: (0..3).map(|k| (face[k], vol * n[k])).collect(),
            face: vec![],
        });
    }
    Ok((terms, total))
}

/// Value of a center functional.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterValue {
    pub point: Vector3<f64>,
    /// `A` for cm1/cm2/cm3, total volume for ccm/euler, the summand count
    /// for cm0/tangency.
    pub normalizer: Option<f64>,
    /// Contribution of each summand to `point`.
    pub terms: Vec<(Term, Vector3<f64>)>,
}

fn evaluate(
    system: &KoebeCapSystem,
    spec: &CenterSpec,
) -> Result<CenterValue, CenterError> {
    let c = coefficients(
        spec,
        system.combinatorics(),
        &system.alphas(),
        &system.betas(),
    )?;
    let vc = system.vertex_centers();
    let fc = system.face_centers();
    let terms: Vec<(Term, Vector3<f64>)> = c
        .terms
        .iter()
        .map(|t| {
            let v: Vector3<f64> = t
                .vertex
                .iter()
                .map(|&(i, w)| vc[i] * w)
                .chain(t.face.iter().map(|&(j, w)| fc[j] * w))
                .sum();
            (t.term, v / c.kappa)
        })
        .collect();
    let point = terms.iter().map(|(_, v)| v).sum();
    Ok(CenterValue {
        point,
        normalizer: Some(c.normalizer),
        terms,
    })
}

/// Vertex average `(1/n) sum v_i / cos alpha_i`.
pub fn cm0(system: &KoebeCapSystem) -> CenterValue {
    evaluate(system, &CenterSpec::Cm0).expect("cm0 is defined on every system")
}

/// Center of mass of the edge skeleton; the normalizer is the total edge length.
pub fn cm1(system: &KoebeCapSystem) -> CenterValue {
    evaluate(system, &CenterSpec::Cm1).expect("cm1 is defined on every system")
}

/// Center of mass of the boundary surface; the normalizer is the surface area.
pub fn cm2(system: &KoebeCapSystem) -> CenterValue {
    evaluate(system, &CenterSpec::Cm2).expect("cm2 is defined on every system")
}

/// Center of mass of the solid; the normalizer is three times the volume.
pub fn cm3(system: &KoebeCapSystem) -> CenterValue {
    evaluate(system, &CenterSpec::Cm3).expect("cm3 is defined on every system")
}

/// Circumcenter of mass over the cones from the origin to the faces.
pub fn ccm(system: &KoebeCapSystem) -> Result<CenterValue, CenterError> {
    if !system.origin_in_domain() {
        return Err(CenterError::OriginOutside);
    }
    evaluate(system, &CenterSpec::Ccm)
}

/// `lambda cm3 + (1 - lambda) ccm`.
pub fn euler_point(system: &KoebeCapSystem, lambda: f64) -> Result<CenterValue, CenterError> {
    let spec = CenterSpec::euler(lambda)?;
    if !system.origin_in_domain() {
        return Err(CenterError::OriginOutside);
    }
    evaluate(system, &spec)
}

/// Mean of the edge tangency points, each taken from the pole pair of the edge.
pub fn tangency_barycenter(system: &KoebeCapSystem) -> CenterValue {
    let poles = system.vertex_poles();
    let edges = system.combinatorics().edges();
    let e = edges.len() as f64;
    let terms: Vec<(Term, Vector3<f64>)> = edges
        .iter()
        .enumerate()
        .map(|(k, &[i, j])| (Term::Edge(k), pole_tangency_point(&poles[i], &poles[j]) / e))
        .collect();
    CenterValue {
        point: terms.iter().map(|(_, v)| v).sum(),
        normalizer: Some(e),
        terms,
    }
}

/// Evaluates `g(P)` for any spec. For `cc` the point is the center of the
/// smallest enclosing ball of the vertices. For `ic` it is the point of
/// `conv{f_j : beta_j maximal}` closest to the origin, which vanishes exactly
/// when the origin is an inscribed-ball center.
pub fn center(system: &KoebeCapSystem, spec: &CenterSpec) -> Result<CenterValue, CenterError> {
    spec.check_combinatorics(system.combinatorics())?;
    match spec {
        CenterSpec::Cc => {
            let vertices: Vec<Vector3<f64>> = system
                .vertex_caps()
                .iter()
                .map(|c| crate::koebe::to_vec3(c.center()) / c.radius().cos())
                .collect();
            let ball = smallest_enclosing_ball(&vertices);
            Ok(CenterValue {
                point: ball.center,
                normalizer: None,
                terms: Vec::new(),
            })
        }
        CenterSpec::Ic => {
            let cert = ic_certificate(system, CERTIFICATE_TOLERANCE);
            Ok(CenterValue {
                point: cert.closest_point,
                normalizer: None,
                terms: Vec::new(),
            })
        }
        CenterSpec::Ccm => ccm(system),
        CenterSpec::Euler(l) => euler_point(system, *l),
        CenterSpec::Tangency => Ok(tangency_barycenter(system)),
        other => evaluate(system, other),
    }
}

/// Volume of the cone from the origin over a triangular face with tangent
/// lengths `t_a, t_b, t_c`.
pub fn simplex_volume(ta: f64, tb: f64, tc: f64) -> Result<f64, CenterError> {
    let radicand = ta * tb * tc * (ta + tb + tc - ta * tb * tc);
    if !(ta > 0.0 && tb > 0.0 && tc > 0.0 && radicand > 0.0) {
        return Err(CenterError::VolumeDomain(radicand));
    }
    Ok(radicand.sqrt() / 3.0)
}

/// Coefficients `N` of the cone circumcenter `sum N_s v_s`, from the Gram
/// system `sum_s cos(alpha_r + alpha_s) N_s = 1 / (2 cos alpha_r)` (diagonal
/// entries 1). On a degenerate matrix the condition number is returned.
pub fn gram_circumcenter_coefficients(alpha: [f64; 3]) -> Result<[f64; 3], f64> {
    let g = Matrix3::from_fn(|r, s| {
        if r == s {
            1.0
        } else {
            (alpha[r] + alpha[s]).cos()
        }
    });
    let sv = g.singular_values();
    let condition = sv.max() / sv.min();
    if !condition.is_finite() || condition > MAX_GRAM_CONDITION {
        return Err(condition);
    }
    let b = Vector3::from_fn(|r, _| 0.5 / alpha[r].cos());
    let n = g.lu().solve(&b).ok_or(f64::INFINITY)?;
    Ok([n[0], n[1], n[2]])
}

/// The printed closed form for the circumcenter coefficients, kept for
/// comparison only.
pub fn printed_circumcenter_coefficients(t: [f64; 3]) -> [f64; 3] {
    let one = |ta: f64, tb: f64, tc: f64| {
        let s = tb + tc;
        s * (s * ta * ta + (2.0 * tb * tb * tc * tc + tb * tb + tc * tc) * ta - tb * tc * s)
            / (4.0 * ta * tb * tc * (ta + tb + tc - ta * tb * tc))
    };
    [
        one(t[0], t[1], t[2]),
        one(t[1], t[2], t[0]),
        one(t[2], t[0], t[1]),
    ]
}

/// The printed value of the Gram determinant, `36 m^2 prod(1 + t^2)`.
pub fn printed_gram_determinant(t: [f64; 3]) -> Result<f64, CenterError> {
    let m = simplex_volume(t[0], t[1], t[2])?;
    Ok(36.0 * m * m * t.iter().map(|x| 1.0 + x * x).product::<f64>())
}

pub fn gram_determinant(alpha: [f64; 3]) -> f64 {
    Matrix3::from_fn(|r, s| {
        if r == s {
            1.0
        } else {
            (alpha[r] + alpha[s]).cos()
        }
    })
    .determinant()
}

/// Side-by-side evaluation of the Gram solve and the printed closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct CircumcenterComparison {
    pub alpha: [f64; 3],
    pub gram: [f64; 3],
    pub printed: [f64; 3],
    /// `printed / gram` per coefficient.
    pub ratio: [f64; 3],
    /// `2 cos alpha_s` per coefficient; matches `ratio` when the printed form
    /// is the Gram solution rescaled.
    pub predicted_ratio: [f64; 3],
    pub gram_determinant: f64,
    pub printed_determinant: f64,
}

pub fn compare_circumcenter(alpha: [f64; 3]) -> Result<CircumcenterComparison, CenterError> {
    let t = alpha.map(f64::tan);
    let gram = gram_circumcenter_coefficients(alpha)
        .map_err(|condition| CenterError::DegenerateGram { face: 0, condition })?;
    let printed = printed_circumcenter_coefficients(t);
    Ok(CircumcenterComparison {
        alpha,
        gram,
        printed,
        ratio: [0, 1, 2].map(|k| printed[k] / gram[k]),
        predicted_ratio: alpha.map(|a| 2.0 * a.cos()),
        gram_determinant: gram_determinant(alpha),
        printed_determinant: printed_gram_determinant(t)?,
    })
}

impl fmt::Display for CircumcenterComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "alpha           {:?}", self.alpha)?;
        writeln!(f, "N (Gram solve)  {:?}", self.gram)?;
        writeln!(f, "N (printed)     {:?}", self.printed)?;
        writeln!(f, "printed / Gram  {:?}", self.ratio)?;
        writeln!(f, "2 cos alpha     {:?}", self.predicted_ratio)?;
        write!(
            f,
            "det G = {:.12}, printed det = {:.12}",
            self.gram_determinant, self.printed_determinant
        )
    }
}

/// Circumcenter of the cone from the origin over triangular face `j`.
pub fn cone_circumcenter(system: &KoebeCapSystem, j: usize) -> Result<Vector3<f64>, CenterError> {
    let face = &system.combinatorics().faces()[j];
    if face.len() != 3 {
        return Err(CenterError::NotSimplicial("cone_circumcenter"));
    }
    let alphas = system.alphas();
    let n = gram_circumcenter_coefficients([alphas[face[0]], alphas[face[1]], alphas[face[2]]])
        .map_err(|condition| CenterError::DegenerateGram { face: j, condition })?;
    let vc = system.vertex_centers();
    Ok((0..3).map(|k| vc[face[k]] * n[k]).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: Vector3<f64>,
    pub radius: f64,
}

impl Ball {
    fn contains(&self, p: &Vector3<f64>) -> bool {
        (p - self.center).norm() <= self.radius * (1.0 + 1e-12) + 1e-12
    }
}

/// Smallest ball through the given (affinely independent) boundary points.
fn circumball(support: &[Vector3<f64>]) -> Ball {
    match support.len() {
        0 => Ball {
            center: Vector3::zeros(),
            radius: -1.0,
        },
        1 => Ball {
            center: support[0],
            radius: 0.0,
        },
        k => {
            let p0 = support[0];
            let d: Vec<Vector3<f64>> = support[1..].iter().map(|p| p - p0).collect();
            let m = k - 1;
            let a = nalgebra::DMatrix::from_fn(m, m, |r, s| 2.0 * d[r].dot(&d[s]));
            let b = nalgebra::DVector::from_fn(m, |r, _| d[r].norm_squared());
            let lam = a
                .clone()
                .lu()
                .solve(&b)
                .unwrap_or_else(|| a.svd(true, true).solve(&b, 1e-14).expect("svd solve"));
            let offset: Vector3<f64> = (0..m).map(|r| d[r] * lam[r]).sum();
            Ball {
                center: p0 + offset,
                radius: offset.norm(),
            }
        }
    }
}

fn welzl(points: &[Vector3<f64>], support: &mut Vec<Vector3<f64>>) -> Ball {
    if points.is_empty() || support.len() == 4 {
        return circumball(support);
    }
    let (p, rest) = points.split_last().unwrap();
    let ball = welzl(rest, support);
    if ball.radius >= 0.0 && ball.contains(p) {
        return ball;
    }
    support.push(*p);
    let ball = welzl(rest, support);
    support.pop();
    ball
}

/// Exact minimal enclosing ball (Welzl's algorithm over a fixed shuffle).
pub fn smallest_enclosing_ball(points: &[Vector3<f64>]) -> Ball {
    assert!(!points.is_empty(), "enclosing ball of no points");
    let mut shuffled = points.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed));
    welzl(&shuffled, &mut Vec::with_capacity(4))
}

/// Point of the convex hull of `points` closest to the origin, with its
/// convex weights (Wolfe's projection algorithm).
pub fn min_norm_point(points: &[Vector3<f64>]) -> (Vector3<f64>, Vec<f64>) {
    assert!(!points.is_empty(), "hull of no points");
    let scale = points.iter().map(|p| p.norm_squared()).fold(0.0, f64::max).max(1e-300);
    let start = (0..points.len())
        .min_by(|&a, &b| points[a].norm_squared().total_cmp(&points[b].norm_squared()))
        .unwrap();
    let mut active = vec![start];
    let mut lam = vec![1.0];
    let mut x = points[start];
    for _ in 0..100 * (points.len() + 4) {
        let (j, val) = (0..points.len())
            .map(|k| (k, x.dot(&points[k])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if val >= x.norm_squared() - 1e-15 * scale || active.contains(&j) {
            break;
        }
        active.push(j);
        lam.push(0.0);
        loop {
            let k = active.len();
            // affine minimizer over the active set
            let mut a = nalgebra::DMatrix::zeros(k + 1, k + 1);
            let mut b = nalgebra::DVector::zeros(k + 1);
            for r in 0..k {
                for s in 0..k {
                    a[(r, s)] = points[active[r]].dot(&points[active[s]]);
                }
                a[(r, k)] = 1.0;
                a[(k, r)] = 1.0;
            }
            b[k] = 1.0;
            let sol = a.clone().lu().solve(&b).unwrap_or_else(|| {
                a.svd(true, true).solve(&b, 1e-14).expect("svd solve")
            });
            let mu: Vec<f64> = (0..k).map(|r| sol[r]).collect();
            if mu.iter().all(|&m| m > 1e-14) {
                lam = mu;
                break;
            }
            let mut theta = 1.0_f64;
            for r in 0..k {
                if mu[r] <= 1e-14 {
                    let d = lam[r] - mu[r];
                    if d > 0.0 {
                        theta = theta.min(lam[r] / d);
                    }
                }
            }
            for r in 0..k {
                lam[r] += theta * (mu[r] - lam[r]);
            }
            let keep: Vec<usize> = (0..k).filter(|&r| lam[r] > 1e-14).collect();
            active = keep.iter().map(|&r| active[r]).collect();
            lam = keep.iter().map(|&r| lam[r]).collect();
            let sum: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|l| *l /= sum);
        }
        x = active.iter().zip(&lam).map(|(&k, &l)| points[k] * l).sum();
    }
    let mut weights = vec![0.0; points.len()];
    for (&k, &l) in active.iter().zip(&lam) {
        weights[k] = l;
    }
    (x, weights)
}

/// Optimality certificate for the circumscribed or inscribed ball.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    /// Indices attaining the maximal radius (within the tie tolerance).
    pub active: Vec<usize>,
    pub closest_point: Vector3<f64>,
    pub hull_distance: f64,
    pub tolerance: f64,
    /// For `cc`, the smallest enclosing ball of the vertices.
    pub enclosing_ball: Option<Ball>,
    pub passed: bool,
}

fn argmax_set(radii: &[f64]) -> Vec<usize> {
    let max = radii.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // ties are judged on 1/cos, the Euclidean distance the radius encodes
    let key = |r: f64| 1.0 / r.cos();
    let top = key(max);
    (0..radii.len())
        .filter(|&i| key(radii[i]) >= top - TIE_TOLERANCE * top.abs())
        .collect()
}

fn hull_certificate(
    radii: &[f64],
    centers: &[Vector3<f64>],
) -> (Vec<usize>, Vector3<f64>, f64) {
    let active = argmax_set(radii);
    let pts: Vec<Vector3<f64>> = active.iter().map(|&i| centers[i]).collect();
    let (x, _) = min_norm_point(&pts);
    (active, x, x.norm())
}

/// The origin is the circumcenter iff it lies in the hull of the farthest
/// vertices' directions.
pub fn cc_certificate(system: &KoebeCapSystem, tol: f64) -> CertificateReport {
    let (active, x, dist) = hull_certificate(&system.alphas(), &system.vertex_centers());
    let ball = system.is_bounded().then(|| {
        let vertices: Vec<Vector3<f64>> = system
            .vertex_caps()
            .iter()
            .map(|c| crate::koebe::to_vec3(c.center()) / c.radius().cos())
            .collect();
        smallest_enclosing_ball(&vertices)
    });
    let ball_ok = ball.is_some_and(|b| b.center.norm() <= tol);
    CertificateReport {
        active,
        closest_point: x,
        hull_distance: dist,
        tolerance: tol,
        enclosing_ball: ball,
        passed: dist <= tol && ball_ok,
    }
}

/// The origin is an inscribed-ball center iff it lies in the hull of the
/// nearest faces' normals.
pub fn ic_certificate(system: &KoebeCapSystem, tol: f64) -> CertificateReport {
    let (active, x, dist) = hull_certificate(&system.betas(), &system.face_centers());
    CertificateReport {
        active,
        closest_point: x,
        hull_distance: dist,
        tolerance: tol,
        enclosing_ball: None,
        passed: dist <= tol,
    }
}
