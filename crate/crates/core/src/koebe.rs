//! Koebe cap systems: a vertex-circle packing and a face-circle packing on
//! `S^2` that together describe a polyhedron midscribed to the unit sphere.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DVector, Vector3};
use thiserror::Error;

use crate::hypcore::{
    self, apply_cap, boost_to_origin, cap_to_pole, geodesic_exp, ideal_direction, HPoint,
    HypError, LorentzMap, MinkowskiVec, SphericalCap,
};

/// Default tolerance for [`validate`].
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KoebeError {
    #[error("face {face} has {len} vertices; at least 3 required")]
    ShortFace { face: usize, len: usize },
    #[error("face {face} references vertex {vertex} but only {n} vertices exist")]
    IndexOutOfRange { face: usize, vertex: usize, n: usize },
    #[error("face {face} repeats vertex {vertex}")]
    RepeatedVertex { face: usize, vertex: usize },
    #[error("edge {{{0}, {1}}} lies in {2} faces; expected 2")]
    NonManifoldEdge(usize, usize, usize),
    #[error("Euler characteristic n - e + f = {0}, expected 2")]
    Euler(i64),
    #[error("{vertex_caps} vertex caps and {face_caps} face caps do not match {n} vertices and {m} faces")]
    CountMismatch {
        vertex_caps: usize,
        face_caps: usize,
        n: usize,
        m: usize,
    },
    #[error("Koebe systems live on S^2; got a cap on S^{0}")]
    NotTwoSphere(usize),
    #[error("{{{0}, {1}}} is not an edge")]
    NotAnEdge(usize, usize),
    #[error("vertex cap {0} has radius >= pi/2; the polyhedron is unbounded")]
    Unbounded(usize),
    #[error("system fails validation: {0}")]
    Invalid(String),
    #[error("unknown solid `{0}`")]
    UnknownSolid(String),
    #[error("vertex index {0} out of range")]
    NoSuchVertex(usize),
    #[error(transparent)]
    Geometry(#[from] HypError),
}

/// Face cycles plus everything derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct KoebeCombinatorics {
    n_vertices: usize,
    faces: Vec<Vec<usize>>,
    edges: Vec<[usize; 2]>,
    edge_faces: Vec<[usize; 2]>,
    incidences: Vec<(usize, usize)>,
    edge_lookup: HashMap<(usize, usize), usize>,
}

impl KoebeCombinatorics {
    /// Derives edges `E`, incidences `I` and the edge-to-face map from
    /// cyclic face lists.
    pub fn derive(n_vertices: usize, faces: Vec<Vec<usize>>) -> Result<Self, KoebeError> {
        let mut edge_lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut owners: Vec<Vec<usize>> = Vec::new();
        let mut incidences = Vec::new();
        for (j, face) in faces.iter().enumerate() {
            if face.len() < 3 {
                return Err(KoebeError::ShortFace {
                    face: j,
                    len: face.len(),
                });
            }
            for (k, &i) in face.iter().enumerate() {
                if i >= n_vertices {
                    return Err(KoebeError::IndexOutOfRange {
                        face: j,
                        vertex: i,
                        n: n_vertices,
                    });
                }
                if face[..k].contains(&i) {
                    return Err(KoebeError::RepeatedVertex { face: j, vertex: i });
                }
                incidences.push((i, j));
                let next = face[(k + 1) % face.len()];
                let key = (i.min(next), i.max(next));
                let e = *edge_lookup.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    owners.push(Vec::new());
                    edges.len() - 1
                });
                owners[e].push(j);
            }
        }
        let mut edge_faces = Vec::with_capacity(edges.len());
        for (e, own) in owners.iter().enumerate() {
            if own.len() != 2 {
                return Err(KoebeError::NonManifoldEdge(edges[e][0], edges[e][1], own.len()));
            }
            edge_faces.push([own[0], own[1]]);
        }
        let chi = n_vertices as i64 - edges.len() as i64 + faces.len() as i64;
        if chi != 2 {
            return Err(KoebeError::Euler(chi));
        }
        Ok(Self {
            n_vertices,
            faces,
            edges,
            edge_faces,
            incidences,
            edge_lookup,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    /// Edges as sorted vertex pairs.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// The two faces adjacent to each edge, aligned with [`Self::edges`].
    pub fn edge_faces(&self) -> &[[usize; 2]] {
        &self.edge_faces
    }

    /// Vertex-face incidences `(i, j)`, in face order.
    pub fn incidences(&self) -> &[(usize, usize)] {
        &self.incidences
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.edge_lookup.get(&(i.min(j), i.max(j))).copied()
    }

    pub fn is_simplicial(&self) -> bool {
        self.faces.iter().all(|f| f.len() == 3)
    }

    /// The two edges of face `j` meeting at vertex `i`, as edge indices
    /// `(previous, next)` along the face cycle.
    pub fn incidence_edges(&self, i: usize, j: usize) -> Option<(usize, usize)> {
        let face = &self.faces[j];
        let k = face.iter().position(|&v| v == i)?;
        let prev = face[(k + face.len() - 1) % face.len()];
        let next = face[(k + 1) % face.len()];
        Some((self.edge_index(prev, i)?, self.edge_index(i, next)?))
    }

    /// Face cycles of the dual polyhedron: for each vertex, the incident faces
    /// in rotational order.
    pub fn dual_faces(&self) -> Vec<Vec<usize>> {
        (0..self.n_vertices)
            .map(|i| {
                let start = self
                    .faces
                    .iter()
                    .position(|f| f.contains(&i))
                    .expect("every vertex lies on a face");
                let mut cycle = vec![start];
                let mut current = start;
                loop {
                    let face = &self.faces[current];
                    let k = face.iter().position(|&v| v == i).unwrap();
                    let prev = face[(k + face.len() - 1) % face.len()];
                    let e = self.edge_index(prev, i).unwrap();
                    let [f0, f1] = self.edge_faces[e];
                    let next = if f0 == current { f1 } else { f0 };
                    if next == start {
                        break;
                    }
                    cycle.push(next);
                    current = next;
                }
                cycle
            })
            .collect()
    }
}

/// Vertex caps `(v_i, alpha_i)`, face caps `(f_j, beta_j)` and combinatorics.
#[derive(Debug, Clone, PartialEq)]
pub struct KoebeCapSystem {
    vertex_caps: Vec<SphericalCap>,
    face_caps: Vec<SphericalCap>,
    combinatorics: Arc<KoebeCombinatorics>,
}

impl KoebeCapSystem {
    pub fn new(
        vertex_caps: Vec<SphericalCap>,
        face_caps: Vec<SphericalCap>,
        combinatorics: KoebeCombinatorics,
    ) -> Result<Self, KoebeError> {
        Self::with_shared(vertex_caps, face_caps, Arc::new(combinatorics))
    }

    fn with_shared(
        vertex_caps: Vec<SphericalCap>,
        face_caps: Vec<SphericalCap>,
        combinatorics: Arc<KoebeCombinatorics>,
    ) -> Result<Self, KoebeError> {
        if vertex_caps.len() != combinatorics.n_vertices()
            || face_caps.len() != combinatorics.n_faces()
        {
            return Err(KoebeError::CountMismatch {
                vertex_caps: vertex_caps.len(),
                face_caps: face_caps.len(),
                n: combinatorics.n_vertices(),
                m: combinatorics.n_faces(),
            });
        }
        if let Some(c) = vertex_caps
            .iter()
            .chain(face_caps.iter())
            .find(|c| c.spatial_dim() != 3)
        {
            return Err(KoebeError::NotTwoSphere(c.spatial_dim() - 1));
        }
        Ok(Self {
            vertex_caps,
            face_caps,
            combinatorics,
        })
    }

    /// Builds the cap system of a polyhedron midscribed to the unit sphere
    /// from its vertex positions. Face cycles are reoriented counterclockwise
    /// as seen from outside.
    pub fn from_midscribed(
        vertices: &[Vector3<f64>],
        faces: Vec<Vec<usize>>,
    ) -> Result<Self, KoebeError> {
        let faces = orient_faces(vertices, faces);
        let comb = KoebeCombinatorics::derive(vertices.len(), faces)?;
        let vertex_caps = vertices
            .iter()
            .map(|v| {
                let r = v.norm();
                SphericalCap::from_slice((v / r).as_slice(), (1.0 / r).acos())
            })
            .collect::<Result<Vec<_>, _>>()?;
        let face_caps = comb
            .faces()
            .iter()
            .map(|f| {
                let n = newell_normal(vertices, f);
                let h = n.dot(&vertices[f[0]]);
                SphericalCap::from_slice(n.as_slice(), h.acos())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(vertex_caps, face_caps, comb)
    }

    pub fn vertex_caps(&self) -> &[SphericalCap] {
        &self.vertex_caps
    }

    pub fn face_caps(&self) -> &[SphericalCap] {
        &self.face_caps
    }

    pub fn combinatorics(&self) -> &KoebeCombinatorics {
        &self.combinatorics
    }

    pub fn n_vertices(&self) -> usize {
        self.vertex_caps.len()
    }

    pub fn n_faces(&self) -> usize {
        self.face_caps.len()
    }

    pub fn vertex_poles(&self) -> Vec<MinkowskiVec> {
        self.vertex_caps.iter().map(cap_to_pole).collect()
    }

    pub fn face_poles(&self) -> Vec<MinkowskiVec> {
        self.face_caps.iter().map(cap_to_pole).collect()
    }

    /// Vertex poles followed by face poles.
    pub fn all_poles(&self) -> Vec<MinkowskiVec> {
        let mut p = self.vertex_poles();
        p.extend(self.face_poles());
        p
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.vertex_caps.iter().map(|c| c.radius()).collect()
    }

    pub fn betas(&self) -> Vec<f64> {
        self.face_caps.iter().map(|c| c.radius()).collect()
    }

    pub fn vertex_centers(&self) -> Vec<Vector3<f64>> {
        self.vertex_caps.iter().map(|c| to_vec3(c.center())).collect()
    }

    pub fn face_centers(&self) -> Vec<Vector3<f64>> {
        self.face_caps.iter().map(|c| to_vec3(c.center())).collect()
    }

    /// Whether every vertex cap is smaller than a hemisphere, i.e. the
    /// polyhedron is bounded.
    pub fn is_bounded(&self) -> bool {
        self.vertex_caps.iter().all(|c| c.is_proper())
    }

    /// Whether the origin lies in the domain `D` (all radii below `pi/2`).
    pub fn origin_in_domain(&self) -> bool {
        self.is_bounded() && self.face_caps.iter().all(|c| c.is_proper())
    }

    /// Replaces the caps, keeping the (shared) combinatorics.
    pub fn with_caps(
        &self,
        vertex_caps: Vec<SphericalCap>,
        face_caps: Vec<SphericalCap>,
    ) -> Result<Self, KoebeError> {
        Self::with_shared(vertex_caps, face_caps, Arc::clone(&self.combinatorics))
    }

    /// The dual system: face caps become vertex caps and vice versa.
    pub fn dual(&self) -> Result<Self, KoebeError> {
        let comb = KoebeCombinatorics::derive(self.n_faces(), self.combinatorics.dual_faces())?;
        Self::new(self.face_caps.clone(), self.vertex_caps.clone(), comb)
    }
}

pub(crate) fn to_vec3(v: &DVector<f64>) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

fn newell_normal(vertices: &[Vector3<f64>], face: &[usize]) -> Vector3<f64> {
    let mut n = Vector3::zeros();
    for k in 0..face.len() {
        let a = vertices[face[k]];
        let b = vertices[face[(k + 1) % face.len()]];
        n += a.cross(&b);
    }
    n.normalize()
}

fn orient_faces(vertices: &[Vector3<f64>], faces: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    faces
        .into_iter()
        .map(|mut f| {
            let centroid: Vector3<f64> =
                f.iter().map(|&i| vertices[i]).sum::<Vector3<f64>>() / f.len() as f64;
            if newell_normal(vertices, &f).dot(&centroid) < 0.0 {
                f.reverse();
            }
            f
        })
        .collect()
}

/// Ideal point shared by two externally tangent caps, from the light-like sum
/// of their poles. For nearly tangent caps the spatial part is normalized.
pub fn pole_tangency_point(a: &MinkowskiVec, b: &MinkowskiVec) -> Vector3<f64> {
    let s = a.add(b);
    let x = s.spatial();
    Vector3::new(x[0], x[1], x[2]).normalize()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    /// Worst residual; for separation checks, the largest pole product plus one
    /// (must stay below `-tol`).
    pub worst: f64,
    pub passed: bool,
    /// Informational checks are reported but do not affect the verdict.
    pub informational: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub tolerance: f64,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.informational)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks
            .iter()
            .filter(|c| !c.passed && !c.informational)
            .collect()
    }
}

/// Checks tangency, orthogonality, tangency-point coincidence and separation
/// of a cap system. All checks are Möbius invariant except `radii_below_half_pi`,
/// which is informational (it holds iff the origin lies in `D`).
pub fn validate(system: &KoebeCapSystem, tol: f64) -> ValidationReport {
    let comb = system.combinatorics();
    let vp = system.vertex_poles();
    let fp = system.face_poles();
    let mut checks = Vec::new();

    let max_radius = system
        .vertex_caps()
        .iter()
        .chain(system.face_caps())
        .map(|c| c.radius())
        .fold(0.0_f64, f64::max);
    checks.push(CheckResult {
        name: "radii_below_half_pi",
        worst: max_radius - FRAC_PI_2,
        passed: max_radius < FRAC_PI_2,
        informational: true,
    });

    let worst_vertex_tangency = comb
        .edges()
        .iter()
        .map(|&[i, j]| (vp[i].dot(&vp[j]) + 1.0).abs())
        .fold(0.0_f64, f64::max);
    checks.push(residual_check("edge_tangency", worst_vertex_tangency, tol));

    let worst_face_tangency = comb
        .edge_faces()
        .iter()
        .map(|&[a, b]| (fp[a].dot(&fp[b]) + 1.0).abs())
        .fold(0.0_f64, f64::max);
    checks.push(residual_check("face_tangency", worst_face_tangency, tol));

    let worst_orth = comb
        .incidences()
        .iter()
        .map(|&(i, j)| vp[i].dot(&fp[j]).abs())
        .fold(0.0_f64, f64::max);
    checks.push(residual_check("incidence_orthogonality", worst_orth, tol));

    let worst_coincidence = comb
        .edges()
        .iter()
        .zip(comb.edge_faces())
        .map(|(&[i, j], &[a, b])| {
            (pole_tangency_point(&vp[i], &vp[j]) - pole_tangency_point(&fp[a], &fp[b])).norm()
        })
        .fold(0.0_f64, f64::max);
    checks.push(residual_check("tangency_coincidence", worst_coincidence, tol));

    // Non-adjacent pairs must be strictly separated: pole product < -1 - tol.
    let n = system.n_vertices();
    let m = system.n_faces();
    let mut sep = f64::NEG_INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            if comb.edge_index(i, j).is_none() {
                sep = sep.max(vp[i].dot(&vp[j]) + 1.0);
            }
        }
    }
    let mut face_adjacent = vec![vec![false; m]; m];
    for &[a, b] in comb.edge_faces() {
        face_adjacent[a][b] = true;
        face_adjacent[b][a] = true;
    }
    for a in 0..m {
        for b in a + 1..m {
            if !face_adjacent[a][b] {
                sep = sep.max(fp[a].dot(&fp[b]) + 1.0);
            }
        }
    }
    let mut incident = vec![vec![false; m]; n];
    for &(i, j) in comb.incidences() {
        incident[i][j] = true;
    }
    for i in 0..n {
        for j in 0..m {
            if !incident[i][j] {
                sep = sep.max(vp[i].dot(&fp[j]) + 1.0);
            }
        }
    }
    checks.push(CheckResult {
        name: "separation",
        worst: sep,
        passed: sep < -tol,
        informational: false,
    });

    ValidationReport {
        tolerance: tol,
        checks,
    }
}

fn residual_check(name: &'static str, worst: f64, tol: f64) -> CheckResult {
    CheckResult {
        name,
        worst,
        passed: worst <= tol,
        informational: false,
    }
}

/// One kite `Q_{i,j}` of the boundary decomposition: vertex, first tangency
/// point, face incenter, second tangency point.
#[derive(Debug, Clone, PartialEq)]
pub struct Trapezoid {
    pub vertex: usize,
    pub face: usize,
    pub corners: [Vector3<f64>; 4],
}

/// Euclidean realization of a bounded Koebe cap system.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanPolyhedron {
    pub vertices: Vec<Vector3<f64>>,
    pub face_incenters: Vec<Vector3<f64>>,
    /// One point per edge, aligned with the combinatorics' edge list.
    pub tangency_points: Vec<Vector3<f64>>,
    pub trapezoids: Vec<Trapezoid>,
    pub faces: Vec<Vec<usize>>,
}

impl EuclideanPolyhedron {
    pub fn edge_length(&self, i: usize, j: usize) -> f64 {
        (self.vertices[i] - self.vertices[j]).norm()
    }
}

fn foot_of_perpendicular(a: &Vector3<f64>, b: &Vector3<f64>) -> Vector3<f64> {
    let d = b - a;
    let t = -a.dot(&d) / d.norm_squared();
    a + d * t
}

/// Vertices `v_i / cos alpha_i`, incenters `cos beta_j f_j`, tangency points and
/// the kite decomposition of the boundary.
pub fn reconstruct(system: &KoebeCapSystem) -> Result<EuclideanPolyhedron, KoebeError> {
    let report = validate(system, DEFAULT_TOLERANCE);
    if !report.passed() {
        let names: Vec<_> = report.failures().iter().map(|c| c.name).collect();
        return Err(KoebeError::Invalid(names.join(", ")));
    }
    reconstruct_unchecked(system)
}

pub(crate) fn reconstruct_unchecked(
    system: &KoebeCapSystem,
) -> Result<EuclideanPolyhedron, KoebeError> {
    if let Some(i) = system.vertex_caps().iter().position(|c| !c.is_proper()) {
        return Err(KoebeError::Unbounded(i));
    }
    let comb = system.combinatorics();
    let vertices: Vec<Vector3<f64>> = system
        .vertex_caps()
        .iter()
        .map(|c| to_vec3(c.center()) / c.radius().cos())
        .collect();
    let face_incenters: Vec<Vector3<f64>> = system
        .face_caps()
        .iter()
        .map(|c| to_vec3(c.center()) * c.radius().cos())
        .collect();
    let tangency_points: Vec<Vector3<f64>> = comb
        .edges()
        .iter()
        .map(|&[i, j]| foot_of_perpendicular(&vertices[i], &vertices[j]))
        .collect();
    let trapezoids = comb
        .incidences()
        .iter()
        .map(|&(i, j)| {
            let (e_prev, e_next) = comb.incidence_edges(i, j).expect("incidence edges");
            Trapezoid {
                vertex: i,
                face: j,
                corners: [
                    vertices[i],
                    tangency_points[e_next],
                    face_incenters[j],
                    tangency_points[e_prev],
                ],
            }
        })
        .collect();
    Ok(EuclideanPolyhedron {
        vertices,
        face_incenters,
        tangency_points,
        trapezoids,
        faces: comb.faces().to_vec(),
    })
}

/// Point where edge `{i, j}` touches the unit sphere: the foot of the
/// perpendicular from the origin to the reconstructed edge.
pub fn tangency_point(
    system: &KoebeCapSystem,
    i: usize,
    j: usize,
) -> Result<Vector3<f64>, KoebeError> {
    if system.combinatorics().edge_index(i, j).is_none() {
        return Err(KoebeError::NotAnEdge(i, j));
    }
    for k in [i, j] {
        if !system.vertex_caps()[k].is_proper() {
            return Err(KoebeError::Unbounded(k));
        }
    }
    let vi = to_vec3(system.vertex_caps()[i].center()) / system.vertex_caps()[i].radius().cos();
    let vj = to_vec3(system.vertex_caps()[j].center()) / system.vertex_caps()[j].radius().cos();
    Ok(foot_of_perpendicular(&vi, &vj))
}

/// The five Platonic solids, midscribed to the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Solid {
    Tetrahedron,
    Cube,
    Octahedron,
    Icosahedron,
    Dodecahedron,
}

impl Solid {
    pub const ALL: [Solid; 5] = [
        Solid::Tetrahedron,
        Solid::Cube,
        Solid::Octahedron,
        Solid::Icosahedron,
        Solid::Dodecahedron,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Solid::Tetrahedron => "tetrahedron",
            Solid::Cube => "cube",
            Solid::Octahedron => "octahedron",
            Solid::Icosahedron => "icosahedron",
            Solid::Dodecahedron => "dodecahedron",
        }
    }

    pub fn is_simplicial(self) -> bool {
        matches!(
            self,
            Solid::Tetrahedron | Solid::Octahedron | Solid::Icosahedron
        )
    }
}

impl fmt::Display for Solid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Solid {
    type Err = KoebeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Solid::ALL
            .into_iter()
            .find(|x| x.name() == s.to_ascii_lowercase())
            .ok_or_else(|| KoebeError::UnknownSolid(s.to_string()))
    }
}

/// Scales a vertex set so that the first edge's foot point lies on the unit
/// sphere; for edge-transitive solids this midscribes every edge.
fn midscribe(vertices: Vec<Vector3<f64>>, faces: &[Vec<usize>]) -> Vec<Vector3<f64>> {
    let (a, b) = (vertices[faces[0][0]], vertices[faces[0][1]]);
    let s = 1.0 / foot_of_perpendicular(&a, &b).norm();
    vertices.into_iter().map(|v| v * s).collect()
}

fn tetrahedron() -> (Vec<Vector3<f64>>, Vec<Vec<usize>>) {
    let v = vec![
        Vector3::new(1.0, 1.0, 1.0),
        Vector3::new(1.0, -1.0, -1.0),
        Vector3::new(-1.0, 1.0, -1.0),
        Vector3::new(-1.0, -1.0, 1.0),
    ];
    let f = vec![vec![0, 1, 2], vec![0, 3, 1], vec![0, 2, 3], vec![1, 3, 2]];
    (v, f)
}

fn cube() -> (Vec<Vector3<f64>>, Vec<Vec<usize>>) {
    let v = (0..8)
        .map(|i| {
            let s = |b: usize| if i & b != 0 { 1.0 } else { -1.0 };
            Vector3::new(s(4), s(2), s(1))
        })
        .collect();
    let f = vec![
        vec![0, 1, 3, 2],
        vec![4, 6, 7, 5],
        vec![0, 4, 5, 1],
        vec![2, 3, 7, 6],
        vec![0, 2, 6, 4],
        vec![1, 5, 7, 3],
    ];
    (v, f)
}

fn icosahedron() -> (Vec<Vector3<f64>>, Vec<Vec<usize>>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v = Vec::new();
    for a in [-1.0, 1.0] {
        for b in [-phi, phi] {
            v.push(Vector3::new(0.0, a, b));
            v.push(Vector3::new(a, b, 0.0));
            v.push(Vector3::new(b, 0.0, a));
        }
    }
    let adjacent = |i: usize, j: usize| ((v[i] - v[j]).norm() - 2.0).abs() < 1e-9;
    let mut f = Vec::new();
    for i in 0..12 {
        for j in i + 1..12 {
            for k in j + 1..12 {
                if adjacent(i, j) && adjacent(j, k) && adjacent(i, k) {
                    f.push(vec![i, j, k]);
                }
            }
        }
    }
    (v, f)
}

/// Canonical midscribed Platonic solid with tangency-point barycenter at the
/// origin.
pub fn generate_canonical(solid: Solid) -> KoebeCapSystem {
    let build = |(v, f): (Vec<Vector3<f64>>, Vec<Vec<usize>>)| {
        let v = midscribe(v, &f);
        KoebeCapSystem::from_midscribed(&v, f).expect("canonical solid is valid")
    };
    let dual_of = |s: KoebeCapSystem| {
        let d = s.dual().expect("dual of a valid solid");
        // reorient dual face cycles against the dual vertex positions
        let poly = reconstruct_unchecked(&d).expect("bounded dual");
        KoebeCapSystem::from_midscribed(&poly.vertices, poly.faces).expect("valid dual")
    };
    match solid {
        Solid::Tetrahedron => build(tetrahedron()),
        Solid::Cube => build(cube()),
        Solid::Octahedron => dual_of(build(cube())),
        Solid::Icosahedron => build(icosahedron()),
        Solid::Dodecahedron => dual_of(build(icosahedron())),
    }
}

pub fn generate_by_name(name: &str) -> Result<KoebeCapSystem, KoebeError> {
    Ok(generate_canonical(name.parse()?))
}

/// Applies a Möbius transformation to every cap.
pub fn perturb(system: &KoebeCapSystem, t: &LorentzMap) -> Result<KoebeCapSystem, KoebeError> {
    let map = |caps: &[SphericalCap]| {
        caps.iter()
            .map(|c| apply_cap(t, c))
            .collect::<Result<Vec<_>, _>>()
    };
    system.with_caps(map(system.vertex_caps())?, map(system.face_caps())?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftDiagnostics {
    pub vertex: usize,
    pub step: f64,
    /// Ideal point on the boundary of the chosen vertex cap.
    pub ideal_point: Vector3<f64>,
    /// Spherical clearance of the ideal point from the other vertex caps.
    pub clearance: f64,
    pub alpha_after: f64,
    pub max_other_alpha: f64,
    pub cm0_norm: f64,
    pub transform: LorentzMap,
}

/// Pushes vertex plane `V_i` toward the origin by a hyperbolic translation
/// along the geodesic from `o` to an ideal point `q` on the boundary circle of
/// cap `i`. `q` maximizes the spherical clearance to the other vertex caps.
/// As `step` grows, cap `i` tends to a hemisphere from below, so the vertex
/// escapes to infinity while every other vertex cap shrinks.
pub fn drift_construction(
    system: &KoebeCapSystem,
    i: usize,
    step: f64,
) -> Result<(KoebeCapSystem, DriftDiagnostics), KoebeError> {
    if i >= system.n_vertices() {
        return Err(KoebeError::NoSuchVertex(i));
    }
    let cap = &system.vertex_caps()[i];
    let c = to_vec3(cap.center());
    let helper = if c.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let e1 = c.cross(&helper).normalize();
    let e2 = c.cross(&e1);
    let (sr, cr) = cap.radius().sin_cos();
    let boundary = |theta: f64| c * cr + (e1 * theta.cos() + e2 * theta.sin()) * sr;
    let others: Vec<(Vector3<f64>, f64)> = system
        .vertex_caps()
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != i)
        .map(|(_, cap)| (to_vec3(cap.center()), cap.radius()))
        .collect();
    let clearance = |theta: f64| {
        let q = boundary(theta);
        others
            .iter()
            .map(|(v, r)| q.dot(v).clamp(-1.0, 1.0).acos() - r)
            .fold(f64::INFINITY, f64::min)
    };
    const SAMPLES: usize = 720;
    let h = 2.0 * PI / SAMPLES as f64;
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for k in 0..SAMPLES {
        let val = clearance(k as f64 * h);
        if val > best_val + 1e-12 {
            best_val = val;
            best = k;
        }
    }
    // golden-section refinement on the bracketing interval
    let (mut lo, mut hi) = ((best as f64 - 1.0) * h, (best as f64 + 1.0) * h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if clearance(a) >= clearance(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let theta = 0.5 * (lo + hi);
    let q = boundary(theta).normalize();
    let o = HPoint::origin(3);
    let dir = ideal_direction(&o, &DVector::from_column_slice(q.as_slice()));
    let p = geodesic_exp(&o, &dir, step);
    let transform = boost_to_origin(&p);
    let moved = perturb(system, &transform)?;
    let alpha_after = moved.vertex_caps()[i].radius();
    let max_other_alpha = moved
        .vertex_caps()
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != i)
        .map(|(_, c)| c.radius())
        .fold(0.0_f64, f64::max);
    let cm0_norm = moved
        .vertex_caps()
        .iter()
        .map(|c| to_vec3(c.center()) / c.radius().cos())
        .sum::<Vector3<f64>>()
        .norm()
        / moved.n_vertices() as f64;
    let diagnostics = DriftDiagnostics {
        vertex: i,
        step,
        ideal_point: q,
        clearance: clearance(theta),
        alpha_after,
        max_other_alpha,
        cm0_norm,
        transform,
    };
    Ok((moved, diagnostics))
}

/// Pole product of two caps (Möbius invariant).
pub fn inversive_product(a: &SphericalCap, b: &SphericalCap) -> f64 {
    hypcore::cap_to_pole(a).dot(&hypcore::cap_to_pole(b))
}
