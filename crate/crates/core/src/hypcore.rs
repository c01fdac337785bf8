//! Hyperboloid model of hyperbolic space `H^{d+1}` inside Minkowski space
//! `R^{d+1,1}`.
//!
//! Vectors store the `d+1` spatial coordinates first and the time coordinate
//! last; the bilinear form is `<x,y> = x_s . y_s - x_t y_t`. Three roles share
//! the same representation:
//!
//! - points of `H^{d+1}` have `<p,p> = -1` and positive time,
//! - unit space-like vectors (`<s,s> = 1`) are poles of hyperplanes; the pole
//!   of a spherical cap `C` on `S^d` is oriented so that `C` is the set of
//!   ideal points `u` with `<(u,1), s> >= 0`,
//! - tangent vectors at `p` are the vectors Minkowski-orthogonal to `p`.
//!
//! Möbius transformations of `S^d` act as orthochronous Lorentz matrices.
//! Every operation renormalizes its output so long compositions do not drift
//! off the hyperboloid.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector, DVectorView};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Tolerance below which a point is considered to lie on a hyperplane.
pub const ON_PLANE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HypError {
    #[error("cap radius {0} outside (0, pi)")]
    RadiusOutOfRange(f64),
    #[error("cap center is not a unit vector (norm {0})")]
    NonUnitCenter(f64),
    #[error("vector is not space-like (<s,s> = {0})")]
    NotSpaceLike(f64),
    #[error("vector is not time-like (<p,p> = {0})")]
    NotTimeLike(f64),
    #[error("point lies on the hyperplane; normal direction undefined")]
    OnPlane,
    #[error("ball coordinate has norm {0} >= 1")]
    OutsideBall(f64),
    #[error("half-plane configuration requires r < sqrt(a^2 + t^2)")]
    HalfPlaneDomain,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, HypError>;

/// A vector of `R^{d+1,1}`; the last coordinate is time.
#[derive(Debug, Clone, PartialEq)]
pub struct MinkowskiVec(DVector<f64>);

impl MinkowskiVec {
    pub fn new(spatial: &[f64], time: f64) -> Self {
        let mut v = DVector::zeros(spatial.len() + 1);
        v.rows_mut(0, spatial.len()).copy_from_slice(spatial);
        v[spatial.len()] = time;
        Self(v)
    }

    pub fn from_parts(spatial: &DVector<f64>, time: f64) -> Self {
        Self::new(spatial.as_slice(), time)
    }

    /// Wraps a raw `(d+2)`-vector whose last entry is time.
    pub fn from_vector(v: DVector<f64>) -> Self {
        Self(v)
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    /// Dimension `d+1` of the spatial part.
    pub fn spatial_dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn spatial(&self) -> DVectorView<'_, f64> {
        self.0.rows(0, self.0.len() - 1)
    }

    pub fn spatial_owned(&self) -> DVector<f64> {
        self.spatial().into_owned()
    }

    pub fn time(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// Minkowski bilinear form.
    pub fn dot(&self, other: &Self) -> f64 {
        let k = self.0.len() - 1;
        self.0.rows(0, k).dot(&other.0.rows(0, k)) - self.0[k] * other.0[k]
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn scale(&self, f: f64) -> Self {
        Self(&self.0 * f)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        Self(&self.0 + &other.0 * a)
    }

    /// Rescales a space-like vector to unit Minkowski norm.
    pub fn normalized_spacelike(&self) -> Result<Self> {
        let n2 = self.norm_sq();
        if !(n2 > 0.0) {
            return Err(HypError::NotSpaceLike(n2));
        }
        Ok(self.scale(1.0 / n2.sqrt()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

/// A point on the upper sheet of the hyperboloid.
#[derive(Debug, Clone, PartialEq)]
pub struct HPoint(MinkowskiVec);

impl HPoint {
    /// The origin `(0,...,0; 1)`, center of the Poincaré ball chart.
    pub fn origin(spatial_dim: usize) -> Self {
        let mut v = DVector::zeros(spatial_dim + 1);
        v[spatial_dim] = 1.0;
        Self(MinkowskiVec(v))
    }

    /// Lifts spatial coordinates to the hyperboloid (`time = sqrt(1 + |x|^2)`).
    pub fn from_spatial(spatial: &DVector<f64>) -> Self {
        let t = (1.0 + spatial.norm_squared()).sqrt();
        Self(MinkowskiVec::from_parts(spatial, t))
    }

    /// Projects an arbitrary future time-like vector onto the hyperboloid.
    pub fn from_timelike(v: &MinkowskiVec) -> Result<Self> {
        let n2 = v.norm_sq();
        if !(n2 < 0.0) || v.time() <= 0.0 {
            return Err(HypError::NotTimeLike(n2));
        }
        let scaled = v.spatial_owned() / (-n2).sqrt();
        Ok(Self::from_spatial(&scaled))
    }

    pub fn vec(&self) -> &MinkowskiVec {
        &self.0
    }

    pub fn spatial_dim(&self) -> usize {
        self.0.spatial_dim()
    }

    /// Hyperbolic distance, evaluated through the chord length for accuracy at
    /// short range.
    pub fn distance(&self, other: &HPoint) -> f64 {
        let chord = self.0.sub(&other.0).norm_sq().max(0.0).sqrt();
        2.0 * (chord / 2.0).asinh()
    }

    pub fn distance_from_origin(&self) -> f64 {
        self.0.spatial().norm().asinh()
    }
}

/// A tangent vector at a point of the hyperboloid.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVec {
    pub base: HPoint,
    pub vec: MinkowskiVec,
}

impl TangentVec {
    /// Builds a tangent vector, projecting away any normal component.
    pub fn new(base: HPoint, vec: MinkowskiVec) -> Self {
        let a = vec.dot(base.vec());
        let vec = vec.axpy(a, base.vec());
        Self { base, vec }
    }

    pub fn zero(base: HPoint) -> Self {
        let n = base.vec().as_vector().len();
        Self {
            base,
            vec: MinkowskiVec(DVector::zeros(n)),
        }
    }

    /// Riemannian (Minkowski) length.
    pub fn norm(&self) -> f64 {
        self.vec.norm_sq().max(0.0).sqrt()
    }

    pub fn scale(&self, f: f64) -> Self {
        Self {
            base: self.base.clone(),
            vec: self.vec.scale(f),
        }
    }

    pub fn add(&self, other: &TangentVec) -> Self {
        Self {
            base: self.base.clone(),
            vec: self.vec.add(&other.vec),
        }
    }

    pub fn inner(&self, other: &TangentVec) -> f64 {
        self.vec.dot(&other.vec)
    }
}

/// An orthochronous Lorentz transformation, i.e. a Möbius transformation of
/// `S^d` acting on `H^{d+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzMap(DMatrix<f64>);

impl LorentzMap {
    pub fn identity(spatial_dim: usize) -> Self {
        Self(DMatrix::identity(spatial_dim + 1, spatial_dim + 1))
    }

    /// Wraps a matrix, checking `M^T J M = J` and orthochronicity to `tol`.
    pub fn from_matrix(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        let map = Self(m);
        let defect = map.form_defect();
        let n = map.0.nrows();
        if !(defect <= tol) || map.0[(n - 1, n - 1)] < 1.0 - tol {
            return Err(HypError::NotTimeLike(defect));
        }
        Ok(map)
    }

    /// Wraps a matrix without validation.
    pub fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    /// Embeds an orthogonal matrix of `R^{d+1}` as a rotation.
    pub fn rotation(r: &DMatrix<f64>) -> Self {
        let k = r.nrows();
        let mut m = DMatrix::identity(k + 1, k + 1);
        m.view_mut((0, 0), (k, k)).copy_from(r);
        Self(m)
    }

    /// Pure boost mapping the origin to `p`.
    pub fn boost_from_origin(p: &HPoint) -> Self {
        let k = p.spatial_dim();
        let x = p.vec().spatial_owned();
        let t = p.vec().time();
        let mut m = DMatrix::identity(k + 1, k + 1);
        let outer = &x * x.transpose() / (1.0 + t);
        let mut block = m.view_mut((0, 0), (k, k));
        block += &outer;
        m.view_mut((0, k), (k, 1)).copy_from(&x);
        m.view_mut((k, 0), (1, k)).copy_from(&x.transpose());
        m[(k, k)] = t;
        Self(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn spatial_dim(&self) -> usize {
        self.0.nrows() - 1
    }

    pub fn apply(&self, v: &MinkowskiVec) -> MinkowskiVec {
        MinkowskiVec(&self.0 * &v.0)
    }

    pub fn apply_point(&self, p: &HPoint) -> HPoint {
        HPoint::from_timelike(&self.apply(p.vec())).unwrap_or_else(|_| p.clone())
    }

    pub fn apply_tangent(&self, v: &TangentVec) -> TangentVec {
        TangentVec::new(self.apply_point(&v.base), self.apply(&v.vec))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &LorentzMap) -> LorentzMap {
        Self(&self.0 * &other.0)
    }

    /// Inverse via `J M^T J`.
    pub fn inverse(&self) -> LorentzMap {
        let n = self.0.nrows();
        let mut m = self.0.transpose();
        for i in 0..n - 1 {
            m[(i, n - 1)] = -m[(i, n - 1)];
            m[(n - 1, i)] = -m[(n - 1, i)];
        }
        Self(m)
    }

    /// Max-abs entry of `M^T J M - J`.
    pub fn form_defect(&self) -> f64 {
        let n = self.0.nrows();
        let mut j = DMatrix::identity(n, n);
        j[(n - 1, n - 1)] = -1.0;
        let d = self.0.transpose() * &j * &self.0 - &j;
        d.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
    }

    pub fn is_orthochronous(&self) -> bool {
        let n = self.0.nrows();
        self.0[(n - 1, n - 1)] >= 1.0 - 1e-12
    }

    /// Hyperbolic distance the origin is moved; zero exactly for rotations.
    pub fn rapidity(&self) -> f64 {
        let n = self.0.nrows();
        self.0.view((0, n - 1), (n - 1, 1)).norm().asinh()
    }

    /// Projects back onto the Lorentz group: polar-decomposes into boost times
    /// rotation and re-orthonormalizes the rotation.
    pub fn renormalized(&self) -> LorentzMap {
        let k = self.spatial_dim();
        let image = HPoint::from_timelike(&self.apply(HPoint::origin(k).vec()))
            .unwrap_or_else(|_| HPoint::origin(k));
        let boost = LorentzMap::boost_from_origin(&image);
        let rest = boost.inverse().compose(self);
        let r = rest.0.view((0, 0), (k, k)).into_owned();
        let svd = r.svd(true, true);
        let (Some(u), Some(vt)) = (svd.u, svd.v_t) else {
            return self.clone();
        };
        boost.compose(&LorentzMap::rotation(&(u * vt)))
    }
}

/// A closed spherical cap on `S^d`.
///
/// Koebe systems centered so that the origin lies in the domain `D` have all
/// radii below `pi/2`; Möbius images may exceed it, so only `(0, pi)` is
/// enforced here.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalCap {
    center: DVector<f64>,
    radius: f64,
}

impl SphericalCap {
    pub fn new(center: DVector<f64>, radius: f64) -> Result<Self> {
        let n = center.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(HypError::NonUnitCenter(n));
        }
        if !(radius > 0.0 && radius < std::f64::consts::PI) {
            return Err(HypError::RadiusOutOfRange(radius));
        }
        // unit inputs are kept bit-exact so documents round-trip
        let center = if (n - 1.0).abs() > 4.0 * f64::EPSILON { center / n } else { center };
        Ok(Self { center, radius })
    }

    pub fn from_slice(center: &[f64], radius: f64) -> Result<Self> {
        Self::new(DVector::from_column_slice(center), radius)
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn spatial_dim(&self) -> usize {
        self.center.len()
    }

    /// Whether the cap is smaller than a hemisphere.
    pub fn is_proper(&self) -> bool {
        self.radius < FRAC_PI_2
    }

    /// Whether the unit vector `u` lies in the closed cap.
    pub fn contains(&self, u: &DVector<f64>) -> bool {
        self.center.dot(u) >= self.radius.cos() - 1e-15
    }
}

/// Unit space-like pole `(c, cos r) / sin r` of a cap.
pub fn cap_to_pole(cap: &SphericalCap) -> MinkowskiVec {
    let (s, c) = cap.radius.sin_cos();
    MinkowskiVec::from_parts(&(&cap.center / s), c / s)
}

/// Inverse of [`cap_to_pole`]; accepts unnormalized space-like vectors.
pub fn pole_to_cap(s: &MinkowskiVec) -> Result<SphericalCap> {
    let n2 = s.norm_sq();
    if !(n2 > 0.0) || !s.is_finite() {
        return Err(HypError::NotSpaceLike(n2));
    }
    let spatial = s.spatial_owned();
    let len = spatial.norm();
    let radius = n2.sqrt().atan2(s.time());
    SphericalCap::new(spatial / len, radius)
}

/// Signed distance `arsinh(-<p,s>)` from `p` to the hyperplane of pole `s`;
/// positive on the side away from the cap.
pub fn plane_distance(p: &HPoint, s: &MinkowskiVec) -> f64 {
    (-p.vec().dot(s)).asinh()
}

/// Unit tangent at `p` along the perpendicular to the plane of `s`, pointing
/// toward the plane when `p` lies on the positive side.
pub fn unit_normal_toward(p: &HPoint, s: &MinkowskiVec) -> Result<TangentVec> {
    let a = p.vec().dot(s);
    if a.abs() <= ON_PLANE_TOL {
        return Err(HypError::OnPlane);
    }
    let w = s.axpy(a, p.vec());
    let len = w.norm_sq().sqrt();
    Ok(TangentVec {
        base: p.clone(),
        vec: w.scale(1.0 / len),
    })
}

/// Poincaré ball coordinates `x / (1 + t)`.
pub fn ball_chart(p: &HPoint) -> DVector<f64> {
    p.vec().spatial_owned() / (1.0 + p.vec().time())
}

pub fn ball_chart_inverse(b: &DVector<f64>) -> Result<HPoint> {
    let r2 = b.norm_squared();
    if !(r2 < 1.0) {
        return Err(HypError::OutsideBall(r2.sqrt()));
    }
    Ok(HPoint::from_spatial(&(b * (2.0 / (1.0 - r2)))))
}

/// Point at distance `s` from `p` along the geodesic with initial direction
/// `v` (normalized internally).
pub fn geodesic_exp(p: &HPoint, v: &TangentVec, s: f64) -> HPoint {
    let n = v.norm();
    if n == 0.0 || s == 0.0 {
        return p.clone();
    }
    let q = p
        .vec()
        .scale(s.cosh())
        .axpy(s.sinh() / n, &v.vec);
    HPoint::from_timelike(&q).unwrap_or_else(|_| p.clone())
}

/// Pure boost `T` with `T p = o`.
pub fn boost_to_origin(p: &HPoint) -> LorentzMap {
    LorentzMap::boost_from_origin(p).inverse()
}

/// Image of a cap under a Möbius transformation.
pub fn apply_cap(t: &LorentzMap, cap: &SphericalCap) -> Result<SphericalCap> {
    let s = t.apply(&cap_to_pole(cap)).normalized_spacelike()?;
    pole_to_cap(&s)
}

/// Unit tangent at `p` pointing to the ideal point `u`.
pub fn ideal_direction(p: &HPoint, u: &DVector<f64>) -> TangentVec {
    let lift = MinkowskiVec::from_parts(u, 1.0);
    let a = p.vec().dot(&lift);
    let w = lift.axpy(a, p.vec());
    let len = w.norm_sq().sqrt();
    TangentVec {
        base: p.clone(),
        vec: w.scale(1.0 / len),
    }
}

/// Distances and normal components for the point `(a, t)` of the upper
/// half-plane, relative to the `y`-axis and the half-circle of radius `r`
/// centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlaneCheck {
    pub dist_axis: f64,
    pub dist_circle: Option<f64>,
    pub y_u: f64,
    pub y_v: Option<f64>,
}

pub fn halfplane_check(a: f64, t: f64, r: Option<f64>) -> Result<HalfPlaneCheck> {
    let rho2 = a * a + t * t;
    let dist_axis = (a / t).asinh();
    let y_u = a / rho2.sqrt();
    let (dist_circle, y_v) = match r {
        None => (None, None),
        Some(r) => {
            if r * r >= rho2 {
                return Err(HypError::HalfPlaneDomain);
            }
            let dc = ((t * t + a * a - r * r) / (2.0 * r * t)).asinh();
            let yv = -(t * t + r * r - a * a)
                / ((r * r + a * a + t * t).powi(2) - 4.0 * r * r * a * a).sqrt();
            (Some(dc), Some(yv))
        }
    };
    Ok(HalfPlaneCheck {
        dist_axis,
        dist_circle,
        y_u,
        y_v,
    })
}

/// Uniformly random orthogonal matrix (Haar measure on `SO(k)`).
pub fn random_rotation<R: Rng>(rng: &mut R, k: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col *= -1.0;
        }
    }
    if q.determinant() < 0.0 {
        let mut col = q.column_mut(0);
        col *= -1.0;
    }
    q
}

/// Uniformly random unit vector of `R^k`.
pub fn random_unit<R: Rng>(rng: &mut R, k: usize) -> DVector<f64> {
    loop {
        let g = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = g.norm();
        if n > 1e-12 {
            return g / n;
        }
    }
}

/// Deterministic random Möbius transformation: a uniform rotation followed by
/// a boost with rapidity uniform in `[0, max_rapidity]` in a uniform
/// direction.
pub fn random_mobius(seed: u64, max_rapidity: f64, spatial_dim: usize) -> LorentzMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rot = LorentzMap::rotation(&random_rotation(&mut rng, spatial_dim));
    let rapidity = if max_rapidity > 0.0 {
        rng.random_range(0.0..=max_rapidity)
    } else {
        0.0
    };
    let dir = random_unit(&mut rng, spatial_dim);
    let target = HPoint::from_spatial(&(dir * rapidity.sinh()));
    LorentzMap::boost_from_origin(&target).compose(&rot)
}
