//! Quaternionic and complex cross ratios, the Riemann sphere, planes, lines
//! and the rigid motions used to assemble symmetric surfaces.
//!
//! Points of R³ are embedded as pure imaginary quaternions,
//! `(x, y, z) ↦ xi + yj + zk`, so that four points in the plane `z = 0`
//! have the same cross ratio as the corresponding complex numbers.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Complex = num_complex::Complex64;

/// Smallest admissible gap between consecutive cross-ratio arguments.
pub const MIN_GAP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ONE: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    /// Pure imaginary quaternion of a point in R³.
    pub fn pure(p: &Vec3) -> Self {
        Self::new(0.0, p.x, p.y, p.z)
    }

    pub fn imag(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn conj(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    /// Multiplicative inverse, `None` for the zero quaternion.
    pub fn inverse(&self) -> Option<Self> {
        let n2 = self.norm_sqr();
        if n2 == 0.0 || !n2.is_finite() {
            return None;
        }
        Some(self.conj().scale(1.0 / n2))
    }
}

impl Add for Quaternion {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Quaternion {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Quaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl Mul for Quaternion {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

/// Eigenvalue pair `{re ± i·im_mag}` of a quaternionic cross ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossRatioValue {
    pub re: f64,
    pub im_mag: f64,
}

impl CrossRatioValue {
    /// True when the imaginary part is negligible relative to the value,
    /// i.e. the four points are concircular.
    pub fn is_real(&self, tol: f64) -> bool {
        self.im_mag <= tol * self.re.abs().max(1.0)
    }
}

/// Quaternionic cross ratio `(X1−X2)(X2−X3)⁻¹(X3−X4)(X4−X1)⁻¹`.
pub fn cross_ratio_quat(x1: &Vec3, x2: &Vec3, x3: &Vec3, x4: &Vec3) -> Result<CrossRatioValue> {
    for (a, b, name) in [(x1, x2, "x1-x2"), (x2, x3, "x2-x3"), (x3, x4, "x3-x4"), (x4, x1, "x4-x1")] {
        if (a - b).norm() <= MIN_GAP {
            return Err(Error::DegenerateQuad(format!("coincident points {name}")));
        }
    }
    let q = |p: &Vec3| Quaternion::pure(p);
    let inv = |d: Quaternion| d.inverse().ok_or_else(|| Error::DegenerateQuad("non-invertible difference".into()));
    let prod = (q(x1) - q(x2)) * inv(q(x2) - q(x3))? * (q(x3) - q(x4)) * inv(q(x4) - q(x1))?;
    Ok(CrossRatioValue { re: prod.w, im_mag: prod.imag().norm() })
}

/// A point of the Riemann sphere `C ∪ {∞}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CInf {
    Finite(Complex),
    Infinity,
}

impl CInf {
    pub fn new(re: f64, im: f64) -> Self {
        CInf::Finite(Complex::new(re, im))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, CInf::Infinity)
    }

    pub fn finite(&self) -> Option<Complex> {
        match *self {
            CInf::Finite(z) => Some(z),
            CInf::Infinity => None,
        }
    }

    /// Chordal distance on the unit sphere; well defined at ∞.
    pub fn chordal_distance(&self, other: &CInf) -> f64 {
        (stereographic_lift(*self) - stereographic_lift(*other)).norm()
    }

    /// Two values coincide for cross-ratio purposes.
    pub fn coincides(&self, other: &CInf) -> bool {
        match (self, other) {
            (CInf::Infinity, CInf::Infinity) => true,
            (CInf::Finite(a), CInf::Finite(b)) => (a - b).norm() <= MIN_GAP,
            _ => false,
        }
    }

    pub fn recip(&self) -> CInf {
        match *self {
            CInf::Infinity => CInf::Finite(Complex::new(0.0, 0.0)),
            CInf::Finite(z) if z.norm_sqr() == 0.0 => CInf::Infinity,
            CInf::Finite(z) => CInf::Finite(z.inv()),
        }
    }
}

impl From<Complex> for CInf {
    fn from(z: Complex) -> Self {
        CInf::Finite(z)
    }
}

impl fmt::Display for CInf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CInf::Finite(z) => write!(f, "{z}"),
            CInf::Infinity => write!(f, "∞"),
        }
    }
}

/// Complex cross ratio `(g1−g2)(g2−g3)⁻¹(g3−g4)(g4−g1)⁻¹` on the Riemann sphere.
///
/// A value at ∞ appears in exactly one numerator and one denominator factor;
/// their ratio tends to −1 and the remaining factors are kept.
pub fn cross_ratio_complex(g1: CInf, g2: CInf, g3: CInf, g4: CInf) -> Result<CInf> {
    let g = [g1, g2, g3, g4];
    for a in 0..4 {
        if g[a].coincides(&g[(a + 1) % 4]) {
            return Err(Error::DegenerateQuad(format!("coincident values g{} and g{}", a + 1, (a + 1) % 4 + 1)));
        }
    }
    let inf: Vec<usize> = (0..4).filter(|&a| g[a].is_infinite()).collect();
    // numerator factors: (g1-g2), (g3-g4); denominator factors: (g2-g3), (g4-g1)
    let diff = |a: usize, b: usize| -> Option<Complex> { Some(g[a].finite()? - g[b].finite()?) };
    let (num, den) = match inf.as_slice() {
        [] => (diff(0, 1).unwrap() * diff(2, 3).unwrap(), diff(1, 2).unwrap() * diff(3, 0).unwrap()),
        [0] => (-diff(2, 3).unwrap(), diff(1, 2).unwrap()),
        [1] => (-diff(2, 3).unwrap(), diff(3, 0).unwrap()),
        [2] => (-diff(0, 1).unwrap(), diff(3, 0).unwrap()),
        [3] => (-diff(0, 1).unwrap(), diff(1, 2).unwrap()),
        _ => {
            // two non-adjacent poles: (∞−g2)(g3−∞)/((g2−g3)... reduces to a constant
            // only in the limit; treat as degenerate.
            return Err(Error::DegenerateQuad("two values at infinity".into()));
        }
    };
    if den.norm_sqr() == 0.0 {
        return Ok(CInf::Infinity);
    }
    Ok(CInf::Finite(num / den))
}

/// Inverse stereographic projection onto the unit sphere, ∞ to the north pole.
pub fn stereographic_lift(g: CInf) -> Vec3 {
    match g {
        CInf::Infinity => Vec3::new(0.0, 0.0, 1.0),
        CInf::Finite(z) => {
            let r2 = z.norm_sqr();
            if !r2.is_finite() {
                return Vec3::new(0.0, 0.0, 1.0);
            }
            Vec3::new(2.0 * z.re, 2.0 * z.im, r2 - 1.0) / (r2 + 1.0)
        }
    }
}

/// Stereographic projection from the north pole; the inverse of [`stereographic_lift`].
pub fn stereographic_project(n: &Vec3) -> CInf {
    let n = n.normalize();
    if n.z >= 0.0 {
        let d = 1.0 - n.z;
        if d <= 1e-15 {
            return CInf::Infinity;
        }
        CInf::new(n.x / d, n.y / d)
    } else {
        // numerically stable branch away from the north pole: g = (1 + z)/(x − iy)
        let w = Complex::new(n.x, -n.y);
        if w.norm_sqr() == 0.0 {
            return CInf::new(0.0, 0.0);
        }
        CInf::Finite(Complex::new(1.0 + n.z, 0.0) / w)
    }
}

/// Oriented plane `{p : normal · p = offset}` with unit normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneR3 {
    pub normal: Vec3,
    pub offset: f64,
}

impl PlaneR3 {
    pub fn new(normal: Vec3, offset: f64) -> Self {
        let len = normal.norm();
        Self { normal: normal / len, offset: offset / len }
    }

    pub fn through(point: &Vec3, normal: &Vec3) -> Self {
        let n = normal.normalize();
        Self { normal: n, offset: n.dot(point) }
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    pub fn reflect(&self, p: &Vec3) -> Vec3 {
        p - 2.0 * self.signed_distance(p) * self.normal
    }

    /// Plane through the origin parallel to this one.
    pub fn direction_plane(&self) -> PlaneR3 {
        PlaneR3 { normal: self.normal, offset: 0.0 }
    }
}

/// Line through `point` with unit `direction`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineR3 {
    pub point: Vec3,
    pub direction: Vec3,
}

impl LineR3 {
    pub fn new(point: Vec3, direction: Vec3) -> Self {
        Self { point, direction: direction.normalize() }
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        let d = p - self.point;
        (d - self.direction * self.direction.dot(&d)).norm()
    }

    /// Rotation by 180° about the line.
    pub fn half_turn(&self, p: &Vec3) -> Vec3 {
        let d = p - self.point;
        let foot = self.point + self.direction * self.direction.dot(&d);
        2.0 * foot - p
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum IsometryKind {
    Identity,
    PlaneReflection(PlaneR3),
    LineRotation(LineR3),
    Composite,
}

/// Rigid motion `p ↦ linear · p + translation`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub kind: IsometryKind,
    pub linear: Matrix3<f64>,
    pub translation: Vec3,
}

impl Isometry {
    pub fn identity() -> Self {
        Self { kind: IsometryKind::Identity, linear: Matrix3::identity(), translation: Vec3::zeros() }
    }

    pub fn reflection(plane: PlaneR3) -> Self {
        let n = plane.normal;
        let linear = Matrix3::identity() - 2.0 * n * n.transpose();
        let translation = 2.0 * plane.offset * n;
        Self { kind: IsometryKind::PlaneReflection(plane), linear, translation }
    }

    pub fn half_turn(line: LineR3) -> Self {
        let u = line.direction;
        let linear = 2.0 * u * u.transpose() - Matrix3::identity();
        let translation = line.point - linear * line.point;
        Self { kind: IsometryKind::LineRotation(line), linear, translation }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.linear * p + self.translation
    }

    /// Action on direction vectors (translation dropped).
    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.linear * v
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry {
            kind: IsometryKind::Composite,
            linear: self.linear * other.linear,
            translation: self.linear * other.translation + self.translation,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.linear.determinant()
    }

    pub fn is_proper(&self) -> bool {
        self.determinant() > 0.0
    }

    /// Distance between two motions: matrix entries plus translation relative to `scale`.
    pub fn distance(&self, other: &Isometry, scale: f64) -> f64 {
        let dm = (self.linear - other.linear).abs().max();
        let dt = (self.translation - other.translation).norm() / scale.max(f64::MIN_POSITIVE);
        dm.max(dt)
    }

    pub fn orthogonality_defect(&self) -> f64 {
        (self.linear.transpose() * self.linear - Matrix3::identity()).abs().max()
    }
}

fn centroid(points: &[Vec3]) -> Vec3 {
    points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / points.len() as f64
}

/// Largest distance of a point set from its centroid.
pub fn point_scale(points: &[Vec3]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let c = centroid(points);
    points.iter().map(|p| (p - c).norm()).fold(0.0, f64::max)
}

/// Principal axes of the points about `center`, smallest spread first, as
/// (singular value², direction). Uses the SVD of the centred coordinates so
/// thin point sets keep full precision.
fn sorted_eigen(points: &[Vec3], center: &Vec3) -> (Vec<f64>, Vec<Vec3>) {
    let rows = points.len().max(3);
    let mut a = DMatrix::<f64>::zeros(rows, 3);
    for (r, p) in points.iter().enumerate() {
        let d = p - center;
        a[(r, 0)] = d.x;
        a[(r, 1)] = d.y;
        a[(r, 2)] = d.z;
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
    let vals = idx.iter().map(|&i| svd.singular_values[i].powi(2)).collect();
    let vecs = idx.iter().map(|&i| Vec3::new(vt[(i, 0)], vt[(i, 1)], vt[(i, 2)]).normalize()).collect();
    (vals, vecs)
}

/// Least-squares plane through the points; returns the plane and the largest
/// point-plane distance.
pub fn fit_plane(points: &[Vec3]) -> Result<(PlaneR3, f64)> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 points, got {}", points.len())));
    }
    let c = centroid(points);
    let scale = point_scale(points);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::DegenerateFit("coincident or non-finite points".into()));
    }
    let (vals, vecs) = sorted_eigen(points, &c);
    if vals[1].sqrt() <= 1e-12 * scale {
        return Err(Error::DegenerateFit("points are collinear".into()));
    }
    let plane = PlaneR3::through(&c, &vecs[0]);
    let residual = points.iter().map(|p| plane.signed_distance(p).abs()).fold(0.0, f64::max);
    Ok((plane, residual))
}

/// Least-squares plane constrained to pass through the origin.
pub fn fit_plane_through_origin(points: &[Vec3]) -> Result<(PlaneR3, f64)> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit("need at least 2 points".into()));
    }
    let scale = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::DegenerateFit("all points at the origin".into()));
    }
    let (_, vecs) = sorted_eigen(points, &Vec3::zeros());
    let plane = PlaneR3::through(&Vec3::zeros(), &vecs[0]);
    let residual = points.iter().map(|p| plane.signed_distance(p).abs()).fold(0.0, f64::max);
    Ok((plane, residual))
}

/// Least-squares line through the points with the largest point-line distance.
pub fn fit_line(points: &[Vec3]) -> Result<(LineR3, f64)> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit("need at least 2 points".into()));
    }
    let c = centroid(points);
    let scale = point_scale(points);
    if !(scale > 0.0) {
        return Err(Error::DegenerateFit("coincident points".into()));
    }
    let (_, vecs) = sorted_eigen(points, &c);
    let line = LineR3::new(c, vecs[2]);
    let residual = points.iter().map(|p| line.distance(p)).fold(0.0, f64::max);
    Ok((line, residual))
}

/// Unit complex number `e^{iθ}` with components snapped to exact zeros and
/// ones at multiples of π/2.
pub fn unit_phase(theta: f64) -> Complex {
    let (s, c) = theta.sin_cos();
    let snap = |v: f64| {
        if v.abs() < 1e-15 {
            0.0
        } else if (v.abs() - 1.0).abs() < 1e-15 {
            v.signum()
        } else {
            v
        }
    };
    Complex::new(snap(c), snap(s))
}
