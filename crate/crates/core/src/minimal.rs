//! Weierstrass representations of discrete isothermic and asymptotic minimal
//! nets, the Christoffel transform, Gauss maps and mixed-area curvatures.

use num_complex::Complex64 as Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::holomorphic::HoloGrid;
use crate::mobius::{fit_plane, stereographic_lift, CInf, Vec3};
use crate::net::{is_isothermic, EdgeLabels, Net3, Quad, QuadReport, Vertex};

/// Loop-closure tolerance, relative to the longest edge of the quad.
pub const CLOSURE_TOL: f64 = 1e-9;

/// Isothermic minimal net, its conjugate asymptotic net and their common Gauss map.
#[derive(Clone, Debug)]
pub struct MinimalPair {
    pub f: Net3,
    pub f_tilde: Net3,
    pub normals: Net3,
    pub g: HoloGrid,
}

impl MinimalPair {
    pub fn from_grid(g: &HoloGrid) -> Result<Self> {
        Ok(Self {
            f: weierstrass_isothermic(g)?,
            f_tilde: weierstrass_asymptotic(g)?,
            normals: gauss_map(g),
            g: g.clone(),
        })
    }
}

/// Sum the increments `inc(parent, v)` along the breadth-first spanning tree,
/// placing the root at the origin, then check that every quad loop closes.
pub fn integrate(labels_domain: &crate::net::LatticeDomain, mut inc: impl FnMut(Vertex, Vertex) -> Result<Vec3>) -> Result<Net3> {
    let domain = labels_domain.clone();
    let mut net = Net3::zeros(domain.clone());
    for (v, parent) in domain.spanning_tree() {
        if let Some(u) = parent {
            let p = net.at(u) + inc(u, v)?;
            net.set(v, p);
        }
    }
    if net.domain.vertex_count() != domain.spanning_tree().len() {
        return Err(Error::InvalidGrid("domain is not edge-connected".into()));
    }
    for q in domain.quads() {
        let c = q.corners();
        let mut sum = Vec3::zeros();
        let mut scale = 0.0f64;
        for a in 0..4 {
            let d = inc(c[a], c[(a + 1) % 4])?;
            scale = scale.max(d.norm());
            sum += d;
        }
        if sum.norm() > CLOSURE_TOL * scale {
            return Err(Error::ClosureFailure { m: q.m, n: q.n, residual: sum.norm() / scale });
        }
    }
    Ok(net)
}

/// `Re((1 − g_i g_j, i(1 + g_i g_j), g_i + g_j) / (g_j − g_i))`, times `i` inside
/// the real part when `rotate` is set, with the limits at ∞.
fn weierstrass_vector(gi: CInf, gj: CInf, rotate: bool) -> Option<[Complex; 3]> {
    let i = Complex::new(0.0, 1.0);
    let one = Complex::new(1.0, 0.0);
    let v = match (gi, gj) {
        (CInf::Finite(a), CInf::Finite(b)) => {
            let dg = b - a;
            if dg.norm() == 0.0 {
                return None;
            }
            [(one - a * b) / dg, i * (one + a * b) / dg, (a + b) / dg]
        }
        (CInf::Finite(a), CInf::Infinity) => [-a, i * a, one],
        (CInf::Infinity, CInf::Finite(b)) => [b, -i * b, -one],
        (CInf::Infinity, CInf::Infinity) => return None,
    };
    Some(if rotate { v.map(|c| i * c) } else { v })
}

/// Weierstrass increment of the edge `u → v`; `asymptotic` selects the conjugate net.
pub fn weierstrass_increment(g: &HoloGrid, u: Vertex, v: Vertex, asymptotic: bool) -> Result<Vec3> {
    let a = g.labels.edge(u, v);
    let w = weierstrass_vector(g.at(u), g.at(v), asymptotic).ok_or(Error::ZeroDg(u, v))?;
    Ok(a * Vec3::new(w[0].re, w[1].re, w[2].re))
}

/// Largest `|Σ increments|` around a quad, relative to its longest increment.
pub fn closure_residual(g: &HoloGrid, asymptotic: bool) -> Result<f64> {
    let mut worst = 0.0f64;
    for q in g.domain.quads() {
        let c = q.corners();
        let mut sum = Vec3::zeros();
        let mut scale = 0.0f64;
        for a in 0..4 {
            let d = weierstrass_increment(g, c[a], c[(a + 1) % 4], asymptotic)?;
            scale = scale.max(d.norm());
            sum += d;
        }
        worst = worst.max(sum.norm() / scale);
    }
    Ok(worst)
}

fn weierstrass(g: &HoloGrid, rotate: bool) -> Result<Net3> {
    let gap = |u: Vertex, v: Vertex| g.at(u).coincides(&g.at(v));
    for (u, v) in g.domain.edges() {
        if gap(u, v) {
            return Err(Error::ZeroDg(u, v));
        }
    }
    integrate(&g.domain, |u, v| weierstrass_increment(g, u, v, rotate))
}

/// Discrete isothermic minimal net of `g`.
pub fn weierstrass_isothermic(g: &HoloGrid) -> Result<Net3> {
    weierstrass(g, false)
}

/// Discrete asymptotic minimal net of `g` (the conjugate net).
pub fn weierstrass_asymptotic(g: &HoloGrid) -> Result<Net3> {
    weierstrass(g, true)
}

/// `N = σ⁻¹(g)` at every vertex.
pub fn gauss_map(g: &HoloGrid) -> Net3 {
    Net3::from_fn(g.domain.clone(), |v| stereographic_lift(g.at(v)))
}

/// Christoffel dual: `dF*_e = a_e dF_e / |dF_e|²`, root at the origin.
pub fn christoffel(f: &Net3, labels: &EdgeLabels) -> Result<Net3> {
    let report = is_isothermic(f, labels, 1e-9)?;
    if !report.passed {
        return Err(Error::NotIsothermic(report.max_residual));
    }
    integrate(&f.domain, |u, v| {
        let d = f.at(v) - f.at(u);
        Ok(labels.edge(u, v) * d / d.norm_squared())
    })
}

fn lattice_difference(f: &Net3, (m, n): Vertex, dir: Vertex) -> Option<Vec3> {
    let fwd = f.get((m + dir.0, n + dir.1));
    let back = f.get((m - dir.0, n - dir.1));
    match (fwd, back) {
        (Some(a), Some(b)) => Some(a - b),
        (Some(a), None) => Some(a - f.at((m, n))),
        (None, Some(b)) => Some(f.at((m, n)) - b),
        (None, None) => None,
    }
}

/// Tangent-plane normals of an asymptotic net, `δ_m F × δ_n F` normalised
/// (central differences inside, one-sided on the boundary).
pub fn tangent_normals(f: &Net3) -> Result<Net3> {
    let mut out = Net3::zeros(f.domain.clone());
    for v in f.domain.vertices() {
        let dm = lattice_difference(f, v, (1, 0));
        let dn = lattice_difference(f, v, (0, 1));
        let (Some(dm), Some(dn)) = (dm, dn) else {
            return Err(Error::InvalidGrid(format!("vertex {v:?} has no neighbours in one direction")));
        };
        let n = dm.cross(&dn);
        if n.norm() <= 1e-14 * dm.norm() * dn.norm() {
            return Err(Error::DegenerateQuad(format!("tangent plane undefined at {v:?}")));
        }
        out.set(v, n.normalize());
    }
    Ok(out)
}

/// Star-coplanarity and non-degeneracy of a candidate asymptotic net.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub passed: bool,
    pub stars_coplanar: bool,
    pub quads_nondegenerate: bool,
    pub max_star_residual: f64,
    pub worst_star: Option<Vertex>,
    pub min_quad_nonplanarity: f64,
    pub flattest_quad: Option<Quad>,
}

/// Each interior vertex star `(F, F₁, F₋₁, F₂, F₋₂)` coplanar within `tol`
/// (relative to the star size) and every quad non-planar beyond `tol`.
pub fn is_asymptotic(f: &Net3, tol: f64) -> AsymptoticReport {
    let mut r = AsymptoticReport { min_quad_nonplanarity: f64::INFINITY, ..Default::default() };
    for (m, n) in f.domain.vertices() {
        let star: Option<Vec<Vec3>> =
            [(m, n), (m + 1, n), (m - 1, n), (m, n + 1), (m, n - 1)].iter().map(|&v| f.get(v)).collect();
        let Some(star) = star else { continue };
        let size = star[1..].iter().map(|p| (p - star[0]).norm()).fold(0.0, f64::max);
        let res = match fit_plane(&star) {
            Ok((_, d)) => d / size,
            Err(_) => 0.0,
        };
        if r.worst_star.is_none() || res > r.max_star_residual {
            r.max_star_residual = res;
            r.worst_star = Some((m, n));
        }
    }
    for q in f.domain.quads() {
        let pts = f.quad_points(q);
        let size = (0..4).map(|a| (pts[(a + 1) % 4] - pts[a]).norm()).fold(0.0, f64::max);
        let res = match fit_plane(&pts) {
            Ok((_, d)) => d / size,
            Err(_) => 0.0,
        };
        if res < r.min_quad_nonplanarity {
            r.min_quad_nonplanarity = res;
            r.flattest_quad = Some(q);
        }
    }
    if r.flattest_quad.is_none() {
        r.min_quad_nonplanarity = 0.0;
    }
    r.stars_coplanar = r.max_star_residual <= tol;
    r.quads_nondegenerate = r.flattest_quad.is_some() && r.min_quad_nonplanarity > tol;
    r.passed = r.stars_coplanar && r.quads_nondegenerate;
    r
}

/// Reflect `n` in the plane orthogonal to the edge `d`.
fn mirror_normal(n: &Vec3, d: &Vec3) -> Vec3 {
    n - 2.0 * n.dot(d) / d.norm_squared() * d
}

/// Normal bundle of a circular net from the unit normal at the root.
pub fn propagate_normals(f: &Net3, n0: Vec3) -> Result<Net3> {
    let n0 = n0.normalize();
    let mut out = Net3::zeros(f.domain.clone());
    for (v, parent) in f.domain.spanning_tree() {
        match parent {
            None => out.set(v, n0),
            Some(u) => {
                let d = f.at(v) - f.at(u);
                out.set(v, mirror_normal(&out.at(u), &d));
            }
        }
    }
    for (u, v) in f.domain.edges() {
        let d = f.at(v) - f.at(u);
        let err = (mirror_normal(&out.at(u), &d) - out.at(v)).norm();
        if err > 1e-9 {
            return Err(Error::InconsistentBundle { m: u.0, n: u.1, residual: err });
        }
    }
    Ok(out)
}

fn planarity(points: &[Vec3; 4]) -> f64 {
    let size = (0..4).map(|a| (points[(a + 1) % 4] - points[a]).norm()).fold(0.0, f64::max);
    if size == 0.0 {
        return 0.0;
    }
    match fit_plane(points) {
        Ok((_, d)) => d / size,
        Err(_) => 0.0,
    }
}

/// Mixed area `¼(δF_ik × δG_jl + δG_ik × δF_jl)` as an axial vector.
pub fn mixed_area(qf: &[Vec3; 4], qg: &[Vec3; 4]) -> Result<Vec3> {
    for q in [qf, qg] {
        let p = planarity(q);
        if p > 1e-9 {
            return Err(Error::NotCoplanar(p));
        }
    }
    let dfik = qf[2] - qf[0];
    let dfjl = qf[3] - qf[1];
    let dgik = qg[2] - qg[0];
    let dgjl = qg[3] - qg[1];
    Ok(0.25 * (dfik.cross(&dgjl) + dgik.cross(&dfjl)))
}

/// Discrete mean and Gaussian curvature of one quad.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadCurvature {
    pub h: f64,
    pub k: f64,
    pub area_f: f64,
    pub mixed: f64,
}

/// `H = −A(F,N)/A(F)`, `K = A(N)/A(F)` along the quad normal of `F`.
pub fn quad_curvatures(qf: &[Vec3; 4], qn: &[Vec3; 4]) -> Result<QuadCurvature> {
    let af = mixed_area(qf, qf)?;
    let afn = mixed_area(qf, qn)?;
    let an = mixed_area(qn, qn)?;
    let size = (0..4).map(|a| (qf[(a + 1) % 4] - qf[a]).norm()).fold(0.0, f64::max);
    let area = af.norm();
    if area <= 1e-14 * size * size || area == 0.0 {
        return Err(Error::ZeroArea);
    }
    let nhat = af / area;
    Ok(QuadCurvature { h: -afn.dot(&nhat) / area, k: an.dot(&nhat) / area, area_f: area, mixed: afn.dot(&nhat) })
}

/// `|H|` on every quad of `(F, N)`.
pub fn mean_curvature_report(f: &Net3, n: &Net3, tol: f64) -> Result<QuadReport> {
    if f.domain != n.domain {
        return Err(Error::DomainMismatch("net and Gauss map differ in domain".into()));
    }
    let mut res = Vec::new();
    for q in f.domain.quads() {
        let c = quad_curvatures(&f.quad_points(q), &n.quad_points(q))?;
        res.push((q, c.h.abs()));
    }
    Ok(QuadReport::from_residuals(res, tol))
}

/// Parallel net `F + tN`.
pub fn offset_net(f: &Net3, n: &Net3, t: f64) -> Result<Net3> {
    if f.domain != n.domain {
        return Err(Error::DomainMismatch("net and Gauss map differ in domain".into()));
    }
    Ok(f.map(|v, p| p + t * n.at(v)))
}
