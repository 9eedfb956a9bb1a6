//! Boundary-value problems for discrete holomorphic functions with cross
//! ratio −1 whose Gauss image is a circular-arc triangle: the k-noids and the
//! surfaces with Platonic symmetry.
//!
//! The boundary of the `[0, m_max] × [0, n_max]` grid is mapped as follows:
//! the row `n = 0` runs along the real axis from 0 towards the end point `g_A`,
//! the column `m = 0` runs along the ray `arg g = θ0` from 0 to `g_B`, and the
//! row `n = n_max` runs along the circle through `g_B` and `g_A` towards `g_A`.
//! The column `m = m_max` is an open end.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::holomorphic::{propagate_fourth, propagate_interior, validate_holomorphic, HoloGrid};
use crate::minimal::MinimalPair;
use crate::mobius::{cross_ratio_complex, unit_phase, CInf, Complex, Isometry};
use crate::net::{EdgeLabels, LatticeDomain, Quad};
use crate::reflection::{analyze_boundary_isothermic, build_orbit, BoundaryLine, SymmetryOrbit};

/// Circular-arc triangle in the Gauss plane with corners 0, `g_B` and `g_A`
/// and interior angles `θ0`, `θ1`, `θ2` there. Its three sides are the
/// stereographic images of great circles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussTriangle {
    pub theta: [f64; 3],
    pub g_a: f64,
    pub g_b: Complex,
    pub center: Complex,
    pub radius: f64,
    /// Argument of `g_B − center`.
    pub phi_b: f64,
    /// Signed angle swept along the circle from `g_B` to `g_A`.
    pub sweep: f64,
}

impl GaussTriangle {
    /// Spherical triangle with angles `θ0` at 0, `θ1` at `g_B`, `θ2` at `g_A`.
    pub fn new(t0: f64, t1: f64, t2: f64) -> Result<Self> {
        let ok = |t: f64| t > 0.0 && t < PI;
        if !(ok(t0) && ok(t1) && ok(t2)) || t0 + t1 + t2 <= PI + 1e-12 {
            return Err(Error::InfeasibleSpec(format!("angles ({t0}, {t1}, {t2}) do not form a spherical triangle")));
        }
        // side lengths by the spherical law of cosines for angles
        let side = |opp: f64, a: f64, b: f64| ((opp.cos() + a.cos() * b.cos()) / (a.sin() * b.sin())).acos();
        let sa = side(t1, t0, t2);
        let sb = side(t2, t0, t1);
        if !(sa.is_finite() && sb.is_finite()) || sa >= PI || sb >= PI {
            return Err(Error::InfeasibleSpec("triangle does not fit in a hemisphere".into()));
        }
        let g_a = (sa / 2.0).tan();
        let g_b = unit_phase(t0) * (sb / 2.0).tan();
        // great circles through 0's antipode-free chart: |g|² − 2 Re(ḡ c) = 1
        let (ax, ay, bx, by) = (2.0 * g_a, 0.0, 2.0 * g_b.re, 2.0 * g_b.im);
        let (ra, rb) = (g_a * g_a - 1.0, g_b.norm_sqr() - 1.0);
        let det = ax * by - ay * bx;
        if det.abs() < 1e-14 {
            return Err(Error::InfeasibleSpec("degenerate Gauss triangle".into()));
        }
        let center = Complex::new((ra * by - ay * rb) / det, (ax * rb - ra * bx) / det);
        let radius = (1.0 + center.norm_sqr()).sqrt();
        let phi_b = (g_b - center).arg();
        let phi_a = (Complex::new(g_a, 0.0) - center).arg();
        let mut sweep = (phi_a - phi_b + PI).rem_euclid(2.0 * PI) - PI;
        let mid = center + unit_phase(phi_b + sweep / 2.0) * radius;
        if !(mid.arg() > 0.0 && mid.arg() < t0) {
            sweep -= 2.0 * PI * sweep.signum();
        }
        Ok(Self { theta: [t0, t1, t2], g_a, g_b, center, radius, phi_b, sweep })
    }

    /// The k-noid triangle: `θ0 = (k−1)π/k`, right angles elsewhere, on the unit circle.
    pub fn knoid(k: u32) -> Self {
        let t0 = (k as f64 - 1.0) * PI / k as f64;
        Self {
            theta: [t0, PI / 2.0, PI / 2.0],
            g_a: 1.0,
            g_b: unit_phase(t0),
            center: Complex::new(0.0, 0.0),
            radius: 1.0,
            phi_b: t0,
            sweep: -t0,
        }
    }

    /// Point at fraction `u ∈ [0, 1]` of the arc from `g_B` to `g_A`.
    pub fn arc_point(&self, u: f64) -> Complex {
        self.center + unit_phase(self.phi_b + self.sweep * u) * self.radius
    }

    /// Distance of `g` from the circle carrying the third side.
    pub fn circle_deviation(&self, g: Complex) -> f64 {
        ((g - self.center).norm() - self.radius).abs()
    }

    /// How far `g` lies outside the closed triangle (0 inside).
    pub fn containment(&self, g: Complex) -> f64 {
        let below = (-g.im).max(0.0);
        let beyond_ray = (g * unit_phase(-self.theta[0])).im.max(0.0);
        let inside_sign = if self.center.norm() < self.radius { 1.0 } else { -1.0 };
        let outside_arc = (inside_sign * ((g - self.center).norm() - self.radius)).max(0.0);
        below.max(beyond_ray).max(outside_arc)
    }
}

/// Symmetry presets, stated by the angles between the mirror planes at the
/// centre of a face, on an edge, and at an end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlatonicPreset {
    Tetrahedral,
    Octahedral,
}

impl PlatonicPreset {
    /// Mirror angles `(centre, edge, end)`.
    pub fn mirror_angles(&self) -> (f64, f64, f64) {
        match self {
            PlatonicPreset::Tetrahedral => (PI / 3.0, PI / 2.0, PI / 3.0),
            PlatonicPreset::Octahedral => (PI / 3.0, PI / 2.0, PI / 4.0),
        }
    }

    /// Gauss-triangle angles: the two corner angles are supplementary to the
    /// mirror angles, the end angle is kept.
    pub fn gauss_angles(&self) -> (f64, f64, f64) {
        let (c, e, end) = self.mirror_angles();
        (PI - c, PI - e, end)
    }

    pub fn group_order(&self) -> usize {
        match self {
            PlatonicPreset::Tetrahedral => 24,
            PlatonicPreset::Octahedral => 48,
        }
    }

    pub fn rotation_order(&self) -> usize {
        self.group_order() / 2
    }

    pub fn name(&self) -> &'static str {
        match self {
            PlatonicPreset::Tetrahedral => "tetrahedral",
            PlatonicPreset::Octahedral => "octahedral",
        }
    }
}

impl std::str::FromStr for PlatonicPreset {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "tetrahedral" => Ok(PlatonicPreset::Tetrahedral),
            "octahedral" => Ok(PlatonicPreset::Octahedral),
            _ => Err(format!("unknown preset {s:?}; expected tetrahedral or octahedral")),
        }
    }
}

/// Grid extents and the Gauss triangle a solution must fill.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub k: Option<u32>,
    pub preset: Option<PlatonicPreset>,
    pub n_max: usize,
    pub m_max: usize,
    pub triangle: GaussTriangle,
}

impl BoundarySpec {
    pub fn knoid(k: u32, n_max: usize, m_max: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::InfeasibleSpec(format!("k = {k}; need k >= 3")));
        }
        check_extents(n_max, m_max)?;
        Ok(Self { k: Some(k), preset: None, n_max, m_max, triangle: GaussTriangle::knoid(k) })
    }

    /// `n_max = resolution`, `m_max = ⌈10·resolution/3⌉`.
    pub fn platonic(preset: PlatonicPreset, resolution: usize) -> Result<Self> {
        let n_max = resolution;
        let m_max = (10 * resolution).div_ceil(3);
        if n_max == 0 || (m_max - 1) * (n_max - 1) <= 1 {
            return Err(Error::InfeasibleSpec(format!("resolution {resolution} leaves at most one interior vertex")));
        }
        let (t0, t1, t2) = preset.gauss_angles();
        Ok(Self { k: None, preset: Some(preset), n_max, m_max, triangle: GaussTriangle::new(t0, t1, t2)? })
    }

    pub fn domain(&self) -> LatticeDomain {
        LatticeDomain::rect(0, self.m_max as i32, 0, self.n_max as i32)
    }

    /// Number of boundary parameters: row, column and arc encodings.
    pub fn boundary_len(&self) -> usize {
        2 * self.m_max + self.n_max - 1
    }

    fn interior_len(&self) -> usize {
        2 * self.m_max * (self.n_max - 1)
    }

    fn with_triangle(&self, triangle: GaussTriangle) -> Self {
        Self { triangle, ..self.clone() }
    }
}

fn check_extents(n_max: usize, m_max: usize) -> Result<()> {
    if n_max < 1 {
        return Err(Error::InfeasibleSpec("n_max must be at least 1".into()));
    }
    if m_max < n_max {
        return Err(Error::InfeasibleSpec(format!("m_max = {m_max} is smaller than n_max = {n_max}")));
    }
    Ok(())
}

/// Strictly increasing `0 = u_0 < u_1 < … < u_len < 1` from unconstrained
/// `x`: `u_m = S_m / (1 + S_len)` with `S_m = Σ_{j<m} e^{x_j}`.
pub fn open_sequence(x: &[f64]) -> Vec<f64> {
    let w: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    let total: f64 = w.iter().sum();
    let mut out = Vec::with_capacity(x.len() + 1);
    let mut s = 0.0;
    out.push(0.0);
    for wi in &w {
        s += wi;
        out.push(s / (1.0 + total));
    }
    out
}

/// Strictly increasing `0 = u_0 < … < u_{len+1} = 1`; the last weight is 1.
pub fn closed_sequence(x: &[f64]) -> Vec<f64> {
    let w: Vec<f64> = x.iter().map(|v| v.exp()).chain(std::iter::once(1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut out = Vec::with_capacity(w.len() + 1);
    let mut s = 0.0;
    out.push(0.0);
    for (j, wi) in w.iter().enumerate() {
        s += wi;
        out.push(if j + 1 == w.len() { 1.0 } else { s / total });
    }
    out
}

/// Inverse of [`open_sequence`] for `0 = u_0 < … < u_len < 1`.
pub fn encode_open(u: &[f64]) -> Vec<f64> {
    let last = *u.last().unwrap();
    u.windows(2).map(|w| (w[1] - w[0]).ln() - (1.0 - last).ln()).collect()
}

/// Inverse of [`closed_sequence`] for `0 = u_0 < … < u_last = 1`.
pub fn encode_closed(u: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = u.windows(2).map(|w| w[1] - w[0]).collect();
    let last = *d.last().unwrap();
    d[..d.len() - 1].iter().map(|di| di.ln() - last.ln()).collect()
}

/// Boundary values of the grid from the boundary parameters.
struct Boundary {
    row: Vec<Complex>,
    column: Vec<Complex>,
    arc: Vec<Complex>,
}

fn decode_boundary(spec: &BoundarySpec, x: &[f64]) -> Boundary {
    let (m, n) = (spec.m_max, spec.n_max);
    let t = &spec.triangle;
    let row = open_sequence(&x[..m]).into_iter().map(|u| Complex::new(t.g_a * u, 0.0)).collect();
    let ray = unit_phase(t.theta[0]);
    let column = closed_sequence(&x[m..m + n - 1])
        .into_iter()
        .enumerate()
        .map(|(j, u)| if j == n { t.g_b } else { ray * (t.g_b.norm() * u) })
        .collect();
    let arc = open_sequence(&x[m + n - 1..2 * m + n - 1])
        .into_iter()
        .enumerate()
        .map(|(j, u)| if j == 0 { t.g_b } else { t.arc_point(u) })
        .collect();
    Boundary { row, column, arc }
}

fn empty_grid(spec: &BoundarySpec) -> HoloGrid {
    let d = spec.domain();
    let labels = EdgeLabels::square(&d);
    HoloGrid::from_fn(d, labels, |_| CInf::new(0.0, 0.0))
}

fn set_boundary(g: &mut HoloGrid, b: &Boundary, n_max: usize) {
    for (m, v) in b.row.iter().enumerate() {
        g.set((m as i32, 0), CInf::Finite(*v));
    }
    for (n, v) in b.column.iter().enumerate() {
        g.set((0, n as i32), CInf::Finite(*v));
    }
    for (m, v) in b.arc.iter().enumerate() {
        g.set((m as i32, n_max as i32), CInf::Finite(*v));
    }
}

/// Grid whose rows `1..n_max−1` are propagated from the row `n = 0` and the
/// column `m = 0`, with the top row on the arc.
pub fn shooting_grid(spec: &BoundarySpec, x: &[f64]) -> Result<HoloGrid> {
    if x.len() != spec.boundary_len() {
        return Err(Error::InvalidGrid(format!("expected {} parameters, got {}", spec.boundary_len(), x.len())));
    }
    let b = decode_boundary(spec, x);
    let mut g = empty_grid(spec);
    set_boundary(&mut g, &b, spec.n_max);
    if spec.n_max > 1 {
        let lower = LatticeDomain::rect(0, spec.m_max as i32, 0, spec.n_max as i32 - 1);
        let labels = EdgeLabels::square(&lower);
        let mut part = HoloGrid::from_fn(lower, labels, |v| g.at(v));
        propagate_interior(&mut part)?;
        for v in part.domain.vertices() {
            g.set(v, part.at(v));
        }
    }
    Ok(g)
}

fn cr_deviation(g: &HoloGrid, q: Quad) -> (f64, f64) {
    let [a, b, c, d] = g.quad_values(q);
    match cross_ratio_complex(a, b, c, d) {
        Ok(CInf::Finite(cr)) => (cr.re + 1.0, cr.im),
        _ => (1e6, 1e6),
    }
}

/// Shooting residual: cross-ratio deviations on the top strip, the distance
/// of the propagated top row from the arc circle, and containment penalties.
pub fn knoid_residual(x: &[f64], spec: &BoundarySpec) -> Result<Vec<f64>> {
    let g = shooting_grid(spec, x)?;
    let top = spec.n_max as i32;
    let mut out = Vec::with_capacity(3 * spec.m_max + g.domain.len());
    for m in 0..spec.m_max as i32 {
        let (re, im) = cr_deviation(&g, Quad::at(m, top - 1));
        out.push(re);
        out.push(im);
    }
    for m in 0..spec.m_max as i32 {
        let p = propagate_fourth(g.at((m, top - 1)), g.at((m + 1, top - 1)), g.at((m, top)), -1.0)
            .map_err(|_| Error::PropagationBlowup { m: m + 1, n: top })?;
        out.push(match p {
            CInf::Finite(z) => spec.triangle.circle_deviation(z),
            CInf::Infinity => 1e6,
        });
    }
    for v in g.domain.vertices() {
        out.push(spec.triangle.containment(g.finite_at(v)?));
    }
    Ok(out)
}

/// Collocation residual: every quad, with boundary and interior values as unknowns.
fn collocation_grid(spec: &BoundarySpec, x: &[f64]) -> HoloGrid {
    let nb = spec.boundary_len();
    let b = decode_boundary(spec, &x[..nb]);
    let mut g = empty_grid(spec);
    set_boundary(&mut g, &b, spec.n_max);
    let inner = spec.m_max * (spec.n_max - 1);
    for n in 1..spec.n_max {
        for m in 1..=spec.m_max {
            let i = (m - 1) * (spec.n_max - 1) + (n - 1);
            g.set((m as i32, n as i32), CInf::new(x[nb + i], x[nb + inner + i]));
        }
    }
    g
}

fn collocation_residual(spec: &BoundarySpec, x: &[f64]) -> Vec<f64> {
    let g = collocation_grid(spec, x);
    let mut out = Vec::with_capacity(2 * spec.m_max * spec.n_max);
    for q in g.domain.quads() {
        let (re, im) = cr_deviation(&g, q);
        out.push(re);
        out.push(im);
    }
    out
}

/// Outcome of a damped least-squares run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Levenberg–Marquardt on `r(x)` with central-difference Jacobians, columns
/// evaluated in parallel. Stops when `max |r| ≤ tol`, after `max_iter` trial
/// steps, or when the damping exceeds 1e16. A residual that cannot be
/// evaluated rejects the step.
pub fn levenberg_marquardt<F>(f: F, x0: &[f64], tol: f64, max_iter: usize) -> LmOutcome
where
    F: Fn(&[f64]) -> Option<Vec<f64>> + Sync,
{
    let max_abs = |r: &[f64]| r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let sq = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let mut x = x0.to_vec();
    let Some(mut r) = f(&x) else {
        return LmOutcome { x, residual: f64::INFINITY, iterations: 0, converged: false };
    };
    let mut cost = sq(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let p = x.len();
    while max_abs(&r) > tol && iterations < max_iter && lambda < 1e16 {
        let cols: Vec<Option<Vec<f64>>> = (0..p)
            .into_par_iter()
            .map(|j| {
                let h = 6e-6 * x[j].abs().max(1.0);
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let (rp, rm) = (f(&xp)?, f(&xm)?);
                Some(rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
            })
            .collect();
        let Some(cols) = cols.into_iter().collect::<Option<Vec<_>>>() else { break };
        let jac = DMatrix::from_fn(r.len(), p, |i, j| cols[j][i]);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * DVector::from_column_slice(&r);
        let scale = jtj.diagonal().max().max(f64::MIN_POSITIVE);
        loop {
            iterations += 1;
            let mut a = jtj.clone();
            for j in 0..p {
                a[(j, j)] += lambda * (jtj[(j, j)] + 1e-9 * scale);
            }
            let step = a.cholesky().map(|c| c.solve(&(-&grad)));
            let trial = step.and_then(|s| {
                let xn: Vec<f64> = x.iter().zip(s.iter()).map(|(a, b)| a + b).collect();
                let rn = f(&xn)?;
                let cn = sq(&rn);
                cn.is_finite().then_some((xn, rn, cn))
            });
            match trial {
                Some((xn, rn, cn)) if cn < cost => {
                    x = xn;
                    r = rn;
                    cost = cn;
                    lambda = (lambda * 0.5).max(1e-15);
                    break;
                }
                _ => {
                    lambda *= 4.0;
                    if lambda >= 1e16 || iterations >= max_iter {
                        break;
                    }
                }
            }
        }
    }
    let residual = max_abs(&r);
    LmOutcome { converged: residual <= tol, x, residual, iterations }
}

/// Solution of a boundary-value problem together with its residuals.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub spec: BoundarySpec,
    pub grid: HoloGrid,
    /// Boundary parameters of the shooting formulation.
    pub params: Vec<f64>,
    pub cross_ratio_residual: f64,
    pub boundary_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest violation of the boundary conditions by a grid: corner values,
/// the row on the real axis, the column on the ray, the top row on the arc,
/// the three sequences strictly monotone, and every value inside the triangle.
pub fn boundary_residual(spec: &BoundarySpec, g: &HoloGrid) -> f64 {
    let t = &spec.triangle;
    let (mm, nn) = (spec.m_max as i32, spec.n_max as i32);
    let val = |v| g.finite_at(v).unwrap_or(Complex::new(f64::NAN, f64::NAN));
    let mut worst = val((0, 0)).norm().max((val((0, nn)) - t.g_b).norm());
    let ray = unit_phase(-t.theta[0]);
    let mut prev = -1.0;
    for m in 0..=mm {
        let z = val((m, 0));
        worst = worst.max(z.im.abs());
        if z.re <= prev || z.re >= t.g_a {
            return f64::INFINITY;
        }
        prev = z.re;
    }
    prev = -1.0;
    for n in 0..=nn {
        let z = val((0, n)) * ray;
        worst = worst.max(z.im.abs());
        if z.re <= prev {
            return f64::INFINITY;
        }
        prev = z.re;
    }
    let mut prev_phase = f64::NAN;
    for m in 0..=mm {
        let z = val((m, nn));
        worst = worst.max(t.circle_deviation(z));
        let phase = (z - t.center).arg();
        let progress = ((phase - t.phi_b + PI).rem_euclid(2.0 * PI) - PI) / t.sweep;
        if !(progress < 1.0) || (m > 0 && !(progress > prev_phase)) {
            return f64::INFINITY;
        }
        prev_phase = progress;
    }
    for v in g.domain.vertices() {
        worst = worst.max(t.containment(val(v)));
    }
    if worst.is_nan() {
        f64::INFINITY
    } else {
        worst
    }
}

fn tanh_power(w: Complex, p: f64) -> Complex {
    let t = w.tanh();
    if t.norm() == 0.0 {
        Complex::new(0.0, 0.0)
    } else {
        t.powf(p)
    }
}

/// Collocation start vector from the smooth data `g(w) = (tanh w)^{2θ0/π}`
/// sampled on the uniform grid `w = (m + i n)π/(4 n_max)`.
pub fn smooth_seed(spec: &BoundarySpec) -> Vec<f64> {
    let (mm, nn) = (spec.m_max, spec.n_max);
    let t = &spec.triangle;
    let p = 2.0 * t.theta[0] / PI;
    let h = PI / (4.0 * nn as f64);
    let row: Vec<f64> = (0..=mm).map(|m| tanh_power(Complex::new(m as f64 * h, 0.0), p).re).collect();
    let radii: Vec<f64> = (0..=nn).map(|n| (n as f64 * h).tan().powf(p)).collect();
    let radii: Vec<f64> = radii.iter().map(|r| r / radii[nn]).collect();
    let arc: Vec<f64> = (0..=mm)
        .map(|m| 1.0 - Complex::new(m as f64 * h, PI / 4.0).tanh().arg() / (PI / 2.0))
        .collect();
    let mut x = encode_open(&row);
    x.extend(encode_closed(&radii));
    x.extend(encode_open(&arc));
    let scale = t.g_a;
    let mut re = Vec::new();
    let mut im = Vec::new();
    for m in 1..=mm {
        for n in 1..nn {
            let z = tanh_power(Complex::new(m as f64 * h, n as f64 * h), p) * scale;
            re.push(z.re);
            im.push(z.im);
        }
    }
    x.extend(re);
    x.extend(im);
    x
}

/// Extend boundary parameters to a collocation vector with the propagated interior.
fn collocation_from_boundary(spec: &BoundarySpec, xb: &[f64]) -> Result<Vec<f64>> {
    let g = shooting_grid(spec, xb)?;
    let mut x = xb.to_vec();
    let mut re = Vec::new();
    let mut im = Vec::new();
    for m in 1..=spec.m_max as i32 {
        for n in 1..spec.n_max as i32 {
            let z = g.finite_at((m, n))?;
            re.push(z.re);
            im.push(z.im);
        }
    }
    x.extend(re);
    x.extend(im);
    Ok(x)
}

/// Options shared by the solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Target for the largest cross-ratio deviation.
    pub tol: f64,
    /// Trial-step budget of each least-squares run.
    pub max_iter: usize,
    /// Start vector: boundary parameters, or boundary parameters followed by
    /// the interior values of the collocation formulation.
    pub seed: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 500, seed: None }
    }
}

fn collocate(spec: &BoundarySpec, x0: &[f64], tol: f64, max_iter: usize) -> LmOutcome {
    let nb = spec.boundary_len();
    let interior = spec.interior_len();
    debug_assert_eq!(x0.len(), nb + interior);
    levenberg_marquardt(|x| Some(collocation_residual(spec, x)), x0, tol, max_iter)
}

fn finish(spec: &BoundarySpec, xb: Vec<f64>, tol: f64, max_iter: usize, spent: usize) -> Result<SolveResult> {
    let shoot = levenberg_marquardt(|x| knoid_residual(x, spec).ok(), &xb, tol, max_iter.saturating_sub(spent).max(1));
    let iterations = spent + shoot.iterations;
    let grid = shooting_grid(spec, &shoot.x)?;
    let cross_ratio_residual = validate_holomorphic(&grid, tol).max_residual;
    let boundary = boundary_residual(spec, &grid);
    let converged = cross_ratio_residual <= tol && boundary <= tol;
    let result = SolveResult {
        spec: spec.clone(),
        grid,
        params: shoot.x,
        cross_ratio_residual,
        boundary_residual: boundary,
        iterations,
        converged,
    };
    if converged {
        Ok(result)
    } else {
        Err(Error::NoConvergence { iterations, residual: cross_ratio_residual.max(boundary), best: Box::new(result) })
    }
}

fn start_vector(spec: &BoundarySpec, opts: &SolveOptions) -> Result<Vec<f64>> {
    let nb = spec.boundary_len();
    match &opts.seed {
        None => Ok(smooth_seed(spec)),
        Some(s) if s.len() == nb => collocation_from_boundary(spec, s),
        Some(s) if s.len() == nb + spec.interior_len() => Ok(s.clone()),
        Some(s) => Err(Error::InvalidGrid(format!(
            "seed has {} entries; expected {nb} or {}",
            s.len(),
            nb + spec.interior_len()
        ))),
    }
}

/// Solve for a grid with cross ratio −1 filling the Gauss triangle of `spec`.
///
/// A collocation run over all grid values finds the solution from the smooth
/// seed; the shooting formulation then refines the boundary parameters so the
/// returned interior is obtained by propagation alone.
pub fn solve(spec: &BoundarySpec, opts: &SolveOptions) -> Result<SolveResult> {
    check_extents(spec.n_max, spec.m_max)?;
    let x0 = start_vector(spec, opts)?;
    let warm = collocate(spec, &x0, opts.tol, opts.max_iter);
    finish(spec, warm.x[..spec.boundary_len()].to_vec(), opts.tol, opts.max_iter, warm.iterations)
}

pub fn solve_knoid(k: u32, n_max: usize, m_max: usize, opts: &SolveOptions) -> Result<SolveResult> {
    solve(&BoundarySpec::knoid(k, n_max, m_max)?, opts)
}

/// Continuation from the trinoid triangle, where the end angle is π/2, to the
/// preset's end angle with adaptive steps.
pub fn solve_platonic(preset: PlatonicPreset, resolution: usize, opts: &SolveOptions) -> Result<SolveResult> {
    let target = BoundarySpec::platonic(preset, resolution)?;
    let (t0, t1, t2) = preset.gauss_angles();
    let start = GaussTriangle::new(t0, t1, PI / 2.0)?;
    let mut x = match &opts.seed {
        Some(_) => start_vector(&target, opts)?,
        None => smooth_seed(&target.with_triangle(start.clone())),
    };
    let mut spent = 0;
    if opts.seed.is_none() {
        let out = collocate(&target.with_triangle(start), &x, opts.tol, opts.max_iter);
        spent += out.iterations;
        x = out.x;
        let (mut s, mut ds) = (0.0f64, 1.0 / 16.0);
        while s < 1.0 {
            if spent >= opts.max_iter * 20 || ds < 1e-4 {
                return Err(Error::NoConvergence {
                    iterations: spent,
                    residual: f64::INFINITY,
                    best: Box::new(partial_result(&target, &x, spent)),
                });
            }
            let s2 = (s + ds).min(1.0);
            let tri = GaussTriangle::new(t0, t1, PI / 2.0 + (t2 - PI / 2.0) * s2)?;
            let out = collocate(&target.with_triangle(tri), &x, 1e-10_f64.max(opts.tol), opts.max_iter);
            spent += out.iterations;
            if out.converged {
                x = out.x;
                s = s2;
                ds = (ds * 1.5).min(0.25);
            } else {
                ds /= 2.0;
            }
        }
    }
    let out = collocate(&target, &x, opts.tol, opts.max_iter);
    spent += out.iterations;
    finish(&target, out.x[..target.boundary_len()].to_vec(), opts.tol, opts.max_iter + spent, spent)
}

/// The surface of a solution and the reflections in the planes of its
/// three planar boundary curves: the rows `n = 0`, `n = n_max` and the
/// column `m = 0`.
pub fn symmetry_generators(res: &SolveResult, tol: f64) -> Result<(MinimalPair, Vec<Isometry>)> {
    let pair = MinimalPair::from_grid(&res.grid)?;
    let lines = [BoundaryLine::Row(0), BoundaryLine::Column(0), BoundaryLine::Row(res.spec.n_max as i32)];
    let mut gens = Vec::with_capacity(3);
    for line in lines {
        let a = analyze_boundary_isothermic(&pair.f, &pair.normals, line, tol);
        let plane = a
            .plane()
            .ok_or_else(|| Error::NotPlanarBoundary(format!("{line:?}: residual {:e}", a.congruence_residual)))?;
        gens.push(Isometry::reflection(plane));
    }
    Ok((pair, gens))
}

/// Copies of the solved piece under the group generated by its boundary reflections.
pub fn assemble_orbit(res: &SolveResult, tol: f64) -> Result<SymmetryOrbit> {
    let (pair, gens) = symmetry_generators(res, tol)?;
    build_orbit(&pair.f, &gens, 64)
}

fn partial_result(spec: &BoundarySpec, x: &[f64], iterations: usize) -> SolveResult {
    let grid = collocation_grid(spec, x);
    SolveResult {
        spec: spec.clone(),
        cross_ratio_residual: validate_holomorphic(&grid, 0.0).max_residual,
        boundary_residual: boundary_residual(spec, &grid),
        grid,
        params: x[..spec.boundary_len()].to_vec(),
        iterations,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn knoid_triangle_matches_general_construction() {
        for k in 3..=6 {
            let exact = GaussTriangle::knoid(k);
            let t0 = (k as f64 - 1.0) * PI / k as f64;
            let general = GaussTriangle::new(t0, PI / 2.0, PI / 2.0).unwrap();
            assert_relative_eq!(general.g_a, 1.0, epsilon = 1e-12);
            assert!((general.g_b - exact.g_b).norm() < 1e-12);
            assert!(general.center.norm() < 1e-12);
            assert_relative_eq!(general.radius, 1.0, epsilon = 1e-12);
            assert!((general.arc_point(0.5) - exact.arc_point(0.5)).norm() < 1e-12);
        }
    }

    #[test]
    fn platonic_triangles() {
        for preset in [PlatonicPreset::Tetrahedral, PlatonicPreset::Octahedral] {
            let (t0, t1, t2) = preset.gauss_angles();
            let t = GaussTriangle::new(t0, t1, t2).unwrap();
            // the arc passes through both corners and is orthogonal to the
            // unit circle's antipodal pairs: |c|² + 1 = R²
            assert!(t.circle_deviation(Complex::new(t.g_a, 0.0)) < 1e-12);
            assert!(t.circle_deviation(t.g_b) < 1e-12);
            assert_relative_eq!(t.radius * t.radius, 1.0 + t.center.norm_sqr(), epsilon = 1e-12);
            // angle at g_A between the real axis and the arc
            let tangent = Complex::new(0.0, 1.0) * (Complex::new(t.g_a, 0.0) - t.center);
            let angle = tangent.arg().abs();
            let angle = angle.min(PI - angle);
            assert_relative_eq!(angle, t2.min(PI - t2), epsilon = 1e-12);
            assert!(t.containment(t.arc_point(0.5) * 0.99) == 0.0);
        }
    }

    #[test]
    fn infeasible_triangles() {
        assert!(matches!(GaussTriangle::new(0.5, 0.5, 0.5), Err(Error::InfeasibleSpec(_))));
        assert!(matches!(BoundarySpec::knoid(2, 3, 10), Err(Error::InfeasibleSpec(_))));
        assert!(matches!(BoundarySpec::knoid(3, 3, 1), Err(Error::InfeasibleSpec(_))));
        assert!(matches!(BoundarySpec::platonic(PlatonicPreset::Tetrahedral, 1), Err(Error::InfeasibleSpec(_))));
        assert!(BoundarySpec::platonic(PlatonicPreset::Tetrahedral, 2).is_ok());
    }

    #[test]
    fn encodings_round_trip() {
        let u = vec![0.0, 0.1, 0.35, 0.5, 0.9];
        let back = open_sequence(&encode_open(&u));
        for (a, b) in u.iter().zip(&back) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
        let u = vec![0.0, 0.2, 0.7, 1.0];
        let back = closed_sequence(&encode_closed(&u));
        for (a, b) in u.iter().zip(&back) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn lm_solves_rosenbrock() {
        let f = |x: &[f64]| Some(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]);
        let out = levenberg_marquardt(f, &[-1.2, 1.0], 1e-12, 500);
        assert!(out.converged, "{out:?}");
        assert_relative_eq!(out.x[0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(out.x[1], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn small_knoid_residual_decreases() {
        let spec = BoundarySpec::knoid(3, 1, 4).unwrap();
        let x0 = smooth_seed(&spec);
        let r0: f64 = knoid_residual(&x0, &spec).unwrap().iter().map(|v| v * v).sum();
        let out = levenberg_marquardt(|x| knoid_residual(x, &spec).ok(), &x0, 1e-12, 5);
        let r1: f64 = knoid_residual(&out.x, &spec).unwrap().iter().map(|v| v * v).sum();
        assert!(r1 < r0, "{r0} -> {r1}");
    }

    #[test]
    fn trinoid_converges() {
        let res = solve_knoid(3, 3, 10, &SolveOptions::default()).unwrap();
        assert!(res.converged);
        assert!(res.cross_ratio_residual <= 1e-10);
        assert!(res.boundary_residual <= 1e-10);
        for m in 0..=10 {
            assert!((res.grid.finite_at((m, 3)).unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }
}
