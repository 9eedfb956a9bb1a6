//! Discrete holomorphic functions of cross-ratio type: validation,
//! propagation of the fourth vertex of a quad, and the discrete power function.

use crate::error::{Error, Result};
use crate::mobius::{cross_ratio_complex, unit_phase, CInf, Complex};
use crate::net::{EdgeLabels, LatticeDomain, Quad, QuadReport, Vertex};

/// A map `g : D → C ∪ {∞}` together with its edge labels.
#[derive(Clone, Debug, PartialEq)]
pub struct HoloGrid {
    pub domain: LatticeDomain,
    pub labels: EdgeLabels,
    values: Vec<CInf>,
}

impl HoloGrid {
    pub fn from_fn(domain: LatticeDomain, labels: EdgeLabels, mut f: impl FnMut(Vertex) -> CInf) -> Self {
        let values = (0..domain.len())
            .map(|s| {
                let v = domain.vertex_at(s);
                if domain.contains(v) {
                    f(v)
                } else {
                    CInf::new(0.0, 0.0)
                }
            })
            .collect();
        Self { domain, labels, values }
    }

    /// `g(m, n) = m + i n` with cross ratio −1.
    pub fn identity(domain: LatticeDomain) -> Self {
        let labels = EdgeLabels::square(&domain);
        Self::from_fn(domain, labels, |(m, n)| CInf::new(m as f64, n as f64))
    }

    pub fn at(&self, v: Vertex) -> CInf {
        assert!(self.domain.contains(v), "vertex {v:?} not in domain");
        self.values[self.domain.slot(v).unwrap()]
    }

    pub fn get(&self, v: Vertex) -> Option<CInf> {
        self.domain.contains(v).then(|| self.values[self.domain.slot(v).unwrap()])
    }

    pub fn set(&mut self, v: Vertex, g: CInf) {
        assert!(self.domain.contains(v), "vertex {v:?} not in domain");
        let s = self.domain.slot(v).unwrap();
        self.values[s] = g;
    }

    /// Finite value at a vertex; `PoleOnGrid` at ∞.
    pub fn finite_at(&self, (m, n): Vertex) -> Result<Complex> {
        self.at((m, n)).finite().ok_or(Error::PoleOnGrid { m, n })
    }

    pub fn quad_values(&self, q: Quad) -> [CInf; 4] {
        q.corners().map(|v| self.at(v))
    }

    pub fn map(&self, mut f: impl FnMut(Vertex, CInf) -> CInf) -> HoloGrid {
        HoloGrid::from_fn(self.domain.clone(), self.labels.clone(), |v| f(v, self.at(v)))
    }

    pub fn transposed(&self) -> HoloGrid {
        HoloGrid::from_fn(self.domain.transposed(), self.labels.transposed(), |(m, n)| self.at((n, m)))
    }
}

/// Residual `|cr(g_i, g_j, g_k, g_l) − α(m)/β(n)|` of one quad, relative to `max(1, |α/β|)`.
pub fn quad_residual(g: &HoloGrid, q: Quad) -> f64 {
    let [a, b, c, d] = g.quad_values(q);
    let target = g.labels.ratio(q);
    match cross_ratio_complex(a, b, c, d) {
        Ok(CInf::Finite(cr)) => (cr - target).norm() / target.abs().max(1.0),
        _ => f64::INFINITY,
    }
}

/// Per-quad cross-ratio check of a discrete holomorphic function. Coincident
/// neighbouring values count as failures.
pub fn validate_holomorphic(g: &HoloGrid, tol: f64) -> QuadReport {
    QuadReport::from_residuals(g.domain.quads().map(|q| (q, quad_residual(g, q))), tol)
}

/// The value `g3` with `cr(g1, g2, g3, g4) = q`.
///
/// Returns ∞ when `g3` is the pole of the Möbius map `g3 ↦ cr`.
pub fn propagate_fourth(g1: CInf, g2: CInf, g4: CInf, q: f64) -> Result<CInf> {
    if q == 0.0 || !q.is_finite() {
        return Err(Error::DegenerateQuad(format!("cross ratio {q} cannot be propagated")));
    }
    if g1.coincides(&g2) || g1.coincides(&g4) || g2.coincides(&g4) {
        return Err(Error::DegenerateQuad("coincident input values".into()));
    }
    let ratio = |num: Complex, den: Complex| {
        if den.norm_sqr() == 0.0 {
            CInf::Infinity
        } else {
            CInf::Finite(num / den)
        }
    };
    Ok(match (g1, g2, g4) {
        (CInf::Finite(a), CInf::Finite(b), CInf::Finite(d)) => {
            let big_a = a - b;
            let big_b = d - a;
            ratio(q * big_b * b + big_a * d, big_a + q * big_b)
        }
        (CInf::Finite(a), CInf::Infinity, CInf::Finite(d)) => CInf::Finite(d - q * (d - a)),
        (CInf::Finite(a), CInf::Finite(b), CInf::Infinity) => CInf::Finite(b + (a - b) / q),
        (CInf::Infinity, CInf::Finite(b), CInf::Finite(d)) => ratio(q * b - d, Complex::new(q - 1.0, 0.0)),
        _ => unreachable!("coincident infinities rejected above"),
    })
}

/// Fill every vertex `(m+1, n+1)` of a rectangle from `(m,n)`, `(m+1,n)`,
/// `(m,n+1)`, sweeping anti-diagonals in increasing `m + n` and then `m`.
/// Only the `m = m0` column and `n = n0` row of `g` are read.
pub fn propagate_interior(g: &mut HoloGrid) -> Result<()> {
    let d = g.domain.clone();
    if !d.mask.is_empty() {
        return Err(Error::InvalidGrid("interior propagation needs an unmasked rectangle".into()));
    }
    for s in (d.m0 + d.n0 + 2)..=(d.m1 + d.n1) {
        for m in (d.m0 + 1)..=d.m1 {
            let n = s - m;
            if n <= d.n0 || n > d.n1 {
                continue;
            }
            let q = g.labels.ratio(Quad::at(m - 1, n - 1));
            let v = propagate_fourth(g.at((m - 1, n - 1)), g.at((m, n - 1)), g.at((m - 1, n)), q)
                .map_err(|_| Error::PropagationBlowup { m, n })?;
            if v.is_infinite() || !v.finite().unwrap().is_finite() {
                return Err(Error::PropagationBlowup { m, n });
            }
            g.set((m, n), v);
        }
    }
    Ok(())
}

/// Radii `r_0 = 0, r_1 = 1, r_2, …, r_len` on an axis of the discrete `z^γ`.
fn axis_radii(gamma: f64, len: usize) -> Vec<f64> {
    let mut r = vec![0.0, 1.0];
    for m in 1..len {
        let (prev, cur) = (r[m - 1], r[m]);
        let d = cur - prev;
        let mf = m as f64;
        r.push(cur * (gamma * prev - 2.0 * mf * d) / (gamma * cur - 2.0 * mf * d));
    }
    r.truncate(len + 1);
    r
}

/// Discrete `z^γ` on `[0, M] × [0, N]` with cross ratio −1.
///
/// For `0 < γ < 2` the axes follow the radius recurrence with `g(1,0) = 1` and
/// `g(0,1) = e^{iγπ/2}`, and the interior is propagated. For `2 < γ < 4` the
/// origin is removed from the domain and the grid is the dual of `1/z^{γ−2}`,
/// normalised so that both neighbours of the origin map to 0.
pub fn power_function(gamma: f64, m_ext: i32, n_ext: i32) -> Result<HoloGrid> {
    if m_ext < 2 || n_ext < 2 {
        return Err(Error::InvalidGrid(format!("extents must be at least 2, got {m_ext} x {n_ext}")));
    }
    if !(gamma > 0.0 && gamma < 4.0) || gamma == 2.0 {
        return Err(Error::UnsupportedGamma(gamma));
    }
    if gamma > 2.0 {
        return power_function_dual(gamma, m_ext, n_ext);
    }
    let domain = LatticeDomain::rect(0, m_ext, 0, n_ext);
    let labels = EdgeLabels::square(&domain);
    let rm = axis_radii(gamma, m_ext as usize);
    let rn = axis_radii(gamma, n_ext as usize);
    let ray = unit_phase(gamma * std::f64::consts::FRAC_PI_2);
    let mut g = HoloGrid::from_fn(domain, labels, |(m, n)| match (m, n) {
        (m, 0) => CInf::new(rm[m as usize], 0.0),
        (0, n) => CInf::Finite(ray * rn[n as usize]),
        _ => CInf::new(0.0, 0.0),
    });
    propagate_interior(&mut g)?;
    Ok(g)
}

fn power_function_dual(gamma: f64, m_ext: i32, n_ext: i32) -> Result<HoloGrid> {
    let h = power_function(gamma - 2.0, m_ext, n_ext)?;
    let domain = LatticeDomain::rect(0, m_ext, 0, n_ext).with_mask([(0, 0)]);
    let labels = EdgeLabels::square(&domain);
    let p = HoloGrid::from_fn(domain.clone(), labels.clone(), |v| h.at(v).recip());
    let mut g = HoloGrid::from_fn(domain.clone(), labels, |_| CInf::new(0.0, 0.0));
    // dual increments dg = −a / dp along the spanning tree
    for (v, parent) in domain.spanning_tree() {
        let Some(u) = parent else { continue };
        let dp = p.finite_at(v)? - p.finite_at(u)?;
        if dp.norm() <= 1e-300 {
            return Err(Error::ZeroDg(u, v));
        }
        let a = g.labels.edge(u, v);
        let next = g.finite_at(u)? - a / dp;
        g.set(v, CInf::Finite(next));
    }
    Ok(g)
}

/// Gauss map of the Enneper surface of order `k`: `z^{2k/(k+1)}` on `[0, size]²`.
/// Order 1 is the identity.
pub fn enneper_grid(k: u32, size: i32) -> Result<HoloGrid> {
    if k == 0 {
        return Err(Error::UnsupportedGamma(0.0));
    }
    if k == 1 {
        if size < 2 {
            return Err(Error::InvalidGrid(format!("extents must be at least 2, got {size} x {size}")));
        }
        return Ok(HoloGrid::identity(LatticeDomain::rect(0, size, 0, size)));
    }
    power_function(2.0 * k as f64 / (k as f64 + 1.0), size, size)
}

/// Gauss map `z^3` of the planar Enneper surface on `[0, size]²` minus the origin.
pub fn planar_enneper_grid(size: i32) -> Result<HoloGrid> {
    power_function(3.0, size, size)
}

/// Möbius maps acting on grid values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MobiusMap {
    /// `z ↦ a z + b`, `a ≠ 0`.
    Similarity { a: Complex, b: Complex },
    /// `z ↦ 1/z`.
    Inversion,
}

impl MobiusMap {
    pub fn apply(&self, z: CInf) -> CInf {
        match (*self, z) {
            (MobiusMap::Similarity { .. }, CInf::Infinity) => CInf::Infinity,
            (MobiusMap::Similarity { a, b }, CInf::Finite(z)) => CInf::Finite(a * z + b),
            (MobiusMap::Inversion, z) => z.recip(),
        }
    }
}

/// Apply a Möbius map to every value; labels are kept.
pub fn mobius_apply(g: &HoloGrid, map: MobiusMap) -> Result<HoloGrid> {
    if let MobiusMap::Similarity { a, .. } = map {
        if a.norm() == 0.0 {
            return Err(Error::DegenerateQuad("similarity with zero factor".into()));
        }
    }
    let out = g.map(|_, z| map.apply(z));
    for q in out.domain.quads() {
        let [a, b, c, d] = out.quad_values(q);
        if cross_ratio_complex(a, b, c, d).is_err() {
            if let Some(&(m, n)) = q.corners().iter().find(|&&v| out.at(v).is_infinite()) {
                return Err(Error::PoleOnGrid { m, n });
            }
            return Err(Error::DegenerateQuad(format!("quad ({}, {}) collapses", q.m, q.n)));
        }
    }
    Ok(out)
}
