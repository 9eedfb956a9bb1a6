//! Nets on masked rectangular subsets of Z², their edge labels, and the
//! per-quad circularity, isothermicity and parallelity predicates.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobius::{cross_ratio_quat, fit_plane, point_scale, Vec3};

pub type Vertex = (i32, i32);

/// Default tolerance for the geometric predicates.
pub const DEFAULT_TOL: f64 = 1e-9;

/// The vertices `[m0, m1] × [n0, n1]` of Z² minus a mask.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeDomain {
    pub m0: i32,
    pub m1: i32,
    pub n0: i32,
    pub n1: i32,
    pub mask: BTreeSet<Vertex>,
}

impl LatticeDomain {
    pub fn rect(m0: i32, m1: i32, n0: i32, n1: i32) -> Self {
        assert!(m0 <= m1 && n0 <= n1, "empty lattice range");
        Self { m0, m1, n0, n1, mask: BTreeSet::new() }
    }

    pub fn with_mask(mut self, vertices: impl IntoIterator<Item = Vertex>) -> Self {
        self.mask.extend(vertices);
        self
    }

    pub fn width(&self) -> usize {
        (self.m1 - self.m0 + 1) as usize
    }

    pub fn height(&self) -> usize {
        (self.n1 - self.n0 + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.width() * self.height()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn in_range(&self, (m, n): Vertex) -> bool {
        (self.m0..=self.m1).contains(&m) && (self.n0..=self.n1).contains(&n)
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.in_range(v) && !self.mask.contains(&v)
    }

    /// Dense storage index of an in-range vertex (masked or not).
    pub fn slot(&self, (m, n): Vertex) -> Option<usize> {
        if !self.in_range((m, n)) {
            return None;
        }
        Some(((m - self.m0) as usize) * self.height() + (n - self.n0) as usize)
    }

    /// Inverse of [`slot`](Self::slot).
    pub fn vertex_at(&self, slot: usize) -> Vertex {
        let h = self.height();
        (self.m0 + (slot / h) as i32, self.n0 + (slot % h) as i32)
    }

    /// Present vertices in m-major, then n order.
    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (self.m0..=self.m1).flat_map(move |m| (self.n0..=self.n1).map(move |n| (m, n))).filter(|v| !self.mask.contains(v))
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices().count()
    }

    pub fn has_quad(&self, (m, n): Vertex) -> bool {
        Quad::at(m, n).corners().iter().all(|&v| self.contains(v))
    }

    /// Elementary quads `(m, n)` with all four corners present, m-major order.
    pub fn quads(&self) -> impl Iterator<Item = Quad> + '_ {
        (self.m0..self.m1)
            .flat_map(move |m| (self.n0..self.n1).map(move |n| Quad::at(m, n)))
            .filter(|q| self.has_quad((q.m, q.n)))
    }

    pub fn quad_count(&self) -> usize {
        self.quads().count()
    }

    /// Present neighbours of a vertex along lattice edges.
    pub fn neighbors(&self, (m, n): Vertex) -> impl Iterator<Item = Vertex> + '_ {
        [(m + 1, n), (m - 1, n), (m, n + 1), (m, n - 1)].into_iter().filter(|&v| self.contains(v))
    }

    /// Edges `(a, b)` with `b = a + e_1` or `b = a + e_2`.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.vertices().flat_map(move |(m, n)| {
            [(m + 1, n), (m, n + 1)].into_iter().filter(|&w| self.contains(w)).map(move |w| ((m, n), w))
        })
    }

    /// Lexicographically smallest present vertex.
    pub fn root(&self) -> Option<Vertex> {
        self.vertices().next()
    }

    /// Breadth-first spanning tree from the root: `(vertex, parent)` in visit order.
    pub fn spanning_tree(&self) -> Vec<(Vertex, Option<Vertex>)> {
        let Some(root) = self.root() else { return Vec::new() };
        let mut seen = BTreeSet::from([root]);
        let mut order = vec![(root, None)];
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for w in self.neighbors(v) {
                if seen.insert(w) {
                    order.push((w, Some(v)));
                    queue.push_back(w);
                }
            }
        }
        order
    }

    pub fn is_connected(&self) -> bool {
        self.spanning_tree().len() == self.vertex_count()
    }

    /// Swap the roles of m and n.
    pub fn transposed(&self) -> Self {
        Self {
            m0: self.n0,
            m1: self.n1,
            n0: self.m0,
            n1: self.m1,
            mask: self.mask.iter().map(|&(m, n)| (n, m)).collect(),
        }
    }
}

/// Elementary quadrilateral `(ijkl) = ((m,n), (m+1,n), (m+1,n+1), (m,n+1))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Quad {
    pub m: i32,
    pub n: i32,
}

impl Quad {
    pub fn at(m: i32, n: i32) -> Self {
        Self { m, n }
    }

    pub fn corners(&self) -> [Vertex; 4] {
        let (m, n) = (self.m, self.n);
        [(m, n), (m + 1, n), (m + 1, n + 1), (m, n + 1)]
    }
}

/// A net `F : D → R³`.
#[derive(Clone, Debug, PartialEq)]
pub struct Net3 {
    pub domain: LatticeDomain,
    positions: Vec<Vec3>,
}

impl Net3 {
    /// Net with every present vertex evaluated by `f`; masked slots hold zero.
    pub fn from_fn(domain: LatticeDomain, mut f: impl FnMut(Vertex) -> Vec3) -> Self {
        let positions = (0..domain.len())
            .map(|s| {
                let v = domain.vertex_at(s);
                if domain.contains(v) {
                    f(v)
                } else {
                    Vec3::zeros()
                }
            })
            .collect();
        Self { domain, positions }
    }

    pub fn zeros(domain: LatticeDomain) -> Self {
        let len = domain.len();
        Self { domain, positions: vec![Vec3::zeros(); len] }
    }

    /// Position of a present vertex.
    ///
    /// Panics if the vertex is outside the domain or masked.
    pub fn at(&self, v: Vertex) -> Vec3 {
        assert!(self.domain.contains(v), "vertex {v:?} not in domain");
        self.positions[self.domain.slot(v).unwrap()]
    }

    pub fn get(&self, v: Vertex) -> Option<Vec3> {
        self.domain.contains(v).then(|| self.positions[self.domain.slot(v).unwrap()])
    }

    pub fn set(&mut self, v: Vertex, p: Vec3) {
        assert!(self.domain.contains(v), "vertex {v:?} not in domain");
        let s = self.domain.slot(v).unwrap();
        self.positions[s] = p;
    }

    pub fn quad_points(&self, q: Quad) -> [Vec3; 4] {
        q.corners().map(|v| self.at(v))
    }

    pub fn points(&self) -> Vec<Vec3> {
        self.domain.vertices().map(|v| self.at(v)).collect()
    }

    /// Largest distance of any vertex from the centroid.
    pub fn scale(&self) -> f64 {
        point_scale(&self.points())
    }

    pub fn map(&self, mut f: impl FnMut(Vertex, Vec3) -> Vec3) -> Net3 {
        Net3::from_fn(self.domain.clone(), |v| f(v, self.at(v)))
    }

    pub fn transposed(&self) -> Net3 {
        Net3::from_fn(self.domain.transposed(), |(m, n)| self.at((n, m)))
    }

    /// All positions finite and all edges longer than 1e-12.
    pub fn check_immersed(&self) -> Result<()> {
        for v in self.domain.vertices() {
            let p = self.at(v);
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidGrid(format!("non-finite position at {v:?}")));
            }
        }
        for (a, b) in self.domain.edges() {
            if (self.at(b) - self.at(a)).norm() <= 1e-12 {
                return Err(Error::InvalidGrid(format!("degenerate edge {a:?}-{b:?}")));
            }
        }
        Ok(())
    }
}

/// Cross-ratio factorizing functions stored per column / row: `alpha[m]` labels
/// the edges `(m,n)–(m+1,n)`, `beta[n]` the edges `(m,n)–(m,n+1)`. Storing them
/// this way makes `a_ij = a_lk` and `a_il = a_jk` hold on every quad.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeLabels {
    pub m0: i32,
    pub n0: i32,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl EdgeLabels {
    /// Constant labels covering a domain.
    pub fn constant(domain: &LatticeDomain, alpha: f64, beta: f64) -> Self {
        Self {
            m0: domain.m0,
            n0: domain.n0,
            alpha: vec![alpha; domain.width().saturating_sub(1)],
            beta: vec![beta; domain.height().saturating_sub(1)],
        }
    }

    /// `α ≡ 1, β ≡ −1`, i.e. cross ratio −1 on every quad.
    pub fn square(domain: &LatticeDomain) -> Self {
        Self::constant(domain, 1.0, -1.0)
    }

    pub fn alpha(&self, m: i32) -> f64 {
        self.alpha[(m - self.m0) as usize]
    }

    pub fn beta(&self, n: i32) -> f64 {
        self.beta[(n - self.n0) as usize]
    }

    /// Label of the edge `a → b` (either orientation).
    pub fn edge(&self, a: Vertex, b: Vertex) -> f64 {
        if a.1 == b.1 {
            self.alpha(a.0.min(b.0))
        } else {
            self.beta(a.1.min(b.1))
        }
    }

    /// `a_ij / a_il` on a quad.
    pub fn ratio(&self, q: Quad) -> f64 {
        self.alpha(q.m) / self.beta(q.n)
    }

    pub fn covers(&self, domain: &LatticeDomain) -> bool {
        self.m0 <= domain.m0
            && self.n0 <= domain.n0
            && (domain.m1 - self.m0) as usize <= self.alpha.len()
            && (domain.n1 - self.n0) as usize <= self.beta.len()
    }

    /// Every quad ratio is negative.
    pub fn is_admissible(&self, domain: &LatticeDomain) -> bool {
        domain.quads().all(|q| self.ratio(q) < 0.0)
    }

    /// Labels of the transposed net. The transposed quad has cross ratio
    /// `1/cr`, so the label sequences swap (with signs kept in the α > 0 convention).
    pub fn transposed(&self) -> Self {
        Self {
            m0: self.n0,
            n0: self.m0,
            alpha: self.beta.iter().map(|b| -b).collect(),
            beta: self.alpha.iter().map(|a| -a).collect(),
        }
    }
}

/// Circularity of one quad: coplanarity distance and circumradius spread,
/// both relative to the longest edge.
pub fn circularity_residual(points: &[Vec3; 4]) -> f64 {
    let scale = (0..4).map(|a| (points[(a + 1) % 4] - points[a]).norm()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return f64::INFINITY;
    }
    let coplanar = match fit_plane(points) {
        Ok((_, r)) => r,
        Err(_) => return f64::INFINITY,
    };
    let spread = match circumcircle(&points[0], &points[1], &points[2]) {
        Some((center, radius)) => ((points[3] - center).norm() - radius).abs(),
        None => return f64::INFINITY,
    };
    coplanar.max(spread) / scale
}

/// Circle through three points: center and radius.
pub fn circumcircle(a: &Vec3, b: &Vec3, c: &Vec3) -> Option<(Vec3, f64)> {
    let ab = b - a;
    let ac = c - a;
    let n = ab.cross(&ac);
    let n2 = n.norm_squared();
    if n2 <= 1e-30 * ab.norm_squared() * ac.norm_squared() {
        return None;
    }
    let offset = (ac.norm_squared() * n.cross(&ab) + ab.norm_squared() * ac.cross(&n)) / (2.0 * n2);
    Some((a + offset, offset.norm()))
}

/// Whether quad `q` of `f` is concircular within `tol`, with its residual.
pub fn is_circular(f: &Net3, q: Quad, tol: f64) -> (bool, f64) {
    let r = circularity_residual(&f.quad_points(q));
    (r <= tol, r)
}

/// Worst entry of a per-quad check.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadReport {
    pub passed: bool,
    pub max_residual: f64,
    pub worst: Option<Quad>,
    pub failures: usize,
    pub checked: usize,
}

impl QuadReport {
    pub fn from_residuals(residuals: impl IntoIterator<Item = (Quad, f64)>, tol: f64) -> Self {
        let mut report = QuadReport { passed: true, ..Default::default() };
        for (q, r) in residuals {
            report.checked += 1;
            let r = if r.is_nan() { f64::INFINITY } else { r };
            if r > tol {
                report.failures += 1;
                report.passed = false;
            }
            if report.worst.is_none() || r > report.max_residual {
                report.max_residual = r;
                report.worst = Some(q);
            }
        }
        report
    }
}

pub fn circularity_report(f: &Net3, tol: f64) -> QuadReport {
    QuadReport::from_residuals(f.domain.quads().map(|q| (q, is_circular(f, q, tol).1)), tol)
}

/// Per-quad check `|cr(F_i, F_j, F_k, F_l) − α(m)/β(n)| ≤ tol`.
pub fn is_isothermic(f: &Net3, labels: &EdgeLabels, tol: f64) -> Result<QuadReport> {
    if !labels.covers(&f.domain) {
        return Err(Error::DomainMismatch("edge labels do not cover the domain".into()));
    }
    let circ = circularity_report(f, tol);
    if !circ.passed {
        let q = circ.worst.unwrap();
        return Err(Error::NotCircular { m: q.m, n: q.n, residual: circ.max_residual });
    }
    let mut residuals = Vec::new();
    for q in f.domain.quads() {
        let [a, b, c, d] = f.quad_points(q);
        let target = labels.ratio(q);
        let r = match cross_ratio_quat(&a, &b, &c, &d) {
            Ok(cr) => ((cr.re - target).abs()).max(cr.im_mag) / target.abs().max(1.0),
            Err(_) => f64::INFINITY,
        };
        residuals.push((q, r));
    }
    Ok(QuadReport::from_residuals(residuals, tol))
}

/// Edge-parallelity of two nets on the same domain: returns whether every pair
/// of corresponding edges is parallel (or antiparallel) within `tol` radians,
/// and the worst angle. Edges shorter than 1e-12 relative to the net scale are skipped.
pub fn are_parallel_meshes(f: &Net3, g: &Net3, tol: f64) -> Result<(bool, f64)> {
    if f.domain != g.domain {
        return Err(Error::DomainMismatch("nets live on different domains".into()));
    }
    let (sf, sg) = (f.scale().max(f64::MIN_POSITIVE), g.scale().max(f64::MIN_POSITIVE));
    let mut worst = 0.0f64;
    for (a, b) in f.domain.edges() {
        let df = f.at(b) - f.at(a);
        let dg = g.at(b) - g.at(a);
        if df.norm() <= 1e-12 * sf || dg.norm() <= 1e-12 * sg {
            continue;
        }
        let sin = df.cross(&dg).norm() / (df.norm() * dg.norm());
        worst = worst.max(sin.min(1.0).asin());
    }
    Ok((worst <= tol, worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lattice(size: i32) -> Net3 {
        Net3::from_fn(LatticeDomain::rect(0, size, 0, size), |(m, n)| Vec3::new(m as f64, n as f64, 0.0))
    }

    #[test]
    fn masked_domain_quads() {
        let d = LatticeDomain::rect(0, 3, 0, 3).with_mask([(0, 0)]);
        assert_eq!(d.quad_count(), 8);
        assert!(d.quads().all(|q| q.corners().iter().all(|&v| d.contains(v))));
        assert!(d.is_connected());
        assert_eq!(d.root(), Some((0, 1)));
    }

    #[test]
    fn slots_round_trip() {
        let d = LatticeDomain::rect(-2, 3, 1, 4);
        for v in d.vertices() {
            assert_eq!(d.vertex_at(d.slot(v).unwrap()), v);
        }
    }

    #[test]
    fn unit_square_is_circular() {
        let f = lattice(1);
        let (ok, r) = is_circular(&f, Quad::at(0, 0), DEFAULT_TOL);
        assert!(ok);
        assert!(r < 1e-15);
    }

    #[test]
    fn lifted_vertex_breaks_circularity() {
        let mut f = lattice(1);
        f.set((0, 1), Vec3::new(0.0, 1.0, 0.1));
        let (ok, r) = is_circular(&f, Quad::at(0, 0), DEFAULT_TOL);
        assert!(!ok);
        // circumcenter oracle: the spread alone is |(0.5, 0.5, −0.1)| − √0.5 ≈ 7.0e-3,
        // the coplanarity distance of the LS plane is about 0.025.
        assert!(r >= 0.01, "{r}");
    }

    #[test]
    fn rectangle_is_circular() {
        let f = Net3::from_fn(LatticeDomain::rect(0, 1, 0, 1), |(m, n)| Vec3::new(m as f64, 2.0 * n as f64, 0.0));
        let (ok, r) = is_circular(&f, Quad::at(0, 0), DEFAULT_TOL);
        assert!(ok && r <= 1e-12);
    }

    #[test]
    fn square_lattice_isothermic() {
        let f = lattice(4);
        let good = EdgeLabels::constant(&f.domain, 1.0, -1.0);
        let report = is_isothermic(&f, &good, DEFAULT_TOL).unwrap();
        assert!(report.passed);
        assert!(report.max_residual < 1e-14);

        let bad = EdgeLabels::constant(&f.domain, 1.0, -2.0);
        let report = is_isothermic(&f, &bad, DEFAULT_TOL).unwrap();
        assert!(!report.passed);
        assert_eq!(report.failures, report.checked);
    }

    #[test]
    fn non_circular_rejected_by_isothermic_check() {
        let mut f = lattice(2);
        f.set((1, 1), Vec3::new(1.0, 1.0, 0.3));
        let labels = EdgeLabels::square(&f.domain);
        assert!(matches!(is_isothermic(&f, &labels, DEFAULT_TOL), Err(Error::NotCircular { .. })));
    }

    #[test]
    fn homothety_is_parallel() {
        let f = Net3::from_fn(LatticeDomain::rect(0, 3, 0, 3), |(m, n)| {
            Vec3::new(m as f64, n as f64, ((m * n) as f64).sin())
        });
        let g = f.map(|_, p| 2.0 * p + Vec3::new(1.0, -3.0, 0.5));
        let (ok, worst) = are_parallel_meshes(&f, &g, 1e-12).unwrap();
        assert!(ok && worst < 1e-12);
        let h = Net3::from_fn(f.domain.clone(), |(m, n)| Vec3::new((m * n) as f64, (m + 2 * n) as f64, m as f64 * 0.7));
        assert!(!are_parallel_meshes(&f, &h, 1e-6).unwrap().0);
        let other = lattice(2);
        assert!(matches!(are_parallel_meshes(&f, &other, 1e-9), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn labels_transpose_inverts_ratio() {
        let d = LatticeDomain::rect(0, 3, 0, 2);
        let labels = EdgeLabels { m0: 0, n0: 0, alpha: vec![1.0, 2.0, 0.5], beta: vec![-3.0, -1.5] };
        let t = labels.transposed();
        for q in d.quads() {
            assert_relative_eq!(t.ratio(Quad::at(q.n, q.m)), 1.0 / labels.ratio(q));
        }
    }

    #[test]
    fn circumcircle_of_right_triangle() {
        let (c, r) = circumcircle(&Vec3::new(0., 0., 0.), &Vec3::new(2., 0., 0.), &Vec3::new(0., 2., 0.)).unwrap();
        assert_relative_eq!(c, Vec3::new(1., 1., 0.), epsilon = 1e-15);
        assert_relative_eq!(r, 2f64.sqrt(), epsilon = 1e-15);
    }
}
