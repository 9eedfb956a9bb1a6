//! Reflectable boundary lines, the two discrete Schwarz reflections, corner
//! angles, and assembly of global surfaces as symmetry orbits.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minimal::{propagate_normals, tangent_normals};
use crate::mobius::{fit_line, fit_plane, fit_plane_through_origin, point_scale, Isometry, LineR3, PlaneR3, Vec3};
use crate::net::{EdgeLabels, LatticeDomain, Net3, Quad, Vertex};

/// Default orbit size cap.
pub const ORBIT_CAP: usize = 10_000;

/// A boundary row `n = n0` or column `m = m0` of a net.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryLine {
    Row(i32),
    Column(i32),
}

impl BoundaryLine {
    fn transposed(self) -> Self {
        match self {
            BoundaryLine::Row(n) => BoundaryLine::Column(n),
            BoundaryLine::Column(m) => BoundaryLine::Row(m),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundaryKind {
    PlanarCurvatureLine(PlaneR3),
    StraightAsymptoticLine(LineR3),
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GaussCircle {
    Great(PlaneR3),
    Small(PlaneR3),
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryAnalysis {
    pub line: BoundaryLine,
    pub kind: BoundaryKind,
    pub gauss_circle: GaussCircle,
    /// Planarity of the vertices alone, relative to their extent.
    pub line_residual: f64,
    /// Planarity of the vertices together with `F + N` (isothermic) or the
    /// collinearity of the vertices (asymptotic), relative to their extent.
    pub congruence_residual: f64,
    /// Distance of the Gauss image from its best plane through the origin.
    pub great_circle_residual: f64,
    /// Distance of the Gauss image from its best plane.
    pub circle_residual: f64,
    /// The geometric test and the Gauss-image test agree.
    pub consistent: bool,
}

impl BoundaryAnalysis {
    pub fn plane(&self) -> Option<PlaneR3> {
        match self.kind {
            BoundaryKind::PlanarCurvatureLine(p) => Some(p),
            _ => None,
        }
    }

    pub fn axis(&self) -> Option<LineR3> {
        match self.kind {
            BoundaryKind::StraightAsymptoticLine(l) => Some(l),
            _ => None,
        }
    }
}

fn line_vertices(domain: &LatticeDomain, line: BoundaryLine) -> Vec<Vertex> {
    match line {
        BoundaryLine::Row(n) => (domain.m0..=domain.m1).map(|m| (m, n)).filter(|&v| domain.contains(v)).collect(),
        BoundaryLine::Column(m) => (domain.n0..=domain.n1).map(|n| (m, n)).filter(|&v| domain.contains(v)).collect(),
    }
}

fn relative_fit(points: &[Vec3]) -> (Option<PlaneR3>, f64) {
    let scale = point_scale(points);
    match fit_plane(points) {
        Ok((p, r)) => (Some(p), r / scale),
        Err(_) => (None, f64::INFINITY),
    }
}

fn gauss_circle(normals: &[Vec3], tol: f64) -> (GaussCircle, f64, f64) {
    let (small, circle_res) = match fit_plane(normals) {
        Ok((p, r)) => (Some(p), r),
        Err(_) => (None, f64::INFINITY),
    };
    let (great, great_res) = match fit_plane_through_origin(normals) {
        Ok((p, r)) => (Some(p), r),
        Err(_) => (None, f64::INFINITY),
    };
    let circle = if great_res <= tol {
        GaussCircle::Great(great.unwrap())
    } else if circle_res <= tol {
        GaussCircle::Small(small.unwrap())
    } else {
        GaussCircle::None
    };
    (circle, great_res, circle_res)
}

/// Classify a row or column of a circular net with Gauss map `n`.
///
/// The line is a reflectable curvature line when the vertices and the points
/// `F + N` lie in one plane. The Gauss image is checked independently for
/// lying on a great circle; both tests must agree for `consistent`.
pub fn analyze_boundary_isothermic(f: &Net3, n: &Net3, line: BoundaryLine, tol: f64) -> BoundaryAnalysis {
    let verts = line_vertices(&f.domain, line);
    let pf: Vec<Vec3> = verts.iter().map(|&v| f.at(v)).collect();
    let pn: Vec<Vec3> = verts.iter().map(|&v| n.at(v)).collect();
    let both: Vec<Vec3> = pf.iter().zip(&pn).flat_map(|(p, q)| [*p, p + q]).collect();
    let (_, line_residual) = relative_fit(&pf);
    let (plane, congruence_residual) = relative_fit(&both);
    let (gauss, great_res, circle_res) = gauss_circle(&pn, tol);
    let planar = congruence_residual <= tol && plane.is_some();
    let kind = if planar { BoundaryKind::PlanarCurvatureLine(plane.unwrap()) } else { BoundaryKind::None };
    let consistent = planar == matches!(gauss, GaussCircle::Great(_));
    BoundaryAnalysis {
        line,
        kind,
        gauss_circle: gauss,
        line_residual,
        congruence_residual,
        great_circle_residual: great_res,
        circle_residual: circle_res,
        consistent,
    }
}

/// Classify a row or column of an asymptotic net: straight when the vertices
/// are collinear. The tangent normals along the line must then lie in the
/// plane orthogonal to it (a great circle).
pub fn analyze_boundary_asymptotic(f: &Net3, line: BoundaryLine, tol: f64) -> BoundaryAnalysis {
    let verts = line_vertices(&f.domain, line);
    let pf: Vec<Vec3> = verts.iter().map(|&v| f.at(v)).collect();
    let scale = point_scale(&pf);
    let (axis, collinear) = match fit_line(&pf) {
        Ok((l, r)) => (Some(l), r / scale),
        Err(_) => (None, f64::INFINITY),
    };
    let normals: Vec<Vec3> = match tangent_normals(f) {
        Ok(tn) => verts.iter().map(|&v| tn.at(v)).collect(),
        Err(_) => Vec::new(),
    };
    let (gauss, great_res, circle_res) = if normals.len() >= 2 {
        gauss_circle(&normals, tol)
    } else {
        (GaussCircle::None, f64::INFINITY, f64::INFINITY)
    };
    let straight = collinear <= tol && axis.is_some();
    // the great circle of a straight line is the plane orthogonal to it
    let perpendicular = match axis {
        Some(l) if !normals.is_empty() => normals.iter().map(|nv| nv.dot(&l.direction).abs()).fold(0.0, f64::max),
        _ => f64::INFINITY,
    };
    let kind = if straight { BoundaryKind::StraightAsymptoticLine(axis.unwrap()) } else { BoundaryKind::None };
    let consistent = straight == matches!(gauss, GaussCircle::Great(_)) && (!straight || perpendicular <= tol);
    BoundaryAnalysis {
        line,
        kind,
        gauss_circle: gauss,
        line_residual: collinear,
        congruence_residual: collinear,
        great_circle_residual: great_res,
        circle_residual: circle_res,
        consistent,
    }
}

/// Where a boundary row sits in the domain, and the mirrored domain.
fn mirrored_domain(domain: &LatticeDomain, n0: i32) -> Result<(LatticeDomain, impl Fn(Vertex) -> Vertex)> {
    let extended = if n0 == domain.n1 {
        LatticeDomain { n1: 2 * n0 - domain.n0, ..domain.clone() }
    } else if n0 == domain.n0 {
        LatticeDomain { n0: 2 * n0 - domain.n1, ..domain.clone() }
    } else {
        return Err(Error::NotReflectable(format!("row {n0} is not a boundary row")));
    };
    let mirror = move |(m, n): Vertex| (m, 2 * n0 - n);
    let mut extended = extended;
    extended.mask = domain.mask.iter().flat_map(|&v| [v, mirror(v)]).collect();
    Ok((extended, mirror))
}

/// Edge labels across a reflected row: `β(2n0 − n − 1) = β(n)`.
pub fn mirror_labels(labels: &EdgeLabels, domain: &LatticeDomain, line: BoundaryLine) -> Result<EdgeLabels> {
    match line {
        BoundaryLine::Row(n0) => {
            let (ext, _) = mirrored_domain(domain, n0)?;
            let beta = (ext.n0..ext.n1)
                .map(|n| if (domain.n0..domain.n1).contains(&n) { labels.beta(n) } else { labels.beta(2 * n0 - n - 1) })
                .collect();
            Ok(EdgeLabels { m0: labels.m0, n0: ext.n0, alpha: labels.alpha.clone(), beta })
        }
        BoundaryLine::Column(m0) => {
            Ok(mirror_labels(&labels.transposed(), &domain.transposed(), BoundaryLine::Row(m0))?.transposed())
        }
    }
}

/// Net on the doubled domain with the new half given by `map` applied to the mirror image.
fn extend_by(f: &Net3, n0: i32, map: impl Fn(&Vec3) -> Vec3) -> Result<Net3> {
    let (ext, mirror) = mirrored_domain(&f.domain, n0)?;
    let original = f.domain.clone();
    Ok(Net3::from_fn(ext, |v| if original.contains(v) { f.at(v) } else { map(&f.at(mirror(v))) }))
}

/// Result of reflecting an isothermic net across a planar curvature line.
#[derive(Clone, Debug)]
pub struct IsothermicExtension {
    pub f: Net3,
    pub normals: Net3,
    pub plane: PlaneR3,
    /// Largest deviation between the mirrored Gauss map and the one propagated
    /// from the root of the extension.
    pub bundle_residual: f64,
}

/// Extend `F` across a planar curvature line by the reflection in its plane,
/// and `N` by the reflection in the parallel plane through the origin.
pub fn reflect_isothermic(f: &Net3, n: &Net3, line: BoundaryLine, tol: f64) -> Result<IsothermicExtension> {
    if let BoundaryLine::Column(_) = line {
        let t = reflect_isothermic(&f.transposed(), &n.transposed(), line.transposed(), tol)?;
        return Ok(IsothermicExtension { f: t.f.transposed(), normals: t.normals.transposed(), ..t });
    }
    let BoundaryLine::Row(n0) = line else { unreachable!() };
    let analysis = analyze_boundary_isothermic(f, n, line, tol);
    let plane = analysis
        .plane()
        .ok_or_else(|| Error::NotReflectable(format!("row {n0} is not a planar curvature line (residual {:e})", analysis.congruence_residual)))?;
    let iso = Isometry::reflection(plane);
    let ext_f = extend_by(f, n0, |p| iso.apply(p))?;
    let ext_n = extend_by(n, n0, |p| iso.apply_vector(p))?;
    let root = ext_f.domain.root().unwrap();
    let propagated = propagate_normals(&ext_f, ext_n.at(root))?;
    let bundle_residual =
        ext_f.domain.vertices().map(|v| (propagated.at(v) - ext_n.at(v)).norm()).fold(0.0, f64::max);
    if bundle_residual > 1e-9 {
        return Err(Error::InconsistentBundle { m: root.0, n: root.1, residual: bundle_residual });
    }
    Ok(IsothermicExtension { f: ext_f, normals: ext_n, plane, bundle_residual })
}

/// Extend an asymptotic net across a straight boundary line by the half-turn about it.
pub fn rotate_extend_asymptotic(f: &Net3, line: BoundaryLine, tol: f64) -> Result<(Net3, LineR3)> {
    if let BoundaryLine::Column(_) = line {
        let (t, l) = rotate_extend_asymptotic(&f.transposed(), line.transposed(), tol)?;
        return Ok((t.transposed(), l));
    }
    let BoundaryLine::Row(n0) = line else { unreachable!() };
    let analysis = analyze_boundary_asymptotic(f, line, tol);
    let axis = analysis
        .axis()
        .ok_or_else(|| Error::NotReflectable(format!("row {n0} is not a straight line (residual {:e})", analysis.line_residual)))?;
    let iso = Isometry::half_turn(axis);
    Ok((extend_by(f, n0, |p| iso.apply(p))?, axis))
}

/// Undo an extension: restrict a net to a sub-domain.
pub fn restrict(f: &Net3, domain: &LatticeDomain) -> Result<Net3> {
    if !domain.vertices().all(|v| f.domain.contains(v)) {
        return Err(Error::DomainMismatch("restriction leaves the domain".into()));
    }
    Ok(Net3::from_fn(domain.clone(), |v| f.at(v)))
}

/// Corner of the domain and the inward directions from it.
fn corner_frame(domain: &LatticeDomain, (m0, n0): Vertex) -> Result<(i32, i32)> {
    let sm = if m0 == domain.m0 {
        1
    } else if m0 == domain.m1 {
        -1
    } else {
        return Err(Error::NotPlanarBoundary(format!("column {m0} is not a boundary column")));
    };
    let sn = if n0 == domain.n0 {
        1
    } else if n0 == domain.n1 {
        -1
    } else {
        return Err(Error::NotPlanarBoundary(format!("row {n0} is not a boundary row")));
    };
    Ok((sm, sn))
}

/// Centroids of the quads next to a corner; the corner vertex itself may be masked.
fn corner_quads(domain: &LatticeDomain, (m0, n0): Vertex, (sm, sn): (i32, i32)) -> Vec<Quad> {
    let qm = if sm > 0 { m0 } else { m0 - 1 };
    let qn = if sn > 0 { n0 } else { n0 - 1 };
    [(0, 0), (1, 0), (0, 1), (1, 1)]
        .iter()
        .map(|&(a, b)| Quad::at(qm + sm * a, qn + sn * b))
        .filter(|q| domain.has_quad((q.m, q.n)))
        .take(3)
        .collect()
}

fn wedge_angle(p1: &PlaneR3, p2: &PlaneR3, inside: &Vec3) -> f64 {
    let orient = |p: &PlaneR3| if p.signed_distance(inside) >= 0.0 { p.normal } else { -p.normal };
    let (n1, n2) = (orient(p1), orient(p2));
    std::f64::consts::PI - n1.dot(&n2).clamp(-1.0, 1.0).acos()
}

/// Angle between the planes of the two boundary curvature lines through a
/// corner, on the side of the adjacent quad of `F`, and likewise for the great
/// circle planes of the Gauss image on the side of the quad of `N`.
pub fn corner_angles(f: &Net3, n: &Net3, corner: Vertex) -> Result<(f64, f64)> {
    const TOL: f64 = 1e-9;
    let frame = corner_frame(&f.domain, corner)?;
    let row = analyze_boundary_isothermic(f, n, BoundaryLine::Row(corner.1), TOL);
    let col = analyze_boundary_isothermic(f, n, BoundaryLine::Column(corner.0), TOL);
    let plane = |a: &BoundaryAnalysis| {
        a.plane().ok_or_else(|| {
            Error::NotPlanarBoundary(format!("{:?} is not planar (residual {:e})", a.line, a.congruence_residual))
        })
    };
    let great = |a: &BoundaryAnalysis| match a.gauss_circle {
        GaussCircle::Great(p) => Ok(p),
        _ => Err(Error::NotPlanarBoundary(format!("{:?} has no great-circle Gauss image", a.line))),
    };
    let (p1, p2) = (plane(&row)?, plane(&col)?);
    let (q1, q2) = (great(&row)?, great(&col)?);
    let quads = corner_quads(&f.domain, corner, frame);
    if quads.is_empty() {
        return Err(Error::NotPlanarBoundary("no quad at the corner".into()));
    }
    let mean = |net: &Net3| {
        let pts: Vec<Vec3> = quads.iter().flat_map(|&q| net.quad_points(q)).collect();
        pts.iter().fold(Vec3::zeros(), |a, p| a + p) / pts.len() as f64
    };
    Ok((wedge_angle(&p1, &p2, &mean(f)), wedge_angle(&q1, &q2, &mean(n))))
}

/// Reflections in the planes of every planar boundary curvature line.
pub fn boundary_reflections(f: &Net3, n: &Net3, tol: f64) -> Vec<Isometry> {
    boundary_lines(&f.domain)
        .into_iter()
        .filter_map(|l| analyze_boundary_isothermic(f, n, l, tol).plane())
        .map(Isometry::reflection)
        .collect()
}

/// Half-turns about every straight boundary line.
pub fn boundary_half_turns(f: &Net3, tol: f64) -> Vec<Isometry> {
    boundary_lines(&f.domain)
        .into_iter()
        .filter_map(|l| analyze_boundary_asymptotic(f, l, tol).axis())
        .map(Isometry::half_turn)
        .collect()
}

fn boundary_lines(d: &LatticeDomain) -> [BoundaryLine; 4] {
    [BoundaryLine::Row(d.n0), BoundaryLine::Column(d.m0), BoundaryLine::Row(d.n1), BoundaryLine::Column(d.m1)]
}

/// A fundamental piece copied by every element of a finite isometry group.
#[derive(Clone, Debug)]
pub struct SymmetryOrbit {
    pub piece: Net3,
    pub generators: Vec<Isometry>,
    pub elements: Vec<Isometry>,
    /// The breadth-first closure terminated before `max_word`.
    pub closed: bool,
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 4]>,
    /// `copies[e][i]` is the welded index of the `i`-th piece vertex under element `e`.
    pub copies: Vec<Vec<usize>>,
    /// Largest distance between two points merged by welding.
    pub weld_residual: f64,
    pub scale: f64,
}

impl SymmetryOrbit {
    pub fn proper_count(&self) -> usize {
        self.elements.iter().filter(|e| e.is_proper()).count()
    }
}

fn find_element(elements: &[Isometry], index: &HashMap<[i64; 12], usize>, e: &Isometry, scale: f64) -> Option<usize> {
    if let Some(&i) = index.get(&element_key(e, scale)) {
        if elements[i].distance(e, scale) <= 1e-9 {
            return Some(i);
        }
    }
    elements.iter().position(|x| x.distance(e, scale) <= 1e-9)
}

fn element_key(e: &Isometry, scale: f64) -> [i64; 12] {
    let mut k = [0i64; 12];
    for (i, v) in e.linear.iter().enumerate() {
        k[i] = (v * 1e6).round() as i64;
    }
    for i in 0..3 {
        k[9 + i] = (e.translation[i] / scale * 1e6).round() as i64;
    }
    k
}

/// Breadth-first closure of the group generated by `generators`, keeping words
/// up to length `max_word`, with at most `cap` elements.
pub fn group_closure(generators: &[Isometry], max_word: usize, cap: usize, scale: f64) -> Result<(Vec<Isometry>, bool)> {
    let mut elements = vec![Isometry::identity()];
    let mut index = HashMap::from([(element_key(&elements[0], scale), 0usize)]);
    let mut frontier = vec![0usize];
    for _ in 0..max_word {
        let mut next = Vec::new();
        for &i in &frontier {
            for s in generators {
                let e = s.compose(&elements[i]);
                if find_element(&elements, &index, &e, scale).is_none() {
                    if elements.len() >= cap {
                        return Err(Error::OrbitExplosion(cap));
                    }
                    index.insert(element_key(&e, scale), elements.len());
                    next.push(elements.len());
                    elements.push(e);
                }
            }
        }
        if next.is_empty() {
            return Ok((elements, true));
        }
        frontier = next;
    }
    Ok((elements, false))
}

/// Welds points closer than `tol` using a uniform grid of cell size `tol`.
struct Welder {
    tol: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
    points: Vec<Vec3>,
    residual: f64,
}

impl Welder {
    fn new(tol: f64) -> Self {
        Self { tol, cells: HashMap::new(), points: Vec::new(), residual: 0.0 }
    }

    fn cell(&self, p: &Vec3) -> [i64; 3] {
        [0, 1, 2].map(|i| (p[i] / self.tol).floor() as i64)
    }

    fn insert(&mut self, p: Vec3) -> usize {
        let c = self.cell(&p);
        let mut best: Option<(usize, f64)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        for &i in list {
                            let d = (self.points[i] - p).norm();
                            if d <= self.tol && best.is_none_or(|(_, bd)| d < bd) {
                                best = Some((i, d));
                            }
                        }
                    }
                }
            }
        }
        if let Some((i, d)) = best {
            self.residual = self.residual.max(d);
            return i;
        }
        self.points.push(p);
        self.cells.entry(c).or_default().push(self.points.len() - 1);
        self.points.len() - 1
    }

    fn find(&self, p: &Vec3) -> Option<usize> {
        let c = self.cell(p);
        let mut best: Option<(usize, f64)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        for &i in list {
                            let d = (self.points[i] - *p).norm();
                            if d <= self.tol && best.is_none_or(|(_, bd)| d < bd) {
                                best = Some((i, d));
                            }
                        }
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Copy `piece` by every element of the group generated by `generators` and
/// weld coincident vertices at `1e-9 ·` (piece scale). Copies by orientation
/// reversing elements get reversed faces.
pub fn build_orbit(piece: &Net3, generators: &[Isometry], max_word: usize) -> Result<SymmetryOrbit> {
    build_orbit_capped(piece, generators, max_word, ORBIT_CAP)
}

pub fn build_orbit_capped(piece: &Net3, generators: &[Isometry], max_word: usize, cap: usize) -> Result<SymmetryOrbit> {
    let scale = piece.scale().max(f64::MIN_POSITIVE);
    let (elements, closed) = group_closure(generators, max_word, cap, scale)?;
    let verts: Vec<Vertex> = piece.domain.vertices().collect();
    let local: HashMap<Vertex, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut welder = Welder::new(1e-9 * scale);
    let mut copies = Vec::with_capacity(elements.len());
    let mut faces = Vec::new();
    for e in &elements {
        let map: Vec<usize> = verts.iter().map(|&v| welder.insert(e.apply(&piece.at(v)))).collect();
        for q in piece.domain.quads() {
            let mut f = q.corners().map(|v| map[local[&v]]);
            if !e.is_proper() {
                f.swap(1, 3);
            }
            faces.push(f);
        }
        copies.push(map);
    }
    Ok(SymmetryOrbit {
        piece: piece.clone(),
        generators: generators.to_vec(),
        elements,
        closed,
        vertices: welder.points.clone(),
        faces,
        copies,
        weld_residual: welder.residual,
        scale,
    })
}

/// Image of every welded vertex under `iso`, as a permutation of the welded
/// vertices; fails when some image is not a vertex within `tol · scale`.
pub fn orbit_permutation(orbit: &SymmetryOrbit, iso: &Isometry, tol: f64) -> Option<Vec<usize>> {
    let mut welder = Welder::new(tol * orbit.scale);
    for p in &orbit.vertices {
        welder.points.push(*p);
        let c = welder.cell(p);
        welder.cells.entry(c).or_default().push(welder.points.len() - 1);
    }
    let perm: Option<Vec<usize>> = orbit.vertices.iter().map(|p| welder.find(&iso.apply(p))).collect();
    let perm = perm?;
    let mut seen = vec![false; perm.len()];
    for &i in &perm {
        if std::mem::replace(&mut seen[i], true) {
            return None;
        }
    }
    Some(perm)
}

/// Group closure check: every product of two elements is an element.
pub fn is_group_closed(elements: &[Isometry], scale: f64) -> bool {
    let index: HashMap<[i64; 12], usize> = elements.iter().enumerate().map(|(i, e)| (element_key(e, scale), i)).collect();
    elements
        .iter()
        .all(|a| elements.iter().all(|b| find_element(elements, &index, &a.compose(b), scale).is_some()))
}

/// Face set of the welded mesh is preserved by a vertex permutation
/// (faces compared as unordered vertex sets).
pub fn faces_preserved(orbit: &SymmetryOrbit, perm: &[usize]) -> bool {
    let key = |f: &[usize; 4]| {
        let mut k = *f;
        k.sort_unstable();
        k
    };
    let set: std::collections::HashSet<[usize; 4]> = orbit.faces.iter().map(key).collect();
    orbit.faces.iter().all(|f| set.contains(&key(&f.map(|i| perm[i]))))
}
