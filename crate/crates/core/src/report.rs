//! Verification reports: every invariant of a net, pair or orbit checked
//! with its largest residual and where it occurs.

use serde::Serialize;

use crate::holomorphic::{validate_holomorphic, HoloGrid};
use crate::io::{NetDocument, NetKind, QuadMesh};
use crate::minimal::{is_asymptotic, mean_curvature_report, mixed_area, propagate_normals, quad_curvatures, MinimalPair};
use crate::mobius::{Isometry, Vec3};
use crate::net::{are_parallel_meshes, circularity_report, is_isothermic, EdgeLabels, Net3, QuadReport};
use crate::reflection::{
    analyze_boundary_asymptotic, analyze_boundary_isothermic, faces_preserved, orbit_permutation, BoundaryKind, BoundaryLine,
    SymmetryOrbit,
};

/// One invariant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Largest residual; `null` in JSON when infinite.
    pub max_residual: f64,
    /// Quad or vertex `[m, n]` of the largest residual.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<[i32; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, max_residual: f64) -> Self {
        Self { name: name.into(), passed, max_residual, location: None, detail: None }
    }

    pub fn at(mut self, loc: Option<(i32, i32)>) -> Self {
        self.location = loc.map(|(m, n)| [m, n]);
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    fn from_quads(name: &str, r: &QuadReport) -> Self {
        Check::new(name, r.passed, r.max_residual).at(r.worst.map(|q| (q.m, q.n)))
    }

    fn error(name: &str, e: &crate::Error) -> Self {
        let loc = match e {
            crate::Error::NotCircular { m, n, .. }
            | crate::Error::ClosureFailure { m, n, .. }
            | crate::Error::InconsistentBundle { m, n, .. }
            | crate::Error::PoleOnGrid { m, n }
            | crate::Error::PropagationBlowup { m, n } => Some((*m, *n)),
            _ => None,
        };
        Check::new(name, false, f64::INFINITY).at(loc).detail(e.to_string())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub tol: f64,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn new(tol: f64) -> Self {
        Self { passed: true, tol, checks: Vec::new() }
    }

    pub fn push(&mut self, c: Check) {
        self.passed &= c.passed;
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        for c in other.checks {
            self.push(c);
        }
    }

    pub fn prefixed(mut self, prefix: &str) -> Self {
        for c in &mut self.checks {
            c.name = format!("{prefix}.{}", c.name);
        }
        self
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let loc = c.location.map(|[m, n]| format!(" at ({m}, {n})")).unwrap_or_default();
            let detail = c.detail.as_ref().map(|d| format!(" [{d}]")).unwrap_or_default();
            s += &format!("{:4} {:<32} {:.3e}{loc}{detail}\n", if c.passed { "ok" } else { "FAIL" }, c.name, c.max_residual);
        }
        s += &format!("{} ({} checks, tol {:e})\n", if self.passed { "passed" } else { "FAILED" }, self.checks.len(), self.tol);
        s
    }
}

fn boundary_lines(f: &Net3) -> [BoundaryLine; 4] {
    let d = &f.domain;
    [BoundaryLine::Row(d.n0), BoundaryLine::Row(d.n1), BoundaryLine::Column(d.m0), BoundaryLine::Column(d.m1)]
}

fn line_name(l: BoundaryLine) -> String {
    match l {
        BoundaryLine::Row(n) => format!("row {n}"),
        BoundaryLine::Column(m) => format!("column {m}"),
    }
}

fn unit_check(n: &Net3, tol: f64) -> Check {
    let mut worst = (0.0, None);
    for v in n.domain.vertices() {
        let r = (n.at(v).norm() - 1.0).abs();
        if worst.1.is_none() || r > worst.0 {
            worst = (r, Some(v));
        }
    }
    Check::new("normals.unit", worst.0 <= tol, worst.0).at(worst.1)
}

/// Steiner formula `A(F + tN) = (1 − 2tH + t²K) A(F)` on every quad for
/// `t ∈ {−1, −½, ½, 1}`, relative to `|A(F)|`.
pub fn steiner_check(f: &Net3, n: &Net3, tol: f64) -> Check {
    let mut worst = (0.0f64, None);
    for q in f.domain.quads() {
        let (qf, qn) = (f.quad_points(q), n.quad_points(q));
        let c = match quad_curvatures(&qf, &qn) {
            Ok(c) => c,
            Err(e) => return Check::error("steiner", &e).at(Some((q.m, q.n))),
        };
        let af = match mixed_area(&qf, &qf) {
            Ok(a) => a,
            Err(e) => return Check::error("steiner", &e).at(Some((q.m, q.n))),
        };
        for t in [-1.0, -0.5, 0.5, 1.0] {
            let qt: [Vec3; 4] = std::array::from_fn(|i| qf[i] + t * qn[i]);
            let at = match mixed_area(&qt, &qt) {
                Ok(a) => a,
                Err(e) => return Check::error("steiner", &e).at(Some((q.m, q.n))),
            };
            let r = (at - (1.0 - 2.0 * t * c.h + t * t * c.k) * af).norm() / c.area_f;
            if worst.1.is_none() || r > worst.0 {
                worst = (r, Some((q.m, q.n)));
            }
        }
    }
    Check::new("steiner", worst.0 <= tol, worst.0).at(worst.1)
}

/// Circularity, isothermicity for the labels and, with a Gauss map, edge
/// parallelity, minimality, the Steiner formula and the boundary analyses.
pub fn verify_isothermic(f: &Net3, labels: &EdgeLabels, normals: Option<&Net3>, tol: f64) -> VerificationReport {
    let mut r = VerificationReport::new(tol);
    r.push(Check::from_quads("circularity", &circularity_report(f, tol)));
    match is_isothermic(f, labels, tol) {
        Ok(q) => r.push(Check::from_quads("isothermic", &q)),
        Err(e) => r.push(Check::error("isothermic", &e)),
    }
    let Some(n) = normals else { return r };
    r.push(unit_check(n, tol));
    match are_parallel_meshes(f, n, tol) {
        Ok((ok, angle)) => r.push(Check::new("normals.parallel", ok, angle)),
        Err(e) => r.push(Check::error("normals.parallel", &e)),
    }
    match mean_curvature_report(f, n, tol) {
        Ok(q) => r.push(Check::from_quads("mean_curvature", &q)),
        Err(e) => r.push(Check::error("mean_curvature", &e)),
    }
    r.push(steiner_check(f, n, tol));
    for line in boundary_lines(f) {
        let a = analyze_boundary_isothermic(f, n, line, tol);
        let kind = if matches!(a.kind, BoundaryKind::PlanarCurvatureLine(_)) { "planar curvature line" } else { "not planar" };
        r.push(
            Check::new(format!("boundary.{}", line_name(line)), a.consistent, a.congruence_residual.min(a.great_circle_residual))
                .detail(kind),
        );
    }
    r
}

/// Star coplanarity and, with a Gauss map, agreement with the normals
/// propagated from the root, and the boundary analyses.
pub fn verify_asymptotic(f: &Net3, normals: Option<&Net3>, tol: f64) -> VerificationReport {
    let mut r = VerificationReport::new(tol);
    let a = is_asymptotic(f, tol);
    r.push(Check::new("asymptotic.stars", a.stars_coplanar, a.max_star_residual).at(a.worst_star));
    r.push(
        Check::new("asymptotic.nondegenerate", a.quads_nondegenerate, a.min_quad_nonplanarity)
            .at(a.flattest_quad.map(|q| (q.m, q.n))),
    );
    if let Some(n) = normals {
        r.push(unit_check(n, tol));
        let mut worst = (0.0f64, None);
        for v in f.domain.vertices() {
            let nv = n.at(v);
            for w in f.domain.neighbors(v) {
                let e = f.at(w) - f.at(v);
                let len = e.norm();
                if len > 0.0 {
                    let res = (nv.dot(&e) / len).abs();
                    if worst.1.is_none() || res > worst.0 {
                        worst = (res, Some(v));
                    }
                }
            }
        }
        r.push(Check::new("normals.tangent", worst.0 <= tol, worst.0).at(worst.1));
    }
    for line in boundary_lines(f) {
        let a = analyze_boundary_asymptotic(f, line, tol);
        let kind = if matches!(a.kind, BoundaryKind::StraightAsymptoticLine(_)) { "straight line" } else { "not straight" };
        r.push(Check::new(format!("boundary.{}", line_name(line)), a.consistent, a.congruence_residual).detail(kind));
    }
    r
}

pub fn verify_grid(g: &HoloGrid, tol: f64) -> VerificationReport {
    let mut r = VerificationReport::new(tol);
    r.push(Check::from_quads("cross_ratio", &validate_holomorphic(g, tol)));
    r
}

/// Both nets of a pair, their shared Gauss map, the normal bundle of the
/// isothermic net, and boundary duality: each boundary line is a planar
/// curvature line of `F` exactly when it is a straight line of `F̃`.
pub fn verify_pair(pair: &MinimalPair, tol: f64) -> VerificationReport {
    let mut r = VerificationReport::new(tol);
    r.extend(verify_grid(&pair.g, tol).prefixed("grid"));
    r.extend(verify_isothermic(&pair.f, &pair.g.labels, Some(&pair.normals), tol).prefixed("isothermic"));
    r.extend(verify_asymptotic(&pair.f_tilde, Some(&pair.normals), tol).prefixed("asymptotic"));
    let root = pair.f.domain.root().expect("non-empty domain");
    match propagate_normals(&pair.f, pair.normals.at(root)) {
        Ok(p) => {
            let mut worst = (0.0f64, None);
            for v in p.domain.vertices() {
                let d = (p.at(v) - pair.normals.at(v)).norm();
                if worst.1.is_none() || d > worst.0 {
                    worst = (d, Some(v));
                }
            }
            r.push(Check::new("normals.bundle", worst.0 <= tol, worst.0).at(worst.1));
        }
        Err(e) => r.push(Check::error("normals.bundle", &e)),
    }
    let mut mismatched = Vec::new();
    for line in boundary_lines(&pair.f) {
        let iso = analyze_boundary_isothermic(&pair.f, &pair.normals, line, tol);
        let asym = analyze_boundary_asymptotic(&pair.f_tilde, line, tol);
        let planar = matches!(iso.kind, BoundaryKind::PlanarCurvatureLine(_));
        let straight = matches!(asym.kind, BoundaryKind::StraightAsymptoticLine(_));
        if planar != straight {
            mismatched.push(line_name(line));
        }
    }
    let c = Check::new("duality", mismatched.is_empty(), mismatched.len() as f64);
    r.push(if mismatched.is_empty() { c } else { c.detail(mismatched.join(", ")) });
    r
}

/// Checks chosen by the file kind; `as_isothermic` forces the isothermic checks.
pub fn verify_document(doc: &NetDocument, tol: f64, as_isothermic: bool) -> VerificationReport {
    let kind = if as_isothermic { NetKind::Isothermic } else { doc.kind.unwrap_or(NetKind::Isothermic) };
    match kind {
        NetKind::Isothermic => verify_isothermic(&doc.net, &doc.labels_or_square(), doc.normals.as_ref(), tol),
        NetKind::Asymptotic => verify_asymptotic(&doc.net, doc.normals.as_ref(), tol),
        NetKind::Gauss => {
            let mut r = VerificationReport::new(tol);
            r.push(unit_check(&doc.net, tol));
            r
        }
        NetKind::Grid => match doc.to_grid() {
            Ok(g) => verify_grid(&g, tol),
            Err(e) => {
                let mut r = VerificationReport::new(tol);
                r.push(Check::error("grid", &e));
                r
            }
        },
    }
}

/// Group closure, weld residual, and every generator permuting the welded mesh.
pub fn verify_orbit(o: &SymmetryOrbit, tol: f64) -> VerificationReport {
    let mut r = VerificationReport::new(tol);
    r.push(Check::new("orbit.closed", o.closed, 0.0).detail(format!("{} elements, {} proper", o.elements.len(), o.proper_count())));
    let weld = o.weld_residual / o.scale;
    r.push(Check::new("orbit.weld", weld <= tol, weld));
    for (i, g) in o.generators.iter().enumerate() {
        r.push(generator_check(o, g, i, tol));
    }
    r
}

fn generator_check(o: &SymmetryOrbit, g: &Isometry, i: usize, tol: f64) -> Check {
    let name = format!("orbit.generator{i}");
    match orbit_permutation(o, g, tol.max(1e-9)) {
        Some(p) if faces_preserved(o, &p) => Check::new(name, true, 0.0),
        Some(_) => Check::new(name, false, 1.0).detail("faces not preserved"),
        None => Check::new(name, false, f64::INFINITY).detail("vertices not permuted"),
    }
}

/// Faces reference existing vertices and have four distinct corners.
pub fn verify_mesh(m: &QuadMesh, tol: f64) -> VerificationReport {
    let mut r = VerificationReport::new(tol);
    let bad = m.faces.iter().filter(|f| f.iter().any(|&i| i >= m.vertices.len()) || {
        let mut s = f.to_vec();
        s.sort_unstable();
        s.dedup();
        s.len() < 4
    });
    let count = bad.count();
    r.push(Check::new("mesh.faces", count == 0, count as f64).detail(format!("{} vertices, {} faces", m.vertices.len(), m.faces.len())));
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holomorphic::enneper_grid;

    #[test]
    fn enneper_pair_passes() {
        let pair = MinimalPair::from_grid(&enneper_grid(1, 8).unwrap()).unwrap();
        let r = verify_pair(&pair, 1e-9);
        assert!(r.passed, "{}", r.summary());
    }

    #[test]
    fn corrupted_vertex_names_quad() {
        let pair = MinimalPair::from_grid(&enneper_grid(1, 6).unwrap()).unwrap();
        let mut f = pair.f.clone();
        f.set((3, 3), f.at((3, 3)) + Vec3::new(0.0, 0.0, 1e-3));
        let r = verify_isothermic(&f, &pair.g.labels, Some(&pair.normals), 1e-9);
        assert!(!r.passed);
        let c = r.checks.iter().find(|c| c.name == "circularity").unwrap();
        let [m, n] = c.location.unwrap();
        assert!((2..=3).contains(&m) && (2..=3).contains(&n));
    }

    #[test]
    fn asymptotic_as_isothermic_fails() {
        let pair = MinimalPair::from_grid(&enneper_grid(1, 6).unwrap()).unwrap();
        assert!(verify_asymptotic(&pair.f_tilde, Some(&pair.normals), 1e-9).passed);
        let doc = NetDocument::new(pair.f_tilde.clone()).with_kind(NetKind::Asymptotic);
        let r = verify_document(&doc, 1e-9, true);
        assert!(!r.checks.iter().find(|c| c.name == "circularity").unwrap().passed);
    }
}
