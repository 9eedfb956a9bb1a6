//! `.dnet.json` net files, orbit files and OBJ export.
//!
//! Floats are written in scientific notation with 17 significant digits, so
//! reading a written file gives back the same bits.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::holomorphic::HoloGrid;
use crate::minimal::MinimalPair;
use crate::mobius::{CInf, Isometry, Vec3};
use crate::net::{EdgeLabels, LatticeDomain, Net3, Vertex};
use crate::reflection::SymmetryOrbit;

/// `f64` written with 17 significant digits.
#[derive(Clone, Copy, Debug)]
struct F17(f64);

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(serde::ser::Error::custom(format!("non-finite value {}", self.0)));
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

fn f17(p: &Vec3) -> [F17; 3] {
    [F17(p.x), F17(p.y), F17(p.z)]
}

#[derive(Serialize)]
struct DomainOut {
    m0: i32,
    m1: i32,
    n0: i32,
    n1: i32,
    mask: Vec<[i32; 2]>,
}

#[derive(Serialize)]
struct VertexOut {
    m: i32,
    n: i32,
    p: [F17; 3],
}

#[derive(Serialize)]
struct NetOut<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<&'a str>,
    domain: DomainOut,
    vertices: Vec<VertexOut>,
    alpha: Vec<F17>,
    beta: Vec<F17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    normals: Option<Vec<VertexOut>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    infinity: Option<Vec<[i32; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    links: Option<&'a Links>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainIn {
    m0: i32,
    m1: i32,
    n0: i32,
    n1: i32,
    #[serde(default)]
    mask: Vec<[i32; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexIn {
    m: i32,
    n: i32,
    p: [f64; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NetIn {
    #[serde(default)]
    kind: Option<String>,
    domain: DomainIn,
    vertices: Vec<VertexIn>,
    #[serde(default)]
    alpha: Option<Vec<f64>>,
    #[serde(default)]
    beta: Option<Vec<f64>>,
    #[serde(default)]
    normals: Option<Vec<VertexIn>>,
    #[serde(default)]
    infinity: Option<Vec<[i32; 2]>>,
    #[serde(default)]
    links: Option<Links>,
}

/// Relative paths of the files belonging to one minimal pair.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Links {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isothermic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asymptotic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauss: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
}

/// What a net file describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetKind {
    Isothermic,
    Asymptotic,
    Gauss,
    Grid,
}

impl NetKind {
    fn as_str(&self) -> &'static str {
        match self {
            NetKind::Isothermic => "isothermic",
            NetKind::Asymptotic => "asymptotic",
            NetKind::Gauss => "gauss",
            NetKind::Grid => "grid",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "isothermic" => NetKind::Isothermic,
            "asymptotic" => NetKind::Asymptotic,
            "gauss" => NetKind::Gauss,
            "grid" => NetKind::Grid,
            _ => return None,
        })
    }
}

/// Contents of a `.dnet.json` file.
#[derive(Clone, Debug, PartialEq)]
pub struct NetDocument {
    pub kind: Option<NetKind>,
    pub net: Net3,
    pub labels: Option<EdgeLabels>,
    pub normals: Option<Net3>,
    /// Vertices whose grid value is ∞ (their stored point is ignored).
    pub infinity: Vec<Vertex>,
    pub links: Option<Links>,
}

impl NetDocument {
    pub fn new(net: Net3) -> Self {
        Self { kind: None, net, labels: None, normals: None, infinity: Vec::new(), links: None }
    }

    pub fn with_kind(mut self, kind: NetKind) -> Self {
        self.kind = Some(kind);
        self
    }

    pub fn with_labels(mut self, labels: EdgeLabels) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn with_normals(mut self, normals: Net3) -> Self {
        self.normals = Some(normals);
        self
    }

    /// A grid stored as points `(x, y, 0)` with an infinity tag list.
    pub fn from_grid(g: &HoloGrid) -> Self {
        let mut infinity = Vec::new();
        let net = Net3::from_fn(g.domain.clone(), |v| match g.at(v) {
            CInf::Finite(z) => Vec3::new(z.re, z.im, 0.0),
            CInf::Infinity => {
                infinity.push(v);
                Vec3::zeros()
            }
        });
        Self { kind: Some(NetKind::Grid), net, labels: Some(g.labels.clone()), normals: None, infinity, links: None }
    }

    pub fn to_grid(&self) -> Result<HoloGrid> {
        let labels = self.labels.clone().unwrap_or_else(|| EdgeLabels::square(&self.net.domain));
        let inf: HashSet<Vertex> = self.infinity.iter().copied().collect();
        Ok(HoloGrid::from_fn(self.net.domain.clone(), labels, |v| {
            if inf.contains(&v) {
                CInf::Infinity
            } else {
                let p = self.net.at(v);
                CInf::new(p.x, p.y)
            }
        }))
    }

    /// Labels of the file, or `α ≡ 1, β ≡ −1` when absent.
    pub fn labels_or_square(&self) -> EdgeLabels {
        self.labels.clone().unwrap_or_else(|| EdgeLabels::square(&self.net.domain))
    }

    pub fn to_json(&self) -> Result<String> {
        let d = &self.net.domain;
        let verts = |net: &Net3| -> Vec<VertexOut> {
            d.vertices().map(|(m, n)| VertexOut { m, n, p: f17(&net.at((m, n))) }).collect()
        };
        let (alpha, beta) = match &self.labels {
            Some(l) => {
                if !l.covers(d) {
                    return Err(Error::DomainMismatch("labels do not cover the domain".into()));
                }
                let a = (d.m0..d.m1).map(|m| F17(l.alpha(m))).collect();
                let b = (d.n0..d.n1).map(|n| F17(l.beta(n))).collect();
                (a, b)
            }
            None => (Vec::new(), Vec::new()),
        };
        if let Some(nn) = &self.normals {
            if nn.domain != *d {
                return Err(Error::DomainMismatch("normals live on a different domain".into()));
            }
        }
        let out = NetOut {
            kind: self.kind.as_ref().map(NetKind::as_str),
            domain: DomainOut { m0: d.m0, m1: d.m1, n0: d.n0, n1: d.n1, mask: d.mask.iter().map(|&(m, n)| [m, n]).collect() },
            vertices: verts(&self.net),
            alpha,
            beta,
            normals: self.normals.as_ref().map(verts),
            infinity: (!self.infinity.is_empty()).then(|| self.infinity.iter().map(|&(m, n)| [m, n]).collect()),
            links: self.links.as_ref(),
        };
        let mut s = serde_json::to_string_pretty(&out).map_err(|e| Error::InvalidGrid(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: NetIn = parse_json(text)?;
        let line = |key: &str| line_of(text, key);
        let kind = match raw.kind.as_deref() {
            None => None,
            Some(k) => Some(NetKind::parse(k).ok_or_else(|| Error::Parse { line: line("\"kind\""), msg: format!("unknown kind {k:?}") })?),
        };
        let dm = &raw.domain;
        if dm.m1 < dm.m0 || dm.n1 < dm.n0 {
            return Err(Error::Parse { line: line("\"domain\""), msg: "empty domain range".into() });
        }
        let domain = LatticeDomain::rect(dm.m0, dm.m1, dm.n0, dm.n1).with_mask(dm.mask.iter().map(|&[m, n]| (m, n)));
        let net = read_vertices(&domain, &raw.vertices, line("\"vertices\""))?;
        let normals = match &raw.normals {
            Some(v) => Some(read_vertices(&domain, v, line("\"normals\""))?),
            None => None,
        };
        let labels = match (raw.alpha, raw.beta) {
            (None, None) => None,
            (Some(a), Some(b)) if a.is_empty() && b.is_empty() => None,
            (Some(alpha), Some(beta)) => {
                let l = EdgeLabels { m0: domain.m0, n0: domain.n0, alpha, beta };
                if l.alpha.len() != domain.width() - 1 || l.beta.len() != domain.height() - 1 {
                    return Err(Error::Parse {
                        line: line("\"alpha\""),
                        msg: format!(
                            "expected {} alpha and {} beta labels, got {} and {}",
                            domain.width() - 1,
                            domain.height() - 1,
                            l.alpha.len(),
                            l.beta.len()
                        ),
                    });
                }
                Some(l)
            }
            _ => return Err(Error::Parse { line: line("\"alpha\"").max(line("\"beta\"")), msg: "alpha and beta must be given together".into() }),
        };
        let mut infinity = Vec::new();
        for &[m, n] in raw.infinity.iter().flatten() {
            if !domain.contains((m, n)) {
                return Err(Error::Parse { line: line("\"infinity\""), msg: format!("infinity tag ({m}, {n}) outside the domain") });
            }
            infinity.push((m, n));
        }
        Ok(Self { kind, net, labels, normals, infinity, links: raw.links })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })
}

fn line_of(text: &str, needle: &str) -> usize {
    text.find(needle).map(|i| text[..i].matches('\n').count() + 1).unwrap_or(0)
}

fn read_vertices(domain: &LatticeDomain, list: &[VertexIn], line: usize) -> Result<Net3> {
    let mut net = Net3::zeros(domain.clone());
    let mut seen = HashSet::new();
    for v in list {
        let key = (v.m, v.n);
        if !domain.contains(key) {
            return Err(Error::Parse { line, msg: format!("vertex ({}, {}) is outside the domain or masked", v.m, v.n) });
        }
        if !seen.insert(key) {
            return Err(Error::Parse { line, msg: format!("vertex ({}, {}) listed twice", v.m, v.n) });
        }
        net.set(key, Vec3::from(v.p));
    }
    if let Some(missing) = domain.vertices().find(|v| !seen.contains(v)) {
        return Err(Error::Parse { line, msg: format!("vertex {missing:?} missing") });
    }
    Ok(net)
}

/// File names used by [`write_pair`].
pub const PAIR_FILES: [&str; 4] = ["isothermic.dnet.json", "asymptotic.dnet.json", "gauss.dnet.json", "grid.dnet.json"];

fn pair_links() -> Links {
    Links {
        isothermic: Some(PAIR_FILES[0].into()),
        asymptotic: Some(PAIR_FILES[1].into()),
        gauss: Some(PAIR_FILES[2].into()),
        grid: Some(PAIR_FILES[3].into()),
    }
}

/// Write a minimal pair as three linked net files plus its grid into `dir`.
pub fn write_pair(pair: &MinimalPair, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let labels = pair.g.labels.clone();
    let links = Some(pair_links());
    let docs = [
        NetDocument::new(pair.f.clone()).with_kind(NetKind::Isothermic).with_labels(labels.clone()).with_normals(pair.normals.clone()),
        NetDocument::new(pair.f_tilde.clone()).with_kind(NetKind::Asymptotic).with_normals(pair.normals.clone()),
        NetDocument::new(pair.normals.clone()).with_kind(NetKind::Gauss).with_labels(labels),
        NetDocument::from_grid(&pair.g),
    ];
    for (mut doc, name) in docs.into_iter().zip(PAIR_FILES) {
        doc.links = links.clone();
        doc.write(&dir.join(name))?;
    }
    Ok(())
}

/// Read a pair written by [`write_pair`].
pub fn read_pair(dir: &Path) -> Result<MinimalPair> {
    let f = NetDocument::read(&dir.join(PAIR_FILES[0]))?;
    let ft = NetDocument::read(&dir.join(PAIR_FILES[1]))?;
    let n = NetDocument::read(&dir.join(PAIR_FILES[2]))?;
    let g = NetDocument::read(&dir.join(PAIR_FILES[3]))?.to_grid()?;
    Ok(MinimalPair { f: f.net, f_tilde: ft.net, normals: n.net, g })
}

#[derive(Serialize)]
struct IsometryOut {
    linear: [F17; 9],
    translation: [F17; 3],
    proper: bool,
}

#[derive(Serialize)]
struct OrbitOut<'a> {
    kind: &'a str,
    elements: Vec<IsometryOut>,
    closed: bool,
    weld_residual: F17,
    vertices: Vec<[F17; 3]>,
    faces: Vec<[usize; 4]>,
}

#[derive(Deserialize)]
struct OrbitIn {
    kind: String,
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 4]>,
}

/// A welded quad mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 4]>,
}

impl QuadMesh {
    /// Vertices in m-major order and one face per quad.
    pub fn from_net(f: &Net3) -> Self {
        let d = &f.domain;
        let index: std::collections::HashMap<Vertex, usize> = d.vertices().enumerate().map(|(i, v)| (v, i)).collect();
        let vertices = d.vertices().map(|v| f.at(v)).collect();
        let faces = d.quads().map(|q| q.corners().map(|v| index[&v])).collect();
        Self { vertices, faces }
    }

    pub fn from_orbit(o: &SymmetryOrbit) -> Self {
        Self { vertices: o.vertices.clone(), faces: o.faces.clone() }
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::with_capacity(64 * (self.vertices.len() + self.faces.len()));
        for p in &self.vertices {
            let _ = writeln!(s, "v {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
        }
        for f in &self.faces {
            let _ = writeln!(s, "f {} {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1, f[3] + 1);
        }
        s
    }
}

pub fn orbit_to_json(o: &SymmetryOrbit) -> Result<String> {
    let iso = |e: &Isometry| IsometryOut {
        linear: std::array::from_fn(|i| F17(e.linear[(i / 3, i % 3)])),
        translation: f17(&e.translation),
        proper: e.is_proper(),
    };
    let out = OrbitOut {
        kind: "orbit",
        elements: o.elements.iter().map(iso).collect(),
        closed: o.closed,
        weld_residual: F17(o.weld_residual),
        vertices: o.vertices.iter().map(f17).collect(),
        faces: o.faces.clone(),
    };
    let mut s = serde_json::to_string_pretty(&out).map_err(|e| Error::InvalidGrid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn orbit_from_json(text: &str) -> Result<QuadMesh> {
    let raw: OrbitIn = parse_json(text)?;
    if raw.kind != "orbit" {
        return Err(Error::Parse { line: line_of(text, "\"kind\""), msg: format!("expected kind \"orbit\", got {:?}", raw.kind) });
    }
    let nv = raw.vertices.len();
    if let Some(f) = raw.faces.iter().find(|f| f.iter().any(|&i| i >= nv)) {
        return Err(Error::Parse { line: line_of(text, "\"faces\""), msg: format!("face {f:?} references a missing vertex") });
    }
    Ok(QuadMesh { vertices: raw.vertices.into_iter().map(Vec3::from).collect(), faces: raw.faces })
}

/// A net file or an orbit file, told apart by `"kind": "orbit"`.
#[derive(Clone, Debug)]
pub enum MeshFile {
    Net(Box<NetDocument>),
    Orbit(QuadMesh),
}

impl MeshFile {
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Probe {
            #[serde(default)]
            kind: Option<String>,
        }
        let probe: Probe = parse_json(text)?;
        if probe.kind.as_deref() == Some("orbit") {
            Ok(MeshFile::Orbit(orbit_from_json(text)?))
        } else {
            Ok(MeshFile::Net(Box::new(NetDocument::from_json(text)?)))
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn mesh(&self) -> QuadMesh {
        match self {
            MeshFile::Net(d) => QuadMesh::from_net(&d.net),
            MeshFile::Orbit(m) => m.clone(),
        }
    }
}
