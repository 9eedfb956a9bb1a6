use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use minnet::bvp::{assemble_orbit, solve_knoid, solve_platonic, PlatonicPreset, SolveOptions, SolveResult};
use minnet::holomorphic::{enneper_grid, planar_enneper_grid, HoloGrid};
use minnet::io::{orbit_to_json, write_pair, MeshFile, NetDocument, NetKind, QuadMesh, PAIR_FILES};
use minnet::minimal::MinimalPair;
use minnet::mobius::stereographic_project;
use minnet::net::Net3;
use minnet::reflection::{
    boundary_half_turns, boundary_reflections, build_orbit, reflect_isothermic, rotate_extend_asymptotic, BoundaryLine,
    SymmetryOrbit,
};
use minnet::report::{verify_document, verify_mesh, verify_orbit, verify_pair, VerificationReport};
use minnet::Error;

#[derive(Parser)]
#[command(name = "minnet", version, about = "Discrete minimal nets: generation, reflection, orbits and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Verification tolerance
    #[arg(long, default_value_t = 1e-9, global = true)]
    tol: f64,
    /// Where to write the JSON report (default: stdout, or report.json in the output directory)
    #[arg(long, global = true)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a minimal pair, optionally with its symmetric orbit
    Generate {
        #[command(subcommand)]
        family: Family,
        #[command(flatten)]
        common: Common,
        /// Output directory
        #[arg(long, default_value = "out", global = true)]
        out: PathBuf,
    },
    /// Build the minimal pair of a grid file, or of an isothermic net with normals
    Conjugate {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Extend a net across a boundary line: `row:N` or `column:M`
    Reflect {
        input: PathBuf,
        #[arg(long, value_parser = parse_line)]
        line: BoundaryLine,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Copy a piece by the group generated by its boundary symmetries
    Orbit {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Longest generator word explored
        #[arg(long, default_value_t = 64)]
        max_word: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Check every invariant of a net file, orbit file or pair directory
    Verify {
        input: PathBuf,
        /// Treat the net as isothermic whatever its kind
        #[arg(long)]
        as_isothermic: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Write a net or orbit file as an OBJ quad mesh
    Export {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum Family {
    /// Enneper surface of order k
    Enneper {
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(i32).range(2..))]
        size: i32,
        #[arg(long)]
        orbit: bool,
    },
    /// Planar Enneper surface
    PlanarEnneper {
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(i32).range(2..))]
        size: i32,
        #[arg(long)]
        orbit: bool,
    },
    /// k-noid fundamental piece and orbit
    Knoid {
        #[arg(long, default_value_t = 3)]
        k: u32,
        #[arg(long, default_value_t = 3)]
        nmax: usize,
        #[arg(long, default_value_t = 10)]
        mmax: usize,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        /// JSON file with a start vector (`params` of an earlier solve)
        #[arg(long)]
        seed_file: Option<PathBuf>,
    },
    /// Surface with tetrahedral or octahedral symmetry
    Platonic {
        #[arg(long)]
        preset: PlatonicPreset,
        #[arg(long, default_value_t = 3)]
        resolution: usize,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        #[arg(long)]
        seed_file: Option<PathBuf>,
    },
}

fn parse_line(s: &str) -> Result<BoundaryLine, String> {
    let (kind, idx) = s.split_once(':').ok_or("expected row:N or column:M")?;
    let i: i32 = idx.parse().map_err(|e| format!("{e}"))?;
    match kind {
        "row" => Ok(BoundaryLine::Row(i)),
        "column" | "col" => Ok(BoundaryLine::Column(i)),
        _ => Err(format!("unknown line kind {kind:?}")),
    }
}

enum Failure {
    Lib(Error),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("MINNET_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Lib(e)) => {
            let mut err = json!({ "error": e.kind(), "message": e.to_string() });
            if let Error::NoConvergence { iterations, residual, best } = &e {
                err["iterations"] = json!(iterations);
                err["residual"] = json!(residual);
                err["cross_ratio_residual"] = json!(best.cross_ratio_residual);
                err["boundary_residual"] = json!(best.boundary_residual);
            }
            println!("{err}");
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 3 })
        }
    }
}

fn emit(report: &VerificationReport, path: Option<&Path>) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, report.to_json()).map_err(Error::from)?,
        None => print!("{}", report.to_json()),
    }
    eprint!("{}", report.summary());
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
    }
    std::fs::write(path, text).map_err(Error::from)?;
    Ok(())
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Generate { family, common, out } => generate(family, &common, &out),
        Command::Conjugate { input, out, common } => {
            let doc = NetDocument::read(&input)?;
            let g = grid_of(&doc)?;
            let pair = MinimalPair::from_grid(&g)?;
            write_pair(&pair, &out)?;
            let report = verify_pair(&pair, common.tol);
            emit(&report, Some(&common.report.unwrap_or_else(|| out.join("report.json"))))
        }
        Command::Reflect { input, line, out, common } => {
            let doc = NetDocument::read(&input)?;
            let result = match doc.kind {
                Some(NetKind::Asymptotic) => {
                    let (f, _) = rotate_extend_asymptotic(&doc.net, line, common.tol)?;
                    NetDocument::new(f).with_kind(NetKind::Asymptotic)
                }
                _ => {
                    let n = normals_of(&doc)?;
                    let ext = reflect_isothermic(&doc.net, n, line, common.tol)?;
                    let labels = minnet::reflection::mirror_labels(&doc.labels_or_square(), &doc.net.domain, line)?;
                    NetDocument::new(ext.f).with_kind(NetKind::Isothermic).with_labels(labels).with_normals(ext.normals)
                }
            };
            write(&out, &result.to_json()?)?;
            emit(&verify_document(&result, common.tol, false), common.report.as_deref())
        }
        Command::Orbit { input, out, max_word, common } => {
            let doc = NetDocument::read(&input)?;
            let gens = match doc.kind {
                Some(NetKind::Asymptotic) => boundary_half_turns(&doc.net, common.tol),
                _ => boundary_reflections(&doc.net, normals_of(&doc)?, common.tol),
            };
            if gens.is_empty() {
                return Err(Error::NotReflectable("no planar or straight boundary line".into()).into());
            }
            let orbit = build_orbit(&doc.net, &gens, max_word)?;
            write(&out, &orbit_to_json(&orbit)?)?;
            emit(&verify_orbit(&orbit, common.tol), common.report.as_deref())
        }
        Command::Verify { input, as_isothermic, common } => {
            let report = if input.is_dir() {
                verify_pair(&minnet::io::read_pair(&input)?, common.tol)
            } else {
                match MeshFile::read(&input)? {
                    MeshFile::Net(doc) => verify_document(&doc, common.tol, as_isothermic),
                    MeshFile::Orbit(mesh) => verify_mesh(&mesh, common.tol),
                }
            };
            emit(&report, common.report.as_deref())
        }
        Command::Export { input, out } => {
            let mesh = MeshFile::read(&input)?.mesh();
            write(&out, &mesh.to_obj())
        }
    }
}

fn normals_of(doc: &NetDocument) -> Result<&Net3, Error> {
    doc.normals.as_ref().ok_or_else(|| Error::InvalidGrid("net file has no normals".into()))
}

/// Grid of a grid file, or the stereographic projection of the normals of a net file.
fn grid_of(doc: &NetDocument) -> Result<HoloGrid, Error> {
    if doc.kind == Some(NetKind::Grid) {
        return doc.to_grid();
    }
    let n = normals_of(doc)?;
    Ok(HoloGrid::from_fn(doc.net.domain.clone(), doc.labels_or_square(), |v| stereographic_project(&n.at(v))))
}

fn read_seed(path: &Path) -> Result<Vec<f64>, Error> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
    let list = value.get("params").unwrap_or(&value);
    serde_json::from_value(list.clone()).map_err(|e| Error::Parse { line: 0, msg: format!("seed: {e}") })
}

fn solve_record(res: &SolveResult) -> String {
    let mut s = serde_json::to_string_pretty(&json!({
        "spec": res.spec,
        "params": res.params,
        "cross_ratio_residual": res.cross_ratio_residual,
        "boundary_residual": res.boundary_residual,
        "iterations": res.iterations,
        "converged": res.converged,
    }))
    .expect("solve record serializes");
    s.push('\n');
    s
}

fn write_orbit(orbit: &SymmetryOrbit, out: &Path) -> Result<(), Failure> {
    write(&out.join("orbit.dnet.json"), &orbit_to_json(orbit)?)?;
    write(&out.join("orbit.obj"), &QuadMesh::from_orbit(orbit).to_obj())
}

fn generate(family: Family, common: &Common, out: &Path) -> Result<(), Failure> {
    let tol = common.tol;
    let (pair, orbit) = match family {
        Family::Enneper { k, size, orbit } => piece_with_orbit(&enneper_grid(k, size)?, orbit, tol)?,
        Family::PlanarEnneper { size, orbit } => piece_with_orbit(&planar_enneper_grid(size)?, orbit, tol)?,
        Family::Knoid { k, nmax, mmax, max_iter, seed_file } => {
            let opts = solve_options(tol, max_iter, seed_file.as_deref())?;
            let res = solve_knoid(k, nmax, mmax, &opts)?;
            bvp_outputs(&res, tol, out)?
        }
        Family::Platonic { preset, resolution, max_iter, seed_file } => {
            let opts = solve_options(tol, max_iter, seed_file.as_deref())?;
            let res = solve_platonic(preset, resolution, &opts)?;
            bvp_outputs(&res, tol, out)?
        }
    };
    write_pair(&pair, out)?;
    let mut report = verify_pair(&pair, tol);
    if let Some(o) = &orbit {
        write_orbit(o, out)?;
        report.extend(verify_orbit(o, tol));
    }
    let path = common.report.clone().unwrap_or_else(|| out.join("report.json"));
    eprintln!("wrote {} and report {}", PAIR_FILES.join(", "), path.display());
    emit(&report, Some(&path))
}

fn solve_options(tol: f64, max_iter: usize, seed: Option<&Path>) -> Result<SolveOptions, Error> {
    Ok(SolveOptions { tol: tol.min(1e-10), max_iter, seed: seed.map(read_seed).transpose()? })
}

fn piece_with_orbit(g: &HoloGrid, orbit: bool, tol: f64) -> Result<(MinimalPair, Option<SymmetryOrbit>), Error> {
    let pair = MinimalPair::from_grid(g)?;
    let orbit = if orbit {
        let gens = boundary_reflections(&pair.f, &pair.normals, tol);
        Some(build_orbit(&pair.f, &gens, 64)?)
    } else {
        None
    };
    Ok((pair, orbit))
}

fn bvp_outputs(res: &SolveResult, tol: f64, out: &Path) -> Result<(MinimalPair, Option<SymmetryOrbit>), Failure> {
    write(&out.join("solve.json"), &solve_record(res))?;
    let pair = MinimalPair::from_grid(&res.grid)?;
    let orbit = assemble_orbit(res, tol.max(1e-8))?;
    Ok((pair, Some(orbit)))
}
