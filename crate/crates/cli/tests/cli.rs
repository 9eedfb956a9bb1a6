use std::path::Path;
use std::process::{Command, Output};

fn minnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minnet")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generate_enneper(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["generate", "enneper", "--k", "3", "--size", "8", "--out", p(dir)];
    args.extend_from_slice(extra);
    minnet(&args)
}

#[test]
fn enneper_orbit_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = minnet(&["generate", "enneper", "--k", "3", "--size", "20", "--orbit", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    let h = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "isothermic.mean_curvature").unwrap();
    assert!(h["max_residual"].as_f64().unwrap() <= 1e-9);
    let orbit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("orbit.dnet.json")).unwrap()).unwrap();
    assert_eq!(orbit["kind"], "orbit");
    assert_eq!(orbit["elements"].as_array().unwrap().len(), 8);
    let nv = orbit["vertices"].as_array().unwrap().len();
    assert!(nv < 8 * 21 * 21);
}

#[test]
fn usage_errors_exit_two() {
    let out = minnet(&["generate", "enneper", "--k", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = minnet(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_knoid_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = minnet(&["generate", "knoid", "--k", "3", "--nmax", "3", "--mmax", "1", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(err["error"], "InfeasibleSpec");
}

#[test]
fn verify_generated_and_corrupted() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(generate_enneper(dir.path(), &[]).status.code(), Some(0));
    let iso = dir.path().join("isothermic.dnet.json");
    assert_eq!(minnet(&["verify", p(&iso)]).status.code(), Some(0));
    assert_eq!(minnet(&["verify", p(dir.path())]).status.code(), Some(0));

    // move one coordinate of vertex (4, 4)
    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&iso).unwrap()).unwrap();
    let v = doc["vertices"].as_array_mut().unwrap().iter_mut().find(|v| v["m"] == 4 && v["n"] == 4).unwrap();
    let z = v["p"][2].as_f64().unwrap();
    v["p"][2] = serde_json::json!(z + 1e-3);
    let bad = dir.path().join("bad.dnet.json");
    std::fs::write(&bad, serde_json::to_string(&doc).unwrap()).unwrap();
    let report = dir.path().join("bad.json");
    let out = minnet(&["verify", p(&bad), "--report", p(&report)]);
    assert_eq!(out.status.code(), Some(1));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let c = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "circularity").unwrap();
    assert_eq!(c["passed"], false);
    let loc = c["location"].as_array().unwrap();
    assert!((3..=4).contains(&loc[0].as_i64().unwrap()) && (3..=4).contains(&loc[1].as_i64().unwrap()));
}

#[test]
fn asymptotic_as_isothermic_fails_circularity() {
    let dir = tempfile::tempdir().unwrap();
    generate_enneper(dir.path(), &[]);
    let asym = dir.path().join("asymptotic.dnet.json");
    assert_eq!(minnet(&["verify", p(&asym)]).status.code(), Some(0));
    let out = minnet(&["verify", p(&asym), "--as-isothermic"]);
    assert_eq!(out.status.code(), Some(1));
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let c = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "circularity").unwrap();
    assert_eq!(c["passed"], false);
}

#[test]
fn malformed_file_is_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("x.dnet.json");
    std::fs::write(&bad, "{\n  \"domain\": {\"m0\": 0,\n  oops\n}").unwrap();
    let out = minnet(&["verify", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(err["error"], "ParseError");
    assert!(err["message"].as_str().unwrap().contains("line 3"));
}

#[test]
fn reflect_conjugate_orbit_export() {
    let dir = tempfile::tempdir().unwrap();
    generate_enneper(dir.path(), &[]);
    let iso = dir.path().join("isothermic.dnet.json");
    let asym = dir.path().join("asymptotic.dnet.json");

    let refl = dir.path().join("refl.dnet.json");
    let out = minnet(&["reflect", p(&iso), "--line", "row:0", "--out", p(&refl)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rot = dir.path().join("rot.dnet.json");
    assert_eq!(minnet(&["reflect", p(&asym), "--line", "column:0", "--out", p(&rot)]).status.code(), Some(0));
    let out = minnet(&["reflect", p(&iso), "--line", "row:4", "--out", p(&refl)]);
    assert_eq!(out.status.code(), Some(2));

    let conj = dir.path().join("conj");
    assert_eq!(minnet(&["conjugate", p(&iso), "--out", p(&conj)]).status.code(), Some(0));
    assert_eq!(minnet(&["verify", p(&conj)]).status.code(), Some(0));

    let orbit = dir.path().join("orbit.dnet.json");
    assert_eq!(minnet(&["orbit", p(&iso), "--out", p(&orbit)]).status.code(), Some(0));
    assert_eq!(minnet(&["verify", p(&orbit)]).status.code(), Some(0));
    let obj = dir.path().join("orbit.obj");
    assert_eq!(minnet(&["export", p(&orbit), "--out", p(&obj)]).status.code(), Some(0));
    let text = std::fs::read_to_string(&obj).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("f ")).count() == 8 * 64);

    let piece = dir.path().join("piece.obj");
    assert_eq!(minnet(&["export", p(&iso), "--out", p(&piece)]).status.code(), Some(0));
    let text = std::fs::read_to_string(&piece).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 81);
    assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 64);
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = minnet(&["generate", "knoid", "--k", "3", "--nmax", "3", "--mmax", "10", "--out", p(d.path())]);
        assert_eq!(out.status.code(), Some(0));
    }
    for name in ["isothermic.dnet.json", "grid.dnet.json", "orbit.dnet.json", "orbit.obj", "solve.json", "report.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
}

#[test]
fn knoid_seed_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let out = minnet(&["generate", "knoid", "--k", "4", "--out", p(&first)]);
    assert_eq!(out.status.code(), Some(0));
    let second = dir.path().join("b");
    let seed = first.join("solve.json");
    let out = minnet(&["generate", "knoid", "--k", "4", "--seed-file", p(&seed), "--out", p(&second)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(second.join("solve.json")).unwrap()).unwrap();
    assert!(s["iterations"].as_u64().unwrap() <= 5);
}
