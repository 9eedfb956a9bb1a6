use minnet::bvp::{assemble_orbit, solve_knoid, SolveOptions};
use minnet::holomorphic::enneper_grid;
use minnet::io::{read_pair, write_pair, MeshFile, NetDocument, NetKind, QuadMesh, PAIR_FILES};
use minnet::minimal::MinimalPair;
use minnet::report::verify_pair;
use minnet::Error;

#[test]
fn pair_survives_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let pair = MinimalPair::from_grid(&enneper_grid(2, 10).unwrap()).unwrap();
    write_pair(&pair, dir.path()).unwrap();
    for name in PAIR_FILES {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let back = read_pair(dir.path()).unwrap();
    assert_eq!(back.f, pair.f);
    assert_eq!(back.f_tilde, pair.f_tilde);
    assert_eq!(back.normals, pair.normals);
    assert_eq!(back.g, pair.g);
    assert!(verify_pair(&back, 1e-9).passed);

    let iso = NetDocument::read(&dir.path().join(PAIR_FILES[0])).unwrap();
    assert_eq!(iso.kind, Some(NetKind::Isothermic));
    assert!(iso.links.is_some());
}

#[test]
fn orbit_file_matches_obj_export() {
    let dir = tempfile::tempdir().unwrap();
    let res = solve_knoid(3, 3, 10, &SolveOptions::default()).unwrap();
    let orbit = assemble_orbit(&res, 1e-9).unwrap();
    let path = dir.path().join("orbit.dnet.json");
    std::fs::write(&path, minnet::io::orbit_to_json(&orbit).unwrap()).unwrap();
    let mesh = match MeshFile::read(&path).unwrap() {
        MeshFile::Orbit(m) => m,
        MeshFile::Net(_) => panic!("orbit file read as a net"),
    };
    assert_eq!(mesh, QuadMesh::from_orbit(&orbit));
    let obj = mesh.to_obj();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), orbit.vertices.len());
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), orbit.faces.len());
}

#[test]
fn missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = NetDocument::read(&dir.path().join("absent.dnet.json")).unwrap_err();
    assert!(matches!(err, Error::Io(_)));
    assert!(err.is_usage());
}
