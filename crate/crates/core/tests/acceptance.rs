//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use minnet::bvp::{assemble_orbit, solve_knoid, solve_platonic, symmetry_generators, PlatonicPreset, SolveOptions, SolveResult};
use minnet::holomorphic::{enneper_grid, planar_enneper_grid, power_function, propagate_fourth, HoloGrid};
use minnet::minimal::{
    closure_residual, is_asymptotic, mean_curvature_report, mixed_area, quad_curvatures, tangent_normals, MinimalPair,
};
use minnet::mobius::{cross_ratio_complex, cross_ratio_quat, stereographic_lift, CInf, Complex, Vec3};
use minnet::net::{circularity_report, is_isothermic, LatticeDomain, Net3};
use minnet::reflection::{
    analyze_boundary_asymptotic, analyze_boundary_isothermic, build_orbit, corner_angles, faces_preserved, is_group_closed,
    mirror_labels, orbit_permutation, reflect_isothermic, rotate_extend_asymptotic, BoundaryKind, BoundaryLine,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn grid(name: &str) -> HoloGrid {
    match name {
        "identity" => HoloGrid::identity(LatticeDomain::rect(0, 20, 0, 20)),
        "z^3/2" => power_function(1.5, 20, 20).unwrap(),
        "z^4/3" => power_function(4.0 / 3.0, 20, 20).unwrap(),
        "z^3" => power_function(3.0, 20, 20).unwrap(),
        _ => unreachable!(),
    }
}

const GRIDS: [&str; 4] = ["identity", "z^3/2", "z^4/3", "z^3"];

fn test_grids() -> Vec<(&'static str, HoloGrid)> {
    GRIDS.iter().map(|&n| (n, grid(n))).collect()
}

fn criterion_1() -> Outcome {
    let mut worst = (0.0f64, 0.0f64, 0.0f64, Duration::ZERO);
    for name in GRIDS {
        let start = Instant::now();
        let g = grid(name);
        let pair = MinimalPair::from_grid(&g).map_err(|e| format!("{name}: {e}"))?;
        let circ = circularity_report(&pair.f, 1e-9);
        let h = mean_curvature_report(&pair.f, &pair.normals, 1e-9).map_err(|e| format!("{name}: {e}"))?;
        let closure = closure_residual(&g, false)
            .map_err(|e| e.to_string())?
            .max(closure_residual(&g, true).map_err(|e| e.to_string())?);
        let elapsed = start.elapsed();
        ensure(circ.passed, || format!("{name}: quad {:?} not circular ({:e})", circ.worst, circ.max_residual))?;
        ensure(h.passed, || format!("{name}: |H| = {:e} at {:?}", h.max_residual, h.worst))?;
        ensure(closure <= 1e-9, || format!("{name}: closure {closure:e}"))?;
        ensure(elapsed < Duration::from_secs(1), || format!("{name}: took {elapsed:?}"))?;
        worst = (
            worst.0.max(circ.max_residual),
            worst.1.max(h.max_residual),
            worst.2.max(closure),
            worst.3.max(elapsed),
        );
    }
    Ok(format!(
        "circularity {:.1e}, |H| {:.1e}, closure {:.1e}, slowest {:?}",
        worst.0, worst.1, worst.2, worst.3
    ))
}

fn criterion_2() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for (name, g) in test_grids() {
        let pair = MinimalPair::from_grid(&g).map_err(|e| e.to_string())?;
        let a = is_asymptotic(&pair.f_tilde, 1e-9);
        ensure(a.passed, || format!("{name}: {a:?}"))?;
        let tn = tangent_normals(&pair.f_tilde).map_err(|e| e.to_string())?;
        let mut dev = 0.0f64;
        for v in g.domain.vertices() {
            let lift = stereographic_lift(g.at(v));
            let t = tn.at(v);
            dev = dev.max((t - lift).norm().min((t + lift).norm()));
        }
        ensure(dev <= 1e-9, || format!("{name}: normals deviate by {dev:e}"))?;
        worst = (worst.0.max(a.max_star_residual), worst.1.max(dev));
    }
    Ok(format!("star coplanarity {:.1e}, normal deviation {:.1e}", worst.0, worst.1))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pairs: Vec<MinimalPair> = test_grids()
        .into_iter()
        .map(|(_, g)| g)
        .chain([enneper_grid(3, 12).unwrap(), planar_enneper_grid(12).unwrap()])
        .map(|g| MinimalPair::from_grid(&g).unwrap())
        .collect();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let pair = &pairs[rng.gen_range(0..pairs.len())];
        let quads: Vec<_> = pair.f.domain.quads().collect();
        let q = quads[rng.gen_range(0..quads.len())];
        let t: f64 = rng.gen_range(-1.0..=1.0);
        let (qf, qn) = (pair.f.quad_points(q), pair.normals.quad_points(q));
        let c = quad_curvatures(&qf, &qn).map_err(|e| e.to_string())?;
        let af = mixed_area(&qf, &qf).map_err(|e| e.to_string())?;
        let qt: [Vec3; 4] = std::array::from_fn(|i| qf[i] + t * qn[i]);
        let at = mixed_area(&qt, &qt).map_err(|e| e.to_string())?;
        let r = (at - (1.0 - 2.0 * t * c.h + t * t * c.k) * af).norm() / af.norm();
        ensure(r <= 1e-9, || format!("quad {q:?}, t = {t}: relative error {r:e}"))?;
        worst = worst.max(r);
    }
    Ok(format!("100 quads, worst relative error {worst:.1e}"))
}

fn knoid(k: u32) -> Result<SolveResult, String> {
    solve_knoid(k, 3, 10, &SolveOptions::default()).map_err(|e| format!("k = {k}: {e}"))
}

fn criterion_4() -> Outcome {
    let mut cases: Vec<(String, MinimalPair, f64)> = Vec::new();
    for k in 2..=4u32 {
        let g = enneper_grid(k, 10).map_err(|e| e.to_string())?;
        cases.push((format!("Enneper k={k}"), MinimalPair::from_grid(&g).unwrap(), PI / (k as f64 + 1.0)));
    }
    cases.push(("planar Enneper".into(), MinimalPair::from_grid(&planar_enneper_grid(10).unwrap()).unwrap(), PI / 2.0));
    for k in 3..=5u32 {
        let res = knoid(k)?;
        cases.push((format!("{k}-noid"), MinimalPair::from_grid(&res.grid).unwrap(), PI / k as f64));
    }
    let (mut angle_err, mut sum_err) = (0.0f64, 0.0f64);
    for (name, pair, expected) in &cases {
        let (p, q) = corner_angles(&pair.f, &pair.normals, (0, 0)).map_err(|e| format!("{name}: {e}"))?;
        ensure((p - expected).abs() <= 1e-6, || format!("{name}: angle {p}, expected {expected}"))?;
        ensure((p + q - PI).abs() <= 1e-9, || format!("{name}: P + Q − π = {:e}", p + q - PI))?;
        angle_err = angle_err.max((p - expected).abs());
        sum_err = sum_err.max((p + q - PI).abs());
    }
    Ok(format!("{} corners, angle error {angle_err:.1e}, |P+Q−π| {sum_err:.1e}", cases.len()))
}

fn boundary_lines(f: &Net3) -> Vec<BoundaryLine> {
    let d = &f.domain;
    vec![BoundaryLine::Row(d.n0), BoundaryLine::Row(d.n1), BoundaryLine::Column(d.m0), BoundaryLine::Column(d.m1)]
}

fn criterion_5() -> Outcome {
    let mut examples: Vec<(String, MinimalPair)> = Vec::new();
    for (name, g) in test_grids() {
        examples.push((name.to_string(), MinimalPair::from_grid(&g).unwrap()));
    }
    for k in 2..=4u32 {
        examples.push((format!("Enneper k={k}"), MinimalPair::from_grid(&enneper_grid(k, 10).unwrap()).unwrap()));
    }
    examples.push(("planar Enneper".into(), MinimalPair::from_grid(&planar_enneper_grid(10).unwrap()).unwrap()));
    for k in 3..=5u32 {
        examples.push((format!("{k}-noid"), MinimalPair::from_grid(&knoid(k)?.grid).unwrap()));
    }
    let mut extensions = 0;
    let mut worst = 0.0f64;
    let mut duality_rows = 0;
    for (name, pair) in &examples {
        for line in boundary_lines(&pair.f) {
            let iso = analyze_boundary_isothermic(&pair.f, &pair.normals, line, 1e-9);
            let asym = analyze_boundary_asymptotic(&pair.f_tilde, line, 1e-9);
            let planar = matches!(iso.kind, BoundaryKind::PlanarCurvatureLine(_));
            let straight = matches!(asym.kind, BoundaryKind::StraightAsymptoticLine(_));
            duality_rows += 1;
            ensure(planar == straight, || format!("{name} {line:?}: planar {planar}, straight {straight}"))?;
            if !planar {
                continue;
            }
            worst = worst.max(iso.congruence_residual).max(asym.congruence_residual);
            let ext = reflect_isothermic(&pair.f, &pair.normals, line, 1e-9).map_err(|e| format!("{name} {line:?}: {e}"))?;
            let labels = mirror_labels(&pair.g.labels, &pair.f.domain, line).map_err(|e| e.to_string())?;
            let circ = circularity_report(&ext.f, 1e-9);
            ensure(circ.passed, || format!("{name} {line:?}: extension not circular ({:e})", circ.max_residual))?;
            let iso_rep = is_isothermic(&ext.f, &labels, 1e-9).map_err(|e| e.to_string())?;
            ensure(iso_rep.passed, || format!("{name} {line:?}: extension not isothermic ({:e})", iso_rep.max_residual))?;
            let h = mean_curvature_report(&ext.f, &ext.normals, 1e-9).map_err(|e| e.to_string())?;
            ensure(h.passed, || format!("{name} {line:?}: extension |H| = {:e}", h.max_residual))?;
            let (rot, _) = rotate_extend_asymptotic(&pair.f_tilde, line, 1e-9).map_err(|e| format!("{name} {line:?}: {e}"))?;
            let a = is_asymptotic(&rot, 1e-9);
            ensure(a.passed, || format!("{name} {line:?}: rotated extension not asymptotic ({a:?})"))?;
            worst = worst.max(circ.max_residual).max(iso_rep.max_residual).max(h.max_residual).max(a.max_star_residual);
            extensions += 1;
        }
    }
    Ok(format!(
        "{extensions} extensions of each kind, {duality_rows} boundary lines agree, worst residual {worst:.1e}"
    ))
}

fn criterion_6() -> Outcome {
    let pair = MinimalPair::from_grid(&enneper_grid(3, 10).unwrap()).unwrap();
    let gens: Vec<_> = [BoundaryLine::Row(0), BoundaryLine::Column(0)]
        .iter()
        .map(|&l| analyze_boundary_isothermic(&pair.f, &pair.normals, l, 1e-9).plane().map(minnet::mobius::Isometry::reflection))
        .collect::<Option<_>>()
        .ok_or("boundary not planar")?;
    let orbit = build_orbit(&pair.f, &gens, 64).map_err(|e| e.to_string())?;
    ensure(orbit.closed && orbit.elements.len() == 8, || format!("order {}", orbit.elements.len()))?;
    ensure(is_group_closed(&orbit.elements, orbit.scale), || "elements not closed under composition".into())?;
    let weld = orbit.weld_residual / orbit.scale;
    ensure(weld <= 1e-9, || format!("weld residual {weld:e}"))?;
    for (i, g) in gens.iter().enumerate() {
        let perm = orbit_permutation(&orbit, g, 1e-9).ok_or_else(|| format!("generator {i} does not permute vertices"))?;
        ensure(faces_preserved(&orbit, &perm), || format!("generator {i} does not permute faces"))?;
    }
    Ok(format!("order 8, weld residual {weld:.1e}, {} welded vertices", orbit.vertices.len()))
}

fn criterion_7() -> Outcome {
    let mut lines = Vec::new();
    for k in 3..=5u32 {
        let start = Instant::now();
        let res = knoid(k)?;
        let elapsed = start.elapsed();
        ensure(res.cross_ratio_residual <= 1e-8, || format!("k = {k}: cross ratio {:e}", res.cross_ratio_residual))?;
        ensure(res.boundary_residual <= 1e-6, || format!("k = {k}: boundary {:e}", res.boundary_residual))?;
        ensure(res.iterations <= 500, || format!("k = {k}: {} iterations", res.iterations))?;
        ensure(elapsed < Duration::from_secs(60), || format!("k = {k}: {elapsed:?}"))?;
        let (_, gens) = symmetry_generators(&res, 1e-8).map_err(|e| e.to_string())?;
        let rotation = gens[0].compose(&gens[1]);
        let angle = ((rotation.linear.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos();
        ensure((angle - 2.0 * PI / k as f64).abs() < 1e-6, || format!("k = {k}: rotation angle {angle}"))?;
        let orbit = assemble_orbit(&res, 1e-8).map_err(|e| e.to_string())?;
        ensure(orbit.closed && orbit.elements.len() == 4 * k as usize, || format!("k = {k}: order {}", orbit.elements.len()))?;
        let perm = orbit_permutation(&orbit, &rotation, 1e-5).ok_or_else(|| format!("k = {k}: not rotation invariant"))?;
        ensure(faces_preserved(&orbit, &perm), || format!("k = {k}: rotation does not permute faces"))?;
        lines.push(format!(
            "k={k}: cr {:.1e}, boundary {:.1e}, {} it, {:.2?}",
            res.cross_ratio_residual, res.boundary_residual, res.iterations, elapsed
        ));
    }
    for preset in [PlatonicPreset::Tetrahedral, PlatonicPreset::Octahedral] {
        let res = solve_platonic(preset, 3, &SolveOptions::default()).map_err(|e| format!("{}: {e}", preset.name()))?;
        let orbit = assemble_orbit(&res, 1e-8).map_err(|e| e.to_string())?;
        ensure(orbit.closed && orbit.elements.len() == preset.group_order(), || {
            format!("{}: order {}", preset.name(), orbit.elements.len())
        })?;
        ensure(orbit.proper_count() == preset.rotation_order(), || format!("{}: {} rotations", preset.name(), orbit.proper_count()))?;
        ensure(is_group_closed(&orbit.elements, orbit.scale), || format!("{}: not a group", preset.name()))?;
        lines.push(format!("{}: cr {:.1e}, {} rotations", preset.name(), res.cross_ratio_residual, orbit.proper_count()));
    }
    Ok(lines.join("; "))
}

/// Cross ratio of four complex numbers by direct complex arithmetic.
fn complex_oracle(z: [Complex; 4]) -> Complex {
    (z[0] - z[1]) / (z[1] - z[2]) * (z[2] - z[3]) / (z[3] - z[0])
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let center = Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let radius = rng.gen_range(0.1..10.0);
        let normal = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize();
        let e1 = normal.cross(&Vec3::new(0.3, -0.5, 0.8)).normalize();
        let e2 = normal.cross(&e1);
        let mut angles: Vec<f64> = Vec::new();
        while angles.len() < 4 {
            let a: f64 = rng.gen_range(0.0..2.0 * PI);
            if angles.iter().all(|b| (a - b).abs().min(2.0 * PI - (a - b).abs()) > 0.05) {
                angles.push(a);
            }
        }
        let pts: Vec<Vec3> = angles.iter().map(|a| center + radius * (a.cos() * e1 + a.sin() * e2)).collect();
        let z: [Complex; 4] = std::array::from_fn(|i| {
            let d = pts[i] - center;
            Complex::new(d.dot(&e1), d.dot(&e2))
        });
        let oracle = complex_oracle(z);
        let cr = cross_ratio_quat(&pts[0], &pts[1], &pts[2], &pts[3]).map_err(|e| e.to_string())?;
        let err = (cr.re - oracle.re).abs().max((cr.im_mag - oracle.im.abs()).abs()) / oracle.norm().max(1.0);
        ensure(err <= 1e-10, || format!("quad {pts:?}: {cr:?} vs {oracle}"))?;
        worst = worst.max(err);
    }
    let mut round = 0.0f64;
    for _ in 0..1000 {
        let g: [CInf; 3] = std::array::from_fn(|_| CInf::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)));
        let q = rng.gen_range(-4.0..-0.25);
        let g3 = propagate_fourth(g[0], g[1], g[2], q).map_err(|e| e.to_string())?;
        let back = cross_ratio_complex(g[0], g[1], g3, g[2]).map_err(|e| e.to_string())?;
        let back = back.finite().ok_or("cross ratio at infinity")?;
        let err = (back - Complex::new(q, 0.0)).norm() / q.abs();
        ensure(err <= 1e-12, || format!("g = {g:?}, q = {q}: round trip error {err:e}"))?;
        round = round.max(err);
    }
    Ok(format!("oracle agreement {worst:.1e} on 1000 quads, round trip {round:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("Weierstrass validity", criterion_1),
        ("conjugate asymptotic net", criterion_2),
        ("Steiner identity", criterion_3),
        ("corner angles", criterion_4),
        ("reflection and duality", criterion_5),
        ("Enneper orbit closure", criterion_6),
        ("k-noid and Platonic solves", criterion_7),
        ("cross-ratio oracle and round trip", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {} ({name}): PASS  {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL  {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
