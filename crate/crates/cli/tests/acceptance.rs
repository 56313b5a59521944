//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{http, Server};
use meshgrade::engine::{grade, match_objects, pair_costs, score_polygon_ratio, CheckId, GradeReport};
use meshgrade::fixtures::{corpus, random, shapes};
use meshgrade::geometry::{frustum_coverage, infer_primitive, mesh_stats};
use meshgrade::rubric::Rubric;
use meshgrade::scene::{Camera, Mesh, PrimitiveType, Scene, SceneObject, Transform, Vec3};
use meshgrade::similarity::{digests_of, scan_duplicates};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::Value;

type Verdict = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const CONCRETE: [PrimitiveType; 6] = [
    PrimitiveType::Cube,
    PrimitiveType::UvSphere,
    PrimitiveType::Torus,
    PrimitiveType::Cylinder,
    PrimitiveType::Cone,
    PrimitiveType::Plane,
];

fn crown_rubric() -> Rubric {
    Rubric::from_scene("crown", corpus::rubric_scene()).unwrap()
}

fn deduction(report: &GradeReport, check: CheckId) -> f64 {
    report.deductions_by_check()[&check]
}

/// Distinct undirected edges by pairwise comparison of face-edge occurrences.
fn brute_force_edges(mesh: &Mesh) -> usize {
    let mut occurrences = Vec::new();
    for f in &mesh.faces {
        for k in 0..f.len() {
            occurrences.push((f[k], f[(k + 1) % f.len()]));
        }
    }
    (0..occurrences.len())
        .filter(|&i| {
            let (a, b) = occurrences[i];
            !occurrences[..i].iter().any(|&(c, d)| (a, b) == (c, d) || (a, b) == (d, c))
        })
        .count()
}

fn topology() -> Verdict {
    let mut cases: Vec<(String, Mesh, i64)> = Vec::new();
    for cuts in 1..=20 {
        cases.push((format!("cube/{cuts}"), shapes::subdivided_cube(1.0, cuts), 2));
    }
    for segments in [3, 4, 6, 8, 12] {
        for rings in [2, 3, 4, 6, 9] {
            cases.push((format!("sphere/{segments}x{rings}"), shapes::uv_sphere(1.0, segments, rings), 2));
        }
    }
    for segments in 3..=24 {
        cases.push((format!("cylinder/{segments}"), shapes::cylinder(1.0, 2.0, segments), 2));
    }
    for major in [3, 5, 8, 12, 24] {
        for minor in [3, 4, 6, 8] {
            cases.push((format!("torus/{major}x{minor}"), shapes::torus(1.0, 0.25, major, minor), 0));
        }
    }
    for (label, mesh, chi) in &cases {
        let stats = mesh_stats(mesh);
        let edges = brute_force_edges(mesh);
        check!(stats.edge_count == edges, "{label}: {} edges, oracle {edges}", stats.edge_count);
        check!(stats.euler_characteristic == *chi, "{label}: chi {}", stats.euler_characteristic);
    }
    Ok(format!("{} meshes (20 cubes, 25 spheres, 22 cylinders, 20 tori)", cases.len()))
}

fn classifier() -> Verdict {
    let mut rng = StdRng::seed_from_u64(31);
    let (mut clean, mut noisy, mut unknown) = (0, 0, 0);
    for _ in 0..40 {
        for kind in CONCRETE {
            let base = random::primitive_mesh(&mut rng, kind);
            let mesh = random::random_pose(&mut rng, &base);
            let got = infer_primitive(&mesh).primitive;
            check!(got == kind, "clean {kind:?} classified as {got:?}");
            clean += 1;

            let jittered = random::jitter(&mut rng, &mesh, 1e-6);
            let got = infer_primitive(&jittered).primitive;
            check!(got == kind || got == PrimitiveType::Unknown, "noisy {kind:?} classified as {got:?}");
            unknown += usize::from(got == PrimitiveType::Unknown);
            noisy += 1;
        }
    }
    Ok(format!("{clean}/{clean} clean correct, {noisy} noisy with 0 wrong ({unknown} unknown)"))
}

fn polygon_band() -> Verdict {
    let rubric = crown_rubric();
    let w = rubric.weights.w_polygon;
    let mut seen = Vec::new();
    for (faces, expected) in [(69, w), (70, 0.0), (100, 0.0), (130, 0.0), (131, w)] {
        let s = score_polygon_ratio(faces, 100, &rubric, "o").map_err(|e| e.to_string())?;
        check!(s.deduction == expected, "ratio {}: deduction {} expected {expected}", s.measured, s.deduction);
        seen.push(format!("{:.2}->{}", s.measured, s.deduction));
    }
    Ok(seen.join(" "))
}

fn self_identity() -> Verdict {
    let mut rng = StdRng::seed_from_u64(47);
    for i in 0..100 {
        let scene = random::random_scene(&mut rng);
        let rubric = Rubric::from_scene("r", scene.clone()).map_err(|e| e.to_string())?;
        let report = grade("s", &scene, &rubric).map_err(|e| e.to_string())?;
        check!(report.score == rubric.weights.max_score, "scene {i}: {} of {}", report.score, rubric.weights.max_score);
    }
    Ok("100/100 fuzzed scenes at full marks".into())
}

fn mistakes_corpus() -> Verdict {
    let rubric = crown_rubric();
    let w = rubric.weights;
    let graded = |scene: &Scene| grade("s", scene, &rubric).unwrap();

    let clean = graded(&corpus::clean());
    check!(clean.total_deduction() == 0.0, "clean fixture deducted {}", clean.total_deduction());
    let cube = graded(&corpus::crown_from_cube());
    check!(deduction(&cube, CheckId::PrimitiveType) == w.w_primitive_type, "crown-from-cube: {:?}", cube.deductions_by_check());
    let flipped = graded(&corpus::camera_flipped());
    check!(deduction(&flipped, CheckId::Camera) == w.w_camera, "flipped camera: {:?}", flipped.deductions_by_check());
    let half = graded(&corpus::half_extruded());
    check!(deduction(&half, CheckId::PolygonRatio) == w.w_polygon, "half-extruded: {:?}", half.deductions_by_check());
    let modifier = graded(&corpus::with_modifier());
    check!(deduction(&modifier, CheckId::Modifier) > 0.0, "modifier: {:?}", modifier.deductions_by_check());

    // cohort of distinct honest crowns plus one rigidly moved, reordered copy
    let mut rng = StdRng::seed_from_u64(53);
    let mut cohort: Vec<(String, Scene)> = (0..30)
        .map(|i| (format!("student{i:02}"), corpus::crown_variant(0.12 + 0.005 * i as f64)))
        .collect();
    let mut copy = cohort[7].1.clone();
    let moved = random::random_pose(&mut rng, &copy.objects[0].mesh);
    copy.objects[0].mesh = random::shuffle_mesh(&mut rng, &moved);
    cohort.push(("copier".into(), copy));
    cohort.push(("honest".into(), corpus::clean()));
    cohort.push(("honest2".into(), corpus::clean()));
    let report = scan_duplicates(&cohort, &digests_of(&rubric.scene));
    check!(report.clusters.len() == 1, "{} clusters: {:?}", report.clusters.len(), report.clusters);
    let members: BTreeSet<&str> = report.clusters[0].iter().map(|m| m.submission_id.as_str()).collect();
    check!(members == BTreeSet::from(["copier", "student07"]), "cluster {members:?}");

    Ok(format!(
        "clean 0, cube -{}, flipped camera -{}, half -{}, modifier -{}, 1 copy cluster",
        cube.total_deduction(),
        flipped.total_deduction(),
        half.total_deduction(),
        modifier.total_deduction()
    ))
}

fn scene_of(rng: &mut StdRng, count: usize, prefix: &str) -> Scene {
    let objects = (0..count)
        .map(|k| {
            let kind = CONCRETE[rng.gen_range(0..5)];
            SceneObject::new(format!("{prefix}{k}"), random::random_transform(rng), random::primitive_mesh(rng, kind))
        })
        .collect();
    Scene::new(objects, vec![]).unwrap()
}

fn exhaustive_min(costs: &[Vec<f64>], row: usize, used: &mut Vec<bool>, left: usize) -> f64 {
    if left == 0 {
        return 0.0;
    }
    if costs.len() - row < left {
        return f64::INFINITY;
    }
    let mut best = exhaustive_min(costs, row + 1, used, left);
    for j in 0..used.len() {
        if !used[j] {
            used[j] = true;
            best = best.min(costs[row][j] + exhaustive_min(costs, row + 1, used, left - 1));
            used[j] = false;
        }
    }
    best
}

fn matching() -> Verdict {
    let mut rng = StdRng::seed_from_u64(61);
    let mut worst = 0.0f64;
    for i in 0..500 {
        let (n, m) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let mut rubric = Rubric::from_scene("r", scene_of(&mut rng, m, "R")).unwrap();
        rubric.tolerances.match_cost_cutoff = f64::INFINITY;
        let submission = scene_of(&mut rng, n, "S");
        let found = match_objects(&submission, &rubric).total_cost();
        let (_, _, costs) = pair_costs(&submission, &rubric);
        let best = exhaustive_min(&costs, 0, &mut vec![false; m], n.min(m));
        let gap = (found - best).abs();
        check!(gap <= 1e-9 * (1.0 + best), "instance {i} ({n}x{m}): {found} vs exhaustive {best}");
        worst = worst.max(gap);
    }
    Ok(format!("500 instances, max gap {worst:.1e}"))
}

/// Area-uniform surface sampling with a frustum test written against the
/// camera basis vectors.
fn coverage_oracle(mesh: &Mesh, transform: &Transform, camera: &Camera, samples: usize, rng: &mut StdRng) -> f64 {
    let mut tris = Vec::new();
    let mut cumulative = Vec::new();
    let mut total = 0.0;
    for f in &mesh.faces {
        let p: Vec<Vec3> = f.iter().map(|&i| transform.apply(mesh.vertices[i as usize])).collect();
        for k in 1..p.len() - 1 {
            let (a, b, c) = (p[0], p[k], p[k + 1]);
            total += (b - a).cross(c - a).norm() / 2.0;
            tris.push((a, b, c));
            cumulative.push(total);
        }
    }
    let r = camera.transform.rotation;
    let eye = camera.transform.location;
    let forward = r.rotate(Vec3::new(0.0, 0.0, -1.0));
    let up = r.rotate(Vec3::new(0.0, 1.0, 0.0));
    let right = r.rotate(Vec3::new(1.0, 0.0, 0.0));
    let tan = (camera.fov_y / 2.0).tan();
    let mut inside = 0;
    for _ in 0..samples {
        let pick = rng.gen_range(0.0..total);
        let (a, b, c) = tris[cumulative.partition_point(|&x| x < pick).min(tris.len() - 1)];
        let (s, t): (f64, f64) = (rng.gen(), rng.gen());
        let s = s.sqrt();
        let p = a * (1.0 - s) + b * (s * (1.0 - t)) + c * (s * t);
        let d = p - eye;
        let depth = d.dot(forward);
        if depth >= camera.clip_near
            && depth <= camera.clip_far
            && d.dot(up).abs() <= depth * tan
            && d.dot(right).abs() <= depth * tan * camera.aspect
        {
            inside += 1;
        }
    }
    inside as f64 / samples as f64
}

fn frustum() -> Verdict {
    let mut rng = StdRng::seed_from_u64(71);
    let mut worst = 0.0f64;
    let mut partial = 0;
    let mut misses = Vec::new();
    for i in 0..50 {
        let kind = CONCRETE[i % 5];
        let mesh = random::primitive_mesh(&mut rng, kind);
        let transform = random::random_transform(&mut rng);
        // aim near the object so that coverage is often partial
        let target = transform.location + random::vec_in(&mut rng, 1.5);
        let eye = target + random::vec_in(&mut rng, 1.0) + Vec3::new(0.0, -6.0, 2.0);
        let camera = Camera::look_at("c", eye, target, rng.gen_range(0.2..0.8), rng.gen_range(0.75..1.8)).unwrap();
        let estimate = frustum_coverage(&mesh, &transform, &camera, 256).map_err(|e| e.to_string())?;
        let oracle = coverage_oracle(&mesh, &transform, &camera, 100_000, &mut rng);
        if (estimate - oracle).abs() > 0.1 {
            misses.push(format!("config {i} ({kind:?}, {} vertices): estimate {estimate:.3}, oracle {oracle:.3}", mesh.vertices.len()));
        }
        worst = worst.max((estimate - oracle).abs());
        partial += usize::from(oracle > 0.02 && oracle < 0.98);
    }
    check!(misses.is_empty(), "{} of 50 outside 0.1 (max error {worst:.3}): {}", misses.len(), misses.join("; "));
    Ok(format!("50 configurations ({partial} partially visible), max error {worst:.3}"))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_meshgrade")
}

fn meshgrade(args: &[&str]) -> std::process::Output {
    Command::new(bin()).args(args).output().expect("run meshgrade")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn batch() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    let out = meshgrade(&["fixtures", "--out-dir", path_str(root), "--batch", "500", "--seed", "9"]);
    check!(out.status.success(), "fixtures: {}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read(root.join("batch/crown_0000.sgf.json")).map_err(|e| e.to_string())?;
    let faces = meshgrade::parse_sgf(&first).unwrap().scene.objects[0].mesh.faces.len();
    let rubric = root.join("crown.rubric.json");
    let mut csvs = Vec::new();
    let mut times = Vec::new();
    for jobs in ["1", "8"] {
        let summary = root.join(format!("summary-{jobs}.csv"));
        let start = Instant::now();
        let out = meshgrade(&[
            "batch", "--rubric", path_str(&rubric), "--dir", path_str(&root.join("batch")),
            "--jobs", jobs, "--summary", path_str(&summary),
        ]);
        times.push(start.elapsed());
        check!(out.status.success(), "batch --jobs {jobs}: {}", String::from_utf8_lossy(&out.stderr));
        csvs.push(std::fs::read(&summary).map_err(|e| e.to_string())?);
    }
    check!(csvs[0] == csvs[1], "summary CSV differs between --jobs 1 and --jobs 8");
    let rows = csvs[0].iter().filter(|&&b| b == b'\n').count() - 1;
    check!(rows == 500, "{rows} rows");
    let slowest = times.iter().max().unwrap();
    check!(*slowest <= Duration::from_secs(10), "slowest run took {slowest:?}");
    Ok(format!(
        "500 crowns of {faces} faces, identical CSV, jobs=1 {:.2}s, jobs=8 {:.2}s on {} core(s)",
        times[0].as_secs_f64(),
        times[1].as_secs_f64(),
        std::thread::available_parallelism().map_or(1, |n| n.get())
    ))
}

fn service() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    let out = meshgrade(&["fixtures", "--out-dir", path_str(root), "--batch", "40", "--seed", "3"]);
    check!(out.status.success(), "fixtures failed");
    let rubric_path = root.join("crown.rubric.json");
    let store = root.join("records.log");

    let server = Server::start(bin(), &store);
    let (status, body) = http(&server.addr, "POST", "/v1/assignments", &std::fs::read(&rubric_path).unwrap()).unwrap();
    check!(status == 201, "create assignment: {status}");
    let assignment = serde_json::from_slice::<Value>(&body).unwrap()["assignment_id"].as_str().unwrap().to_owned();

    // report parity with the CLI over the mistakes corpus
    let mut files: Vec<_> = std::fs::read_dir(root.join("mistakes")).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    let submit_uri = format!("/v1/assignments/{assignment}/submissions");
    for file in &files {
        let (status, body) = http(&server.addr, "POST", &submit_uri, &std::fs::read(file).unwrap()).unwrap();
        check!(status == 201, "submit {}: {status}", file.display());
        let id = serde_json::from_slice::<Value>(&body).unwrap()["submission_id"].as_str().unwrap().to_owned();
        let (_, served) = http(&server.addr, "GET", &format!("/v1/submissions/{id}/report"), b"").unwrap();
        let local = meshgrade(&[
            "grade", "--rubric", path_str(&rubric_path), "--submission", path_str(file), "--submission-id", &id,
        ]);
        check!(local.status.success(), "cli grade failed");
        check!(served == local.stdout, "report for {} differs from the CLI", file.display());
    }

    // kill mid-stream; every acknowledged submission must survive
    let mut batch: Vec<_> = std::fs::read_dir(root.join("batch")).unwrap().map(|e| e.unwrap().path()).collect();
    batch.sort();
    let pid = server.pid();
    let killer = std::thread::spawn(move || {
        std::thread::sleep(Duration::from_millis(150));
        let _ = Command::new("kill").args(["-9", &pid.to_string()]).status();
    });
    let mut acknowledged = Vec::new();
    for file in batch.iter().cycle().take(2000) {
        match http(&server.addr, "POST", &submit_uri, &std::fs::read(file).unwrap()) {
            Ok((201, body)) => {
                let id = serde_json::from_slice::<Value>(&body).unwrap()["submission_id"].as_str().unwrap().to_owned();
                acknowledged.push(id);
            }
            _ => break,
        }
    }
    killer.join().unwrap();
    drop(server);

    let server = Server::start(bin(), &store);
    for id in &acknowledged {
        let (status, _) = http(&server.addr, "GET", &format!("/v1/submissions/{id}/report"), b"").unwrap();
        check!(status == 200, "acknowledged submission {id} lost after restart ({status})");
    }
    let (_, stats) = http(&server.addr, "GET", &format!("/v1/assignments/{assignment}/stats"), b"").unwrap();
    let count = serde_json::from_slice::<Value>(&stats).unwrap()["submission_count"].as_u64().unwrap();
    check!(count as usize >= files.len() + acknowledged.len(), "stats count {count}");
    Ok(format!(
        "{} reports byte-identical to the CLI, {} acknowledged before SIGKILL, all replayed",
        files.len(),
        acknowledged.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("topology", topology),
        ("classifier", classifier),
        ("polygon_band", polygon_band),
        ("self_identity", self_identity),
        ("mistakes_corpus", mistakes_corpus),
        ("matching", matching),
        ("frustum", frustum),
        ("batch", batch),
        ("service", service),
    ];
    let mut failures = 0;
    for (name, criterion) in criteria {
        let verdict = std::panic::catch_unwind(criterion).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match verdict {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
