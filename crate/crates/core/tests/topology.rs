use meshgrade::fixtures::{random, shapes};
use meshgrade::geometry::mesh_stats;
use meshgrade::scene::Mesh;
use proptest::prelude::*;
use rand::SeedableRng;

/// Counts distinct undirected edges by comparing every face-edge occurrence
/// with every earlier one.
fn brute_force_edges(mesh: &Mesh) -> usize {
    let mut occurrences = Vec::new();
    for f in &mesh.faces {
        for k in 0..f.len() {
            occurrences.push((f[k], f[(k + 1) % f.len()]));
        }
    }
    let mut distinct = 0;
    for (i, &(a, b)) in occurrences.iter().enumerate() {
        let seen = occurrences[..i]
            .iter()
            .any(|&(c, d)| (a == c && b == d) || (a == d && b == c));
        if !seen {
            distinct += 1;
        }
    }
    distinct
}

fn check(mesh: &Mesh, chi: i64, label: &str) {
    let stats = mesh_stats(mesh);
    let edges = brute_force_edges(mesh);
    assert_eq!(stats.edge_count, edges, "{label}: edge count");
    let euler = mesh.vertices.len() as i64 - edges as i64 + mesh.faces.len() as i64;
    assert_eq!(euler, chi, "{label}: oracle euler characteristic");
    assert_eq!(stats.euler_characteristic, chi, "{label}: euler characteristic");
    assert_eq!(stats.boundary_edge_count, 0, "{label}");
    assert_eq!(stats.nonmanifold_edge_count, 0, "{label}");
}

#[test]
fn cubes_have_euler_two() {
    check(&shapes::cube(2.0), 2, "cube");
    for cuts in 1..=20 {
        check(&shapes::subdivided_cube(2.0, cuts), 2, &format!("cube cuts={cuts}"));
    }
}

#[test]
fn uv_spheres_have_euler_two() {
    let mut n = 0;
    for segments in [3, 4, 8, 16, 32] {
        for rings in [2, 3, 5, 8, 16] {
            check(&shapes::uv_sphere(1.0, segments, rings), 2, &format!("sphere {segments}x{rings}"));
            n += 1;
        }
    }
    assert!(n >= 20);
}

#[test]
fn cylinders_have_euler_two() {
    for segments in 3..=24 {
        check(&shapes::cylinder(1.0, 2.0, segments), 2, &format!("cylinder {segments}"));
    }
}

#[test]
fn tori_have_euler_zero() {
    let mut n = 0;
    for major in [3, 4, 8, 16, 48] {
        for minor in [3, 4, 6, 12] {
            check(&shapes::torus(1.0, 0.25, major, minor), 0, &format!("torus {major}x{minor}"));
            n += 1;
        }
    }
    assert!(n >= 20);
}

#[test]
fn open_shapes_report_boundaries() {
    let plane = shapes::plane(1.0, 4);
    let stats = mesh_stats(&plane);
    assert_eq!(stats.edge_count, brute_force_edges(&plane));
    assert_eq!(stats.euler_characteristic, 1);
    assert_eq!(stats.boundary_edge_count, 16);
    assert!(!stats.is_closed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stats_ignore_element_order(seed in any::<u64>(), kind in 0usize..6) {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mesh = random::primitive_mesh(&mut rng, meshgrade::PrimitiveType::ALL[kind]);
        let shuffled = random::shuffle_mesh(&mut rng, &mesh);
        prop_assert_eq!(mesh_stats(&mesh), mesh_stats(&shuffled));
    }
}
