use std::collections::{BTreeSet, HashSet};

use meshgrade::fixtures::{random, shapes};
use meshgrade::scene::{Mesh, Scene, SceneObject, Transform, Vec3};
use meshgrade::similarity::{mesh_fingerprint, scan_duplicates};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

/// Random triangle soup over 20..40 random points: no symmetry to speak of.
fn random_mesh(rng: &mut impl Rng) -> Mesh {
    let n = rng.gen_range(20..40);
    let vertices: Vec<Vec3> = (0..n).map(|_| random::vec_in(rng, 1.0)).collect();
    let faces = (0..rng.gen_range(10..40))
        .map(|_| {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.shuffle(rng);
            idx[..3].to_vec()
        })
        .collect();
    Mesh { vertices, faces }
}

fn digest(mesh: &Mesh) -> String {
    mesh_fingerprint(mesh).unwrap().digest
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn invariant_under_similarity_and_reordering(seed in any::<u64>()) {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mesh = random_mesh(&mut rng);
        let posed = random::random_pose(&mut rng, &mesh);
        let shuffled = random::shuffle_mesh(&mut rng, &posed);
        prop_assert_eq!(digest(&mesh), digest(&shuffled));
    }

    #[test]
    fn symmetric_primitives_are_invariant_too(seed in any::<u64>(), kind in 0usize..5) {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mesh = random::primitive_mesh(&mut rng, meshgrade::PrimitiveType::ALL[kind]);
        let posed = random::random_pose(&mut rng, &mesh);
        let shuffled = random::shuffle_mesh(&mut rng, &posed);
        prop_assert_eq!(digest(&mesh), digest(&shuffled));
    }

    #[test]
    fn scan_ignores_input_order(seed in any::<u64>()) {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let pool: Vec<Mesh> = (0..4).map(|_| random_mesh(&mut rng)).collect();
        let mut subs: Vec<(String, Scene)> = (0..10)
            .map(|i| {
                let pick = rng.gen_range(0..pool.len());
                let mesh = random::random_pose(&mut rng, &pool[pick]);
                let scene = Scene::new(vec![SceneObject::new("M", Transform::IDENTITY, mesh)], vec![]).unwrap();
                (format!("s{i}"), scene)
            })
            .collect();
        let before = scan_duplicates(&subs, &BTreeSet::new());
        subs.shuffle(&mut rng);
        prop_assert_eq!(before, scan_duplicates(&subs, &BTreeSet::new()));
    }
}

#[test]
fn no_collisions_among_random_meshes() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(1234);
    let mut seen = HashSet::new();
    for _ in 0..10_000 {
        assert!(seen.insert(digest(&random_mesh(&mut rng))));
    }
}

#[test]
fn different_tessellations_differ() {
    let a = digest(&shapes::uv_sphere(1.0, 16, 8));
    let b = digest(&shapes::uv_sphere(1.0, 16, 9));
    let c = digest(&shapes::uv_sphere(3.0, 16, 8));
    assert_ne!(a, b);
    assert_eq!(a, c);
}
