use meshgrade::fixtures::{corpus, random, shapes};
use meshgrade::geometry::{frustum_coverage, rotation_distance};
use meshgrade::scene::{Camera, Quaternion, Transform, Vec3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;

fn quats(seed: u64) -> (Quaternion, Quaternion, Quaternion) {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    (
        random::unit_quaternion(&mut rng),
        random::unit_quaternion(&mut rng),
        random::unit_quaternion(&mut rng),
    )
}

fn neg(q: Quaternion) -> Quaternion {
    Quaternion::new(-q.w, -q.x, -q.y, -q.z).unwrap()
}

proptest! {
    #[test]
    fn rotation_distance_is_a_metric(seed in any::<u64>()) {
        let (a, b, c) = quats(seed);
        let ab = rotation_distance(a, b);
        prop_assert!((ab - rotation_distance(b, a)).abs() < 1e-9);
        prop_assert!(rotation_distance(a, a).abs() < 1e-9);
        prop_assert!(rotation_distance(a, neg(a)).abs() < 1e-9);
        prop_assert!((0.0..=PI + 1e-12).contains(&ab));
        prop_assert!(ab <= rotation_distance(a, c) + rotation_distance(c, b) + 1e-9);
    }

    #[test]
    fn rotation_distance_matches_axis_angle(angle in 0.0f64..PI, seed in any::<u64>()) {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let base = random::unit_quaternion(&mut rng);
        let axis = random::vec_in(&mut rng, 1.0).normalized().unwrap_or(Vec3::new(0.0, 0.0, 1.0));
        let turned = base.mul(Quaternion::from_axis_angle(axis, angle).unwrap());
        prop_assert!((rotation_distance(base, turned) - angle).abs() < 1e-9);
    }

    #[test]
    fn coverage_shrinks_with_field_of_view(seed in any::<u64>(), f1 in 0.05f64..2.5, f2 in 0.05f64..2.5) {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let scene = random::random_scene(&mut rng);
        let object = &scene.objects[0];
        let eye = random::vec_in(&mut rng, 8.0) + Vec3::new(0.0, 0.0, 9.0);
        let (narrow, wide) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
        let cam = |fov| Camera::look_at("c", eye, object.transform.location, fov, 1.5).unwrap();
        let c_narrow = frustum_coverage(&object.mesh, &object.transform, &cam(narrow), 256).unwrap();
        let c_wide = frustum_coverage(&object.mesh, &object.transform, &cam(wide), 256).unwrap();
        prop_assert!(c_narrow <= c_wide, "{c_narrow} > {c_wide}");
    }
}

#[test]
fn reference_camera_sees_the_crown() {
    let scene = corpus::rubric_scene();
    let crown = &scene.objects[0];
    let cam = corpus::reference_camera();
    let cov = frustum_coverage(&crown.mesh, &crown.transform, &cam, 256).unwrap();
    assert_eq!(cov, 1.0);
    let flipped = corpus::flipped_camera();
    assert_eq!(frustum_coverage(&crown.mesh, &crown.transform, &flipped, 256).unwrap(), 0.0);
}

/// A sphere centered on the left frustum plane: any plane through the center
/// halves the area, and 10^5 uniform points on the sphere agree.
#[test]
fn sphere_straddling_the_left_plane_is_half_covered() {
    let (fov, aspect) = (0.8f64, 1.5);
    let camera = Camera::new("c", Transform::IDENTITY, fov, aspect, 0.1, 100.0).unwrap();
    let depth = 10.0;
    let center = Vec3::new(-depth * (fov / 2.0).tan() * aspect, 0.0, -depth);
    let radius = 0.5;

    let mut rng = rand::rngs::StdRng::seed_from_u64(8);
    let n = 100_000;
    let slope = (fov / 2.0).tan() * aspect;
    let inside = (0..n)
        .filter(|_| {
            // uniform direction: normalized Gaussian triple
            let g = Vec3::new(gauss(&mut rng), gauss(&mut rng), gauss(&mut rng));
            let p = center + g.normalized().unwrap() * radius;
            p.x >= p.z * slope
        })
        .count();
    let oracle = inside as f64 / n as f64;
    assert!((oracle - 0.5).abs() < 0.01, "oracle {oracle}");

    for (segments, rings) in [(32, 16), (16, 8), (64, 32)] {
        let sphere = shapes::uv_sphere(radius, segments, rings);
        let estimate = frustum_coverage(&sphere, &Transform::from_location(center), &camera, 256).unwrap();
        assert!((estimate - oracle).abs() <= 0.1, "{segments}x{rings}: {estimate} vs {oracle}");
    }
}

fn gauss(rng: &mut impl Rng) -> f64 {
    let (u, v): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen());
    (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
}
