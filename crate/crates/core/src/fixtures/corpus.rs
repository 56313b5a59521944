//! The crown assignment: a torus with alternate faces of one ring extruded,
//! plus a corpus of submissions that each make one common mistake.

use std::f64::consts::PI;

use super::shapes;
use crate::scene::{Camera, Mesh, PrimitiveType, Quaternion, Scene, SceneObject, Transform, Vec3};

pub const CROWN_MAJOR_SEGMENTS: u32 = 48;
pub const CROWN_MINOR_SEGMENTS: u32 = 12;
pub const CROWN_SPIKE_HEIGHT: f64 = 0.35;

/// Torus (major radius 1, minor 0.25) with every other face of the upper
/// outer ring extruded by `height`.
pub fn crown_mesh(major_segments: u32, minor_segments: u32, height: f64) -> Mesh {
    let torus = shapes::torus(1.0, 0.25, major_segments, minor_segments);
    let ring = minor_segments / 4 - 1;
    let faces: Vec<usize> = (0..major_segments)
        .step_by(2)
        .map(|i| shapes::torus_face_index(minor_segments, i, ring))
        .collect();
    shapes::extrude_faces(&torus, &faces, height)
}

/// The reference crown: 576 torus faces + 24 extrusions × 4 sides = 672 faces.
pub fn reference_crown() -> Mesh {
    crown_mesh(CROWN_MAJOR_SEGMENTS, CROWN_MINOR_SEGMENTS, CROWN_SPIKE_HEIGHT)
}

/// A "crown" started from a flattened subdivided box: alternate cells on the
/// border of the top face are extruded upwards. Same face count as
/// [`reference_crown`].
pub fn cube_crown() -> Mesh {
    let cuts = 10;
    let extent = Vec3::new(2.5, 2.5, 0.6);
    let base = shapes::subdivided_box(extent, cuts);
    let top = extent.z / 2.0;
    let inner = extent.x / 2.0 - extent.x / cuts as f64;
    let mut border: Vec<(f64, usize)> = base
        .faces
        .iter()
        .enumerate()
        .filter_map(|(i, f)| {
            let c = base.face_centroid(f);
            let on_top = (c.z - top).abs() < 1e-9;
            let on_border = c.x.abs() > inner || c.y.abs() > inner;
            (on_top && on_border).then(|| (c.y.atan2(c.x), i))
        })
        .collect();
    border.sort_by(|a, b| a.0.total_cmp(&b.0));
    let picked: Vec<usize> = border.iter().step_by(2).map(|&(_, i)| i).collect();
    shapes::extrude_faces(&base, &picked, CROWN_SPIKE_HEIGHT)
}

/// Default-style camera framing the crown from above and to the side.
pub fn reference_camera() -> Camera {
    Camera::look_at(
        "Camera",
        Vec3::new(4.5, -4.5, 3.5),
        Vec3::new(0.0, 0.0, 0.1),
        0.691_150_4,
        16.0 / 9.0,
    )
    .expect("valid camera")
}

fn crown_object(mesh: Mesh) -> SceneObject {
    SceneObject::new("Crown", Transform::IDENTITY, mesh).with_primitive(PrimitiveType::Torus)
}

pub fn rubric_scene() -> Scene {
    Scene::new(vec![crown_object(reference_crown())], vec![reference_camera()]).expect("valid scene")
}

/// Camera turned 180° about the vertical axis through its own position.
pub fn flipped_camera() -> Camera {
    let mut cam = reference_camera();
    let half_turn = Quaternion::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), PI).expect("axis");
    cam.transform.rotation = half_turn.mul(cam.transform.rotation);
    cam
}

/// Labelled submissions for the common-mistakes corpus.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub scene: Scene,
}

/// Rubric-identical submission.
pub fn clean() -> Scene {
    rubric_scene()
}

/// Crown modeled from a cube; pose, scale, polygon count and camera correct.
pub fn crown_from_cube() -> Scene {
    let obj = SceneObject::new("Crown", Transform::IDENTITY, cube_crown()).with_primitive(PrimitiveType::Cube);
    Scene::new(vec![obj], vec![reference_camera()]).expect("valid scene")
}

pub fn camera_flipped() -> Scene {
    Scene::new(vec![crown_object(reference_crown())], vec![flipped_camera()]).expect("valid scene")
}

/// Incomplete crown at half the resolution: 288 + 12×4 = 336 faces, half the
/// reference count.
pub fn half_extruded() -> Scene {
    let mesh = crown_mesh(CROWN_MAJOR_SEGMENTS / 2, CROWN_MINOR_SEGMENTS, CROWN_SPIKE_HEIGHT);
    Scene::new(vec![crown_object(mesh)], vec![reference_camera()]).expect("valid scene")
}

pub fn with_modifier() -> Scene {
    let obj = crown_object(reference_crown()).with_modifiers(["SUBSURF"]);
    Scene::new(vec![obj], vec![reference_camera()]).expect("valid scene")
}

/// Violates every check at once: wrong primitive, far off, rotated, scaled,
/// too few polygons, modifiers, four extra objects and a camera facing away.
pub fn everything_wrong() -> Scene {
    let transform = Transform::new(
        Vec3::new(2.5, 0.0, 0.0),
        Quaternion::from_axis_angle(Vec3::new(1.0, 0.0, 0.0), PI / 2.0).expect("axis"),
        Vec3::new(3.0, 3.0, 3.0),
    )
    .expect("valid transform");
    let crown = SceneObject::new("Crown", transform, shapes::subdivided_cube(1.0, 3))
        .with_modifiers(["SUBSURF", "BEVEL"]);
    let mut objects = vec![crown];
    for k in 0..4 {
        let at = Vec3::new(-2.0, -2.0 + k as f64, 1.0);
        objects.push(SceneObject::new(
            format!("Deco{}", k + 1),
            Transform::from_location(at),
            shapes::uv_sphere(0.1, 8, 4),
        ));
    }
    Scene::new(objects, vec![flipped_camera()]).expect("valid scene")
}

/// A crown whose spikes have a different height; used to build cohorts of
/// distinct honest submissions.
pub fn crown_variant(spike_height: f64) -> Scene {
    let mesh = crown_mesh(CROWN_MAJOR_SEGMENTS, CROWN_MINOR_SEGMENTS, spike_height);
    Scene::new(vec![crown_object(mesh)], vec![reference_camera()]).expect("valid scene")
}

/// The full corpus, clean fixture first.
pub fn mistakes_corpus() -> Vec<Fixture> {
    vec![
        Fixture { name: "clean", scene: clean() },
        Fixture { name: "crown_from_cube", scene: crown_from_cube() },
        Fixture { name: "camera_flipped", scene: camera_flipped() },
        Fixture { name: "half_extruded", scene: half_extruded() },
        Fixture { name: "with_modifier", scene: with_modifier() },
        Fixture { name: "everything_wrong", scene: everything_wrong() },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{infer_primitive, mesh_stats};

    #[test]
    fn crown_counts() {
        let s = mesh_stats(&reference_crown());
        assert_eq!(s.face_count, 672);
        assert_eq!(s.euler_characteristic, 0);
        assert_eq!(infer_primitive(&reference_crown()).primitive, PrimitiveType::Torus);
        let s = mesh_stats(&cube_crown());
        assert_eq!(s.face_count, 672);
        assert_eq!(s.euler_characteristic, 2);
        assert_eq!(infer_primitive(&cube_crown()).primitive, PrimitiveType::Cube);
        let half = half_extruded();
        assert_eq!(mesh_stats(&half.objects[0].mesh).face_count, 336);
    }
}
