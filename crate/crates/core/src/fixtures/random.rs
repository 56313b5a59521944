//! Randomized generators for property tests and fuzzing.

use rand::Rng;

use super::{corpus, shapes};
use crate::scene::{Camera, Mesh, PrimitiveType, Quaternion, Scene, SceneObject, Transform, Vec3};

/// Uniformly distributed unit quaternion.
pub fn unit_quaternion<R: Rng + ?Sized>(rng: &mut R) -> Quaternion {
    loop {
        let (w, x, y, z) = (
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n2: f64 = w * w + x * x + y * y + z * z;
        if n2 > 1e-3 && n2 <= 1.0 {
            return Quaternion::new(w, x, y, z).expect("non-zero");
        }
    }
}

pub fn vec_in<R: Rng + ?Sized>(rng: &mut R, extent: f64) -> Vec3 {
    Vec3::new(
        rng.gen_range(-extent..extent),
        rng.gen_range(-extent..extent),
        rng.gen_range(-extent..extent),
    )
}

/// A clean primitive of the requested type with random tessellation.
pub fn primitive_mesh<R: Rng + ?Sized>(rng: &mut R, kind: PrimitiveType) -> Mesh {
    match kind {
        PrimitiveType::Cube => {
            if rng.gen_bool(0.5) {
                shapes::cube(rng.gen_range(0.5..3.0))
            } else {
                shapes::subdivided_cube(rng.gen_range(0.5..3.0), rng.gen_range(1..12))
            }
        }
        PrimitiveType::UvSphere => {
            shapes::uv_sphere(rng.gen_range(0.5..3.0), rng.gen_range(16..65), rng.gen_range(8..33))
        }
        PrimitiveType::Torus => {
            let major = rng.gen_range(0.8..2.0);
            shapes::torus(
                major,
                major * rng.gen_range(0.1..0.45),
                rng.gen_range(3..65),
                rng.gen_range(3..25),
            )
        }
        PrimitiveType::Cylinder => {
            shapes::cylinder(rng.gen_range(0.3..2.0), rng.gen_range(0.3..3.0), rng.gen_range(5..65))
        }
        PrimitiveType::Cone => {
            shapes::cone(rng.gen_range(0.3..2.0), rng.gen_range(0.3..3.0), rng.gen_range(5..65))
        }
        PrimitiveType::Plane => shapes::plane(rng.gen_range(0.5..4.0), rng.gen_range(1..16)),
        PrimitiveType::Unknown => shapes::open_cylinder(1.0, 1.0, rng.gen_range(3..16)),
    }
}

/// Applies a rigid motion and uniform scale to the vertex data itself.
pub fn transform_vertices(mesh: &Mesh, rotation: Quaternion, scale: f64, offset: Vec3) -> Mesh {
    Mesh {
        vertices: mesh.vertices.iter().map(|&v| rotation.rotate(v * scale) + offset).collect(),
        faces: mesh.faces.clone(),
    }
}

/// Random rigid motion and uniform scale baked into the vertices.
pub fn random_pose<R: Rng + ?Sized>(rng: &mut R, mesh: &Mesh) -> Mesh {
    let q = unit_quaternion(rng);
    let scale = rng.gen_range(0.05..20.0);
    let offset = vec_in(rng, 50.0);
    transform_vertices(mesh, q, scale, offset)
}

/// Adds uniform noise in `[-amplitude, amplitude]` to every coordinate.
pub fn jitter<R: Rng + ?Sized>(rng: &mut R, mesh: &Mesh, amplitude: f64) -> Mesh {
    Mesh {
        vertices: mesh.vertices.iter().map(|&v| v + vec_in(rng, amplitude)).collect(),
        faces: mesh.faces.clone(),
    }
}

/// Randomly permutes vertex order (remapping faces) and face order.
pub fn shuffle_mesh<R: Rng + ?Sized>(rng: &mut R, mesh: &Mesh) -> Mesh {
    use rand::seq::SliceRandom;
    let mut perm: Vec<usize> = (0..mesh.vertices.len()).collect();
    perm.shuffle(rng);
    let mut vertices = vec![Vec3::ZERO; perm.len()];
    for (old, &new) in perm.iter().enumerate() {
        vertices[new] = mesh.vertices[old];
    }
    let mut faces: Vec<Vec<u32>> = mesh
        .faces
        .iter()
        .map(|f| f.iter().map(|&i| perm[i as usize] as u32).collect())
        .collect();
    faces.shuffle(rng);
    Mesh { vertices, faces }
}

pub fn random_transform<R: Rng + ?Sized>(rng: &mut R) -> Transform {
    Transform::new(
        vec_in(rng, 5.0),
        unit_quaternion(rng),
        Vec3::new(rng.gen_range(0.2..3.0), rng.gen_range(0.2..3.0), rng.gen_range(0.2..3.0)),
    )
    .expect("positive scale")
}

/// Arbitrary valid scene: 1–5 random primitives, random poses and
/// modifiers, and usually a camera somewhere nearby.
pub fn random_scene<R: Rng + ?Sized>(rng: &mut R) -> Scene {
    let kinds = [
        PrimitiveType::Cube,
        PrimitiveType::UvSphere,
        PrimitiveType::Torus,
        PrimitiveType::Cylinder,
        PrimitiveType::Cone,
        PrimitiveType::Plane,
    ];
    let count = rng.gen_range(1..=5);
    let objects = (0..count)
        .map(|k| {
            let kind = kinds[rng.gen_range(0..kinds.len())];
            let mut obj = SceneObject::new(format!("Object.{k:03}"), random_transform(rng), primitive_mesh(rng, kind));
            if rng.gen_bool(0.5) {
                obj.declared_primitive = Some(kind);
            }
            if rng.gen_bool(0.2) {
                obj.modifiers = vec!["SUBSURF".into()];
            }
            obj
        })
        .collect();
    let cameras = if rng.gen_bool(0.8) {
        let eye = vec_in(rng, 10.0) + Vec3::new(0.0, 0.0, 12.0);
        vec![Camera::look_at("Camera", eye, vec_in(rng, 2.0), rng.gen_range(0.3..1.5), rng.gen_range(0.5..2.0))
            .expect("valid camera")]
    } else {
        Vec::new()
    };
    Scene::new(objects, cameras).expect("unique names")
}

/// Crown submission with a random spike height, distinct from the reference.
pub fn crown_submission<R: Rng + ?Sized>(rng: &mut R) -> Scene {
    corpus::crown_variant(rng.gen_range(0.1..0.3))
}
