//! Mesh generators for the stock primitives, using the same layouts as the
//! modeling tool (quad-grid torus, pole-fan UV sphere, n-gon capped cylinder,
//! fan cone). All faces are wound counter-clockwise seen from outside.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use crate::scene::{Mesh, Vec3};

fn build(vertices: Vec<Vec3>, faces: Vec<Vec<u32>>) -> Mesh {
    Mesh::new(vertices, faces).expect("generator produced an invalid mesh")
}

/// 8-vertex, 6-quad cube centered on the origin.
pub fn cube(size: f64) -> Mesh {
    subdivided_box(Vec3::new(size, size, size), 1)
}

pub fn subdivided_cube(size: f64, cuts: u32) -> Mesh {
    subdivided_box(Vec3::new(size, size, size), cuts)
}

/// Box with the given full extents, each face split into `cuts`×`cuts` quads.
pub fn subdivided_box(extent: Vec3, cuts: u32) -> Mesh {
    assert!(cuts >= 1);
    let n = cuts as i32;
    let mut index: HashMap<[i32; 3], u32> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut vid = |p: [i32; 3]| -> u32 {
        *index.entry(p).or_insert_with(|| {
            let f = |c: i32, e: f64| (c as f64 / n as f64 - 0.5) * e;
            vertices.push(Vec3::new(f(p[0], extent.x), f(p[1], extent.y), f(p[2], extent.z)));
            (vertices.len() - 1) as u32
        })
    };
    // (fixed axis, fixed value, u axis, v axis) chosen so u x v points outward
    let sides = [
        (0, n, 1, 2),
        (0, 0, 2, 1),
        (1, n, 2, 0),
        (1, 0, 0, 2),
        (2, n, 0, 1),
        (2, 0, 1, 0),
    ];
    for (axis, value, ua, va) in sides {
        for i in 0..n {
            for j in 0..n {
                let corner = |di: i32, dj: i32| {
                    let mut p = [0; 3];
                    p[axis] = value;
                    p[ua] = i + di;
                    p[va] = j + dj;
                    p
                };
                faces.push(vec![
                    vid(corner(0, 0)),
                    vid(corner(1, 0)),
                    vid(corner(1, 1)),
                    vid(corner(0, 1)),
                ]);
            }
        }
    }
    build(vertices, faces)
}

/// Quad-grid torus in the XY plane.
pub fn torus(major_radius: f64, minor_radius: f64, major_segments: u32, minor_segments: u32) -> Mesh {
    assert!(major_segments >= 3 && minor_segments >= 3);
    let (nu, nv) = (major_segments, minor_segments);
    let mut vertices = Vec::with_capacity((nu * nv) as usize);
    for i in 0..nu {
        let u = TAU * i as f64 / nu as f64;
        for j in 0..nv {
            let v = TAU * j as f64 / nv as f64;
            let ring = major_radius + minor_radius * v.cos();
            vertices.push(Vec3::new(ring * u.cos(), ring * u.sin(), minor_radius * v.sin()));
        }
    }
    let id = |i: u32, j: u32| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity((nu * nv) as usize);
    for i in 0..nu {
        for j in 0..nv {
            faces.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    build(vertices, faces)
}

/// Index of the torus face at grid cell `(i, j)`, matching [`torus`].
pub fn torus_face_index(minor_segments: u32, i: u32, j: u32) -> usize {
    (i * minor_segments + j) as usize
}

/// UV sphere with triangle fans at the poles.
pub fn uv_sphere(radius: f64, segments: u32, rings: u32) -> Mesh {
    assert!(segments >= 3 && rings >= 2);
    let mut vertices = vec![Vec3::new(0.0, 0.0, radius)];
    for k in 1..rings {
        let phi = PI * k as f64 / rings as f64;
        for s in 0..segments {
            let theta = TAU * s as f64 / segments as f64;
            vertices.push(Vec3::new(
                radius * phi.sin() * theta.cos(),
                radius * phi.sin() * theta.sin(),
                radius * phi.cos(),
            ));
        }
    }
    vertices.push(Vec3::new(0.0, 0.0, -radius));
    let bottom = (vertices.len() - 1) as u32;
    let ring = |k: u32, s: u32| 1 + (k - 1) * segments + (s % segments);
    let mut faces = Vec::new();
    for s in 0..segments {
        faces.push(vec![0, ring(1, s), ring(1, s + 1)]);
    }
    for k in 1..rings - 1 {
        for s in 0..segments {
            faces.push(vec![ring(k, s), ring(k + 1, s), ring(k + 1, s + 1), ring(k, s + 1)]);
        }
    }
    for s in 0..segments {
        faces.push(vec![bottom, ring(rings - 1, s + 1), ring(rings - 1, s)]);
    }
    build(vertices, faces)
}

fn circle(radius: f64, z: f64, segments: u32) -> impl Iterator<Item = Vec3> {
    (0..segments).map(move |s| {
        let t = TAU * s as f64 / segments as f64;
        Vec3::new(radius * t.cos(), radius * t.sin(), z)
    })
}

/// Cylinder along Z with n-gon caps.
pub fn cylinder(radius: f64, depth: f64, segments: u32) -> Mesh {
    let mut m = open_cylinder(radius, depth, segments);
    let s = segments;
    m.faces.push((s..2 * s).collect());
    m.faces.push((0..s).rev().collect());
    build(m.vertices, m.faces)
}

/// Cylinder side wall without caps (open tube).
pub fn open_cylinder(radius: f64, depth: f64, segments: u32) -> Mesh {
    assert!(segments >= 3);
    let s = segments;
    let mut vertices: Vec<Vec3> = circle(radius, -depth / 2.0, s).collect();
    vertices.extend(circle(radius, depth / 2.0, s));
    let faces = (0..s)
        .map(|i| vec![i, (i + 1) % s, s + (i + 1) % s, s + i])
        .collect();
    build(vertices, faces)
}

/// Cone along Z: n-gon base cap and a triangle fan to the apex.
pub fn cone(radius: f64, depth: f64, segments: u32) -> Mesh {
    assert!(segments >= 3);
    let s = segments;
    let mut vertices: Vec<Vec3> = circle(radius, -depth / 2.0, s).collect();
    vertices.push(Vec3::new(0.0, 0.0, depth / 2.0));
    let mut faces: Vec<Vec<u32>> = (0..s).map(|i| vec![i, (i + 1) % s, s]).collect();
    faces.push((0..s).rev().collect());
    build(vertices, faces)
}

/// Square grid in the XY plane with `cuts`×`cuts` quads.
pub fn plane(size: f64, cuts: u32) -> Mesh {
    assert!(cuts >= 1);
    let n = cuts;
    let mut vertices = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Vec3::new(
                (i as f64 / n as f64 - 0.5) * size,
                (j as f64 / n as f64 - 0.5) * size,
                0.0,
            ));
        }
    }
    let id = |i: u32, j: u32| j * (n + 1) + i;
    let mut faces = Vec::new();
    for j in 0..n {
        for i in 0..n {
            faces.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    build(vertices, faces)
}

/// Extrudes each listed face individually along its normal by `height`.
/// Every extruded n-gon adds n vertices and n side quads, so the Euler
/// characteristic is unchanged.
pub fn extrude_faces(mesh: &Mesh, faces: &[usize], height: f64) -> Mesh {
    let mut vertices = mesh.vertices.clone();
    let mut out = mesh.faces.clone();
    for &fi in faces {
        let face = mesh.faces[fi].clone();
        let normal = mesh
            .face_area_vector(&face)
            .normalized()
            .expect("cannot extrude a degenerate face");
        let base = vertices.len() as u32;
        for &v in &face {
            vertices.push(mesh.vertices[v as usize] + normal * height);
        }
        let n = face.len();
        let top: Vec<u32> = (0..n as u32).map(|k| base + k).collect();
        for k in 0..n {
            let (a, b) = (face[k], face[(k + 1) % n]);
            out.push(vec![a, b, top[(k + 1) % n], top[k]]);
        }
        out[fi] = top;
    }
    build(vertices, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh_stats;

    #[test]
    fn primitive_counts() {
        let s = mesh_stats(&torus(1.0, 0.25, 48, 12));
        assert_eq!((s.vertex_count, s.face_count), (576, 576));
        let s = mesh_stats(&uv_sphere(1.0, 32, 16));
        assert_eq!((s.vertex_count, s.face_count), (482, 512));
        let s = mesh_stats(&cylinder(1.0, 2.0, 32));
        assert_eq!((s.vertex_count, s.face_count), (64, 34));
        let s = mesh_stats(&cone(1.0, 2.0, 32));
        assert_eq!((s.vertex_count, s.face_count), (33, 33));
        let s = mesh_stats(&subdivided_cube(1.0, 3));
        assert_eq!((s.vertex_count, s.face_count), (56, 54));
    }

    #[test]
    fn faces_wind_outward() {
        for m in [cube(1.0), uv_sphere(1.0, 12, 6), cylinder(1.0, 1.0, 7), cone(1.0, 1.0, 9)] {
            let c = m.vertex_centroid();
            for f in &m.faces {
                let n = m.face_area_vector(f);
                assert!(n.dot(m.face_centroid(f) - c) > 0.0);
            }
        }
    }

    #[test]
    fn extrusion_preserves_euler_characteristic() {
        let t = torus(1.0, 0.25, 12, 8);
        let e = extrude_faces(&t, &[0, 2, 4], 0.2);
        let (a, b) = (mesh_stats(&t), mesh_stats(&e));
        assert_eq!(b.face_count, a.face_count + 12);
        assert_eq!(b.vertex_count, a.vertex_count + 12);
        assert_eq!(b.euler_characteristic, 0);
        assert_eq!(b.boundary_edge_count, 0);
        assert_eq!(b.nonmanifold_edge_count, 0);
    }
}
