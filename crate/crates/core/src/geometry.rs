//! Mesh statistics, bounding volumes, rotation distance, primitive inference
//! and camera frustum coverage.

use std::collections::HashMap;

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{Camera, Mesh, PrimitiveType, Quaternion, Transform, Vec3};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("empty mesh")]
    EmptyMesh,
    #[error("sample count must be at least 8, got {0}")]
    TooFewSamples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MeshStats {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub face_count: usize,
    /// Same as `face_count`; quads and n-gons count once.
    pub polygon_count: usize,
    pub euler_characteristic: i64,
    pub boundary_edge_count: usize,
    pub nonmanifold_edge_count: usize,
    pub triangle_equivalent_count: usize,
}

impl MeshStats {
    pub fn is_closed(&self) -> bool {
        self.boundary_edge_count == 0
    }

    pub fn is_manifold(&self) -> bool {
        self.nonmanifold_edge_count == 0
    }
}

/// Undirected edge key with the smaller index first.
fn edge_key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Number of faces incident to each undirected edge.
pub fn edge_face_counts(mesh: &Mesh) -> HashMap<(u32, u32), u32> {
    let mut edges: HashMap<(u32, u32), u32> = HashMap::with_capacity(mesh.faces.len() * 2);
    for face in &mesh.faces {
        let n = face.len();
        for k in 0..n {
            *edges.entry(edge_key(face[k], face[(k + 1) % n])).or_default() += 1;
        }
    }
    edges
}

pub fn mesh_stats(mesh: &Mesh) -> MeshStats {
    let edges = edge_face_counts(mesh);
    let vertex_count = mesh.vertices.len();
    let face_count = mesh.faces.len();
    let edge_count = edges.len();
    MeshStats {
        vertex_count,
        edge_count,
        face_count,
        polygon_count: face_count,
        euler_characteristic: vertex_count as i64 - edge_count as i64 + face_count as i64,
        boundary_edge_count: edges.values().filter(|&&c| c == 1).count(),
        nonmanifold_edge_count: edges.values().filter(|&&c| c >= 3).count(),
        triangle_equivalent_count: mesh.faces.iter().map(|f| f.len() - 2).sum(),
    }
}

/// World-space axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn from_points(points: impl IntoIterator<Item = Vec3>) -> Option<Aabb> {
        let mut it = points.into_iter();
        let first = it.next()?;
        Some(it.fold(Aabb { min: first, max: first }, |b, p| Aabb {
            min: b.min.min(p),
            max: b.max.max(p),
        }))
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) / 2.0
    }

    /// Radius of the sphere circumscribing the box.
    pub fn bounding_radius(&self) -> f64 {
        (self.max - self.min).norm() / 2.0
    }
}

pub fn world_aabb(mesh: &Mesh, transform: &Transform) -> Result<Aabb, GeometryError> {
    if mesh.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    Aabb::from_points(mesh.vertices.iter().map(|&v| transform.apply(v))).ok_or(GeometryError::EmptyMesh)
}

/// Geodesic angle between two rotations, in `[0, pi]`. Treats `q` and `-q` as
/// the same rotation.
pub fn rotation_distance(a: Quaternion, b: Quaternion) -> f64 {
    // 2*acos(|a.b|), evaluated through atan2 for accuracy near zero.
    let r = a.conjugate().mul(b);
    let v = (r.x * r.x + r.y * r.y + r.z * r.z).sqrt();
    2.0 * v.atan2(r.w.abs())
}

/// Thresholds used by [`infer_primitive_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    /// Relative standard deviation of vertex distance to centroid below which
    /// a closed genus-0 mesh is considered a sphere.
    pub sphere_rsd: f64,
    /// Maximum plane distance (relative to RMS radius) for a mesh to count as flat.
    pub coplanarity: f64,
    /// Angular tolerance, in radians, for grouping face normals.
    pub normal_tolerance: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            sphere_rsd: 0.02,
            coplanarity: 1e-6,
            normal_tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveGuess {
    pub primitive: PrimitiveType,
    pub confidence: f64,
    pub evidence: Vec<String>,
}

impl PrimitiveGuess {
    fn unknown(mut evidence: Vec<String>, reason: &str) -> Self {
        evidence.push(reason.to_owned());
        Self {
            primitive: PrimitiveType::Unknown,
            confidence: 0.0,
            evidence,
        }
    }

    fn found(primitive: PrimitiveType, confidence: f64, evidence: Vec<String>) -> Self {
        Self {
            primitive,
            confidence: confidence.clamp(0.5, 1.0),
            evidence,
        }
    }
}

pub fn infer_primitive(mesh: &Mesh) -> PrimitiveGuess {
    infer_primitive_with(mesh, &ClassifierConfig::default())
}

/// Classifies a mesh as one of the stock primitives using only intrinsic
/// quantities (topology, normals, distances), so the result does not depend
/// on pose or uniform scale.
pub fn infer_primitive_with(mesh: &Mesh, cfg: &ClassifierConfig) -> PrimitiveGuess {
    if mesh.is_empty() {
        return PrimitiveGuess::unknown(vec![], "empty mesh");
    }
    let stats = mesh_stats(mesh);
    let mut evidence = vec![format!(
        "V={} E={} F={} chi={} boundary={}",
        stats.vertex_count,
        stats.edge_count,
        stats.face_count,
        stats.euler_characteristic,
        stats.boundary_edge_count
    )];
    if !stats.is_manifold() {
        return PrimitiveGuess::unknown(evidence, "non-manifold");
    }
    let normals = face_normals(mesh);
    if normals.iter().any(Option::is_none) {
        return PrimitiveGuess::unknown(evidence, "degenerate face");
    }
    let normals: Vec<Vec3> = normals.into_iter().flatten().collect();

    if stats.is_closed() {
        match stats.euler_characteristic {
            0 => {
                evidence.push("closed manifold with chi=0 (genus 1)".into());
                return PrimitiveGuess::found(PrimitiveType::Torus, 0.95, evidence);
            }
            2 => return classify_genus_zero(mesh, &stats, &normals, cfg, evidence),
            chi => return PrimitiveGuess::unknown(evidence, &format!("closed surface with chi={chi}")),
        }
    }

    if stats.euler_characteristic == 1 {
        let flatness = plane_deviation(mesh);
        if flatness <= cfg.coplanarity {
            evidence.push(format!("open disc, max plane deviation {flatness:.3e}"));
            let conf = 1.0 - 0.5 * flatness / cfg.coplanarity;
            return PrimitiveGuess::found(PrimitiveType::Plane, conf, evidence);
        }
        return PrimitiveGuess::unknown(evidence, "open disc that is not flat");
    }
    PrimitiveGuess::unknown(evidence, "open surface")
}

fn classify_genus_zero(
    mesh: &Mesh,
    stats: &MeshStats,
    normals: &[Vec3],
    cfg: &ClassifierConfig,
    mut evidence: Vec<String>,
) -> PrimitiveGuess {
    evidence.push("closed manifold with chi=2 (genus 0)".into());
    let all_quads = mesh.faces.iter().all(|f| f.len() == 4);

    // Box: every normal lies on one of three mutually orthogonal axes.
    if all_quads {
        if let Some(max_dev) = box_axes_deviation(normals, cfg.normal_tolerance) {
            let margin = 1.0 - max_dev / cfg.normal_tolerance;
            if stats.face_count == 6 {
                evidence.push("six quads with three orthogonal normal axes".into());
                return PrimitiveGuess::found(PrimitiveType::Cube, 0.9 + 0.1 * margin, evidence);
            }
            evidence.push(format!(
                "{} quads, all normals on three orthogonal axes (subdivided or extruded box)",
                stats.face_count
            ));
            return PrimitiveGuess::found(PrimitiveType::Cube, 0.6 + 0.2 * margin, evidence);
        }
    }

    let caps: Vec<usize> = (0..mesh.faces.len()).filter(|&i| mesh.faces[i].len() >= 5).collect();
    let others_ok = |arity: usize| {
        mesh.faces
            .iter()
            .filter(|f| f.len() < 5)
            .all(|f| f.len() == arity)
    };

    if caps.len() == 2 && others_ok(4) {
        let d = normals[caps[0]].dot(normals[caps[1]]);
        let (a, b) = (&mesh.faces[caps[0]], &mesh.faces[caps[1]]);
        let sides = mesh.faces.len() - 2;
        if d < -(1.0 - cfg.normal_tolerance) && a.len() == b.len() && sides == a.len() {
            evidence.push(format!("two antiparallel {}-gon caps joined by quads", a.len()));
            return PrimitiveGuess::found(PrimitiveType::Cylinder, 0.9 + 0.1 * (-d), evidence);
        }
    }

    if caps.len() == 1 && others_ok(3) {
        let cap = &mesh.faces[caps[0]];
        let fan = mesh.faces.len() - 1;
        if fan == cap.len() && stats.vertex_count == cap.len() + 1 {
            // the apex is the single vertex not on the cap, shared by every triangle
            let apex = (0..mesh.vertices.len() as u32).find(|v| !cap.contains(v));
            let shared = apex.is_some_and(|apex| {
                mesh.faces
                    .iter()
                    .filter(|f| f.len() == 3)
                    .all(|f| f.contains(&apex))
            });
            if shared {
                evidence.push(format!("{}-gon cap with apex triangle fan", cap.len()));
                return PrimitiveGuess::found(PrimitiveType::Cone, 0.95, evidence);
            }
        }
    }

    let rsd = centroid_distance_rsd(mesh);
    if rsd < cfg.sphere_rsd {
        evidence.push(format!("vertex distance to centroid RSD {rsd:.4}"));
        let conf = 1.0 - 0.5 * rsd / cfg.sphere_rsd;
        return PrimitiveGuess::found(PrimitiveType::UvSphere, conf, evidence);
    }
    evidence.push(format!("vertex distance to centroid RSD {rsd:.4}"));
    PrimitiveGuess::unknown(evidence, "genus-0 mesh matching no primitive rule")
}

/// Unit normals per face, `None` for zero-area faces.
pub fn face_normals(mesh: &Mesh) -> Vec<Option<Vec3>> {
    let scale = rms_radius(mesh).max(f64::MIN_POSITIVE);
    mesh.faces
        .iter()
        .map(|f| {
            let a = mesh.face_area_vector(f);
            if a.norm() <= 1e-12 * scale * scale {
                None
            } else {
                a.normalized()
            }
        })
        .collect()
}

/// Groups normals into axes (up to sign). If there are exactly three groups
/// and they are mutually orthogonal, returns the largest angular deviation of
/// any normal from its axis.
fn box_axes_deviation(normals: &[Vec3], tol: f64) -> Option<f64> {
    let cos_tol = tol.cos();
    let mut axes: Vec<Vec3> = Vec::with_capacity(3);
    let mut max_dev: f64 = 0.0;
    for &n in normals {
        match axes.iter().find(|a| a.dot(n).abs() >= cos_tol) {
            Some(a) => {
                let dev = a.dot(n).abs().min(1.0).acos();
                max_dev = max_dev.max(dev);
            }
            None => {
                if axes.len() == 3 {
                    return None;
                }
                axes.push(n);
            }
        }
    }
    if axes.len() != 3 {
        return None;
    }
    let sin_tol = tol.sin();
    for i in 0..3 {
        for j in i + 1..3 {
            if axes[i].dot(axes[j]).abs() > sin_tol {
                return None;
            }
        }
    }
    Some(max_dev)
}

fn rms_radius(mesh: &Mesh) -> f64 {
    let c = mesh.vertex_centroid();
    let n = mesh.vertices.len().max(1) as f64;
    (mesh.vertices.iter().map(|&v| (v - c).dot(v - c)).sum::<f64>() / n).sqrt()
}

fn centroid_distance_rsd(mesh: &Mesh) -> f64 {
    let c = mesh.vertex_centroid();
    let d: Vec<f64> = mesh.vertices.iter().map(|&v| (v - c).norm()).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return f64::INFINITY;
    }
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    var.sqrt() / mean
}

/// Principal axes of the vertex cloud, sorted by decreasing variance.
pub(crate) fn principal_axes(points: &[Vec3], center: Vec3) -> ([Vec3; 3], [f64; 3]) {
    let mut cov = Matrix3::<f64>::zeros();
    for &p in points {
        let d = p - center;
        let v = nalgebra::Vector3::new(d.x, d.y, d.z);
        cov += v * v.transpose();
    }
    cov /= points.len().max(1) as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let axis = |i: usize| {
        let c = eig.eigenvectors.column(order[i]);
        Vec3::new(c[0], c[1], c[2])
    };
    (
        [axis(0), axis(1), axis(2)],
        [
            eig.eigenvalues[order[0]],
            eig.eigenvalues[order[1]],
            eig.eigenvalues[order[2]],
        ],
    )
}

/// Largest distance of any vertex from the best-fit plane, relative to the
/// RMS radius of the vertex cloud.
fn plane_deviation(mesh: &Mesh) -> f64 {
    let c = mesh.vertex_centroid();
    let (axes, _) = principal_axes(&mesh.vertices, c);
    let normal = axes[2];
    let rms = rms_radius(mesh);
    if rms <= 0.0 {
        return f64::INFINITY;
    }
    mesh.vertices
        .iter()
        .map(|&v| (v - c).dot(normal).abs())
        .fold(0.0, f64::max)
        / rms
}

/// Deterministic surface sample points in object-local space: every vertex,
/// then face centroids, then area-weighted points on the triangulated faces,
/// until `samples` points exist.
pub fn surface_samples(mesh: &Mesh, samples: usize) -> Vec<Vec3> {
    let mut pts: Vec<Vec3> = mesh.vertices.clone();
    for f in &mesh.faces {
        if pts.len() >= samples {
            return pts;
        }
        pts.push(mesh.face_centroid(f));
    }
    let tris: Vec<[Vec3; 3]> = mesh
        .faces
        .iter()
        .flat_map(|f| {
            let a = mesh.vertices[f[0] as usize];
            (1..f.len() - 1).map(move |k| (a, k, f))
        })
        .map(|(a, k, f)| [a, mesh.vertices[f[k] as usize], mesh.vertices[f[k + 1] as usize]])
        .collect();
    let mut cumulative = Vec::with_capacity(tris.len());
    let mut total = 0.0;
    for [a, b, c] in &tris {
        total += (*b - *a).cross(*c - *a).norm();
        cumulative.push(total);
    }
    if tris.is_empty() || !(total > 0.0) {
        return pts;
    }
    // Remaining points go to triangles in proportion to area (systematic
    // sampling), placed inside each by the R2 low-discrepancy sequence.
    let missing = samples - pts.len();
    for k in 0..missing {
        let target = (k as f64 + 0.5) / missing as f64 * total;
        let t = cumulative.partition_point(|&x| x < target).min(tris.len() - 1);
        let [a, b, c] = tris[t];
        let n = k as f64 + 1.0;
        let mut u = (n * 0.754_877_666_246_692_7).fract();
        let mut v = (n * 0.569_840_290_998_053_2).fract();
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        pts.push(a + (b - a) * u + (c - a) * v);
    }
    pts
}

/// Relative slack on the frustum planes, so that points lying on a plane up
/// to float noise (e.g. after a 9-digit export) count as inside.
pub const FRUSTUM_SLACK: f64 = 1e-6;

/// True when a world-space point lies inside the camera's view frustum.
pub fn point_in_frustum(camera: &Camera, p: Vec3) -> bool {
    let local = camera.transform.rotation.conjugate().rotate(p - camera.transform.location);
    let depth = -local.z;
    let grow = 1.0 + FRUSTUM_SLACK;
    if depth < camera.clip_near / grow || depth > camera.clip_far * grow {
        return false;
    }
    let half_h = depth * (camera.fov_y / 2.0).tan() * grow;
    let half_w = half_h * camera.aspect;
    local.y.abs() <= half_h && local.x.abs() <= half_w
}

/// Fraction of `samples` deterministic surface points of the transformed
/// mesh that fall inside the camera frustum.
pub fn frustum_coverage(
    mesh: &Mesh,
    transform: &Transform,
    camera: &Camera,
    samples: usize,
) -> Result<f64, GeometryError> {
    let (inside, total) = frustum_hits(mesh, transform, camera, samples)?;
    Ok(inside as f64 / total as f64)
}

/// Inside/total sample counts behind [`frustum_coverage`]; summing these over
/// objects gives coverage of their union.
pub fn frustum_hits(
    mesh: &Mesh,
    transform: &Transform,
    camera: &Camera,
    samples: usize,
) -> Result<(usize, usize), GeometryError> {
    if samples < 8 {
        return Err(GeometryError::TooFewSamples(samples));
    }
    if mesh.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    let pts = surface_samples(mesh, samples);
    let inside = pts
        .iter()
        .filter(|&&p| point_in_frustum(camera, transform.apply(p)))
        .count();
    Ok((inside, pts.len()))
}
