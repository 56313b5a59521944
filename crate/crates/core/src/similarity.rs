//! Transform-invariant mesh fingerprints and cohort duplicate scans.
//!
//! Detection is exact up to translation, uniform scale, rotation and
//! element order. Clusters are advisory: symmetric meshes of the same
//! primitive can canonicalize identically for honest submissions.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geometry::{principal_axes, GeometryError};
use crate::scene::{Mesh, Scene, Vec3};

pub const METHOD: &str = "exact-canonical";

/// Grid step of the quantized canonical coordinates.
pub const QUANTUM: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint {
    pub digest: String,
    pub object_name: String,
    pub vertex_count: usize,
    pub face_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClusterMember {
    pub submission_id: String,
    pub object_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateReport {
    pub clusters: Vec<Vec<ClusterMember>>,
    pub method: String,
}

impl Default for DuplicateReport {
    fn default() -> Self {
        Self {
            clusters: Vec::new(),
            method: METHOD.to_owned(),
        }
    }
}

/// Canonical digest of a mesh; `object_name` is left empty.
///
/// The mesh is centered, scaled to unit RMS radius and expressed in a
/// canonical frame. Where the principal axes do not pin the frame down
/// (symmetric along an axis, or equal eigenvalues as for a crown or a cube)
/// every frame the geometry allows is tried and the smallest digest wins.
pub fn mesh_fingerprint(mesh: &Mesh) -> Result<Fingerprint, GeometryError> {
    if mesh.vertices.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    let center = mesh.vertex_centroid();
    let centered: Vec<Vec3> = mesh.vertices.iter().map(|&v| v - center).collect();
    let n = centered.len() as f64;
    let rms = (centered.iter().map(|v| v.dot(*v)).sum::<f64>() / n).sqrt();
    let scale = if rms > 0.0 { 1.0 / rms } else { 1.0 };
    let points: Vec<Vec3> = centered.iter().map(|&v| v * scale).collect();

    let digest = match candidate_frames(&points) {
        Some(frames) => canonical_digest(&points, &mesh.faces, &frames),
        None => invariant_digest(&points, &mesh.faces),
    };
    Ok(Fingerprint {
        digest,
        object_name: String::new(),
        vertex_count: mesh.vertices.len(),
        face_count: mesh.faces.len(),
    })
}

/// Frames tried before giving up on an exact canonical frame.
const MAX_FRAMES: usize = 2048;

/// Relative tolerance for equal eigenvalues and tied extreme vertices.
const TIE_EPS: f64 = 1e-6;

fn candidate_frames(points: &[Vec3]) -> Option<Vec<[Vec3; 3]>> {
    let (axes, values) = principal_axes(points, Vec3::ZERO);
    let tol = TIE_EPS * values[0].max(f64::MIN_POSITIVE);
    let top_tie = values[0] - values[1] <= tol;
    let bottom_tie = values[1] - values[2] <= tol;
    let frames = match (top_tie, bottom_tie) {
        (false, false) => {
            let mut frames = vec![axes];
            for k in 0..3 {
                let sign = moment_sign(points, axes[k]);
                frames = frames
                    .into_iter()
                    .flat_map(|f| {
                        let mut flipped = f;
                        flipped[k] = -f[k];
                        match sign {
                            Some(s) if s > 0.0 => vec![f],
                            Some(_) => vec![flipped],
                            None => vec![f, flipped],
                        }
                    })
                    .collect();
            }
            frames
        }
        (true, true) => {
            let mut frames = Vec::new();
            for a in extreme(points, |p| p.norm()) {
                let e1 = a.normalized()?;
                let perp = |p: Vec3| p - e1 * p.dot(e1);
                let second = extreme(points, |p| perp(p).norm());
                for b in second {
                    let Some(e2) = perp(b).normalized() else {
                        continue;
                    };
                    frames.push([e1, e2, e1.cross(e2)]);
                    if frames.len() > MAX_FRAMES {
                        return None;
                    }
                }
            }
            if frames.is_empty() {
                // every vertex on one line through the centroid
                let e1 = extreme(points, |p| p.norm()).first().and_then(|a| a.normalized());
                let e1 = e1.unwrap_or(Vec3::new(1.0, 0.0, 0.0));
                let e2 = any_perpendicular(e1);
                frames.push([e1, e2, e1.cross(e2)]);
            }
            frames
        }
        _ => {
            let u = if top_tie { axes[2] } else { axes[0] };
            let ups = match moment_sign(points, u) {
                Some(s) => vec![u * s],
                None => vec![u, -u],
            };
            let mut frames = Vec::new();
            for up in ups {
                let flat = |p: Vec3| p - up * p.dot(up);
                let mut dirs: Vec<Vec3> = extreme(points, |p| flat(p).norm())
                    .into_iter()
                    .filter_map(|p| flat(p).normalized())
                    .collect();
                if dirs.is_empty() {
                    dirs.push(any_perpendicular(up));
                }
                for d in dirs {
                    frames.push([d, up.cross(d), up]);
                }
                if frames.len() > MAX_FRAMES {
                    return None;
                }
            }
            frames
        }
    };
    Some(frames)
}

/// Sign of the third moment along `axis`, or `None` when the cloud is
/// symmetric along it.
fn moment_sign(points: &[Vec3], axis: Vec3) -> Option<f64> {
    let m3 = points.iter().map(|p| p.dot(axis).powi(3)).sum::<f64>() / points.len() as f64;
    (m3.abs() > TIE_EPS).then(|| m3.signum())
}

/// All points whose key is within tolerance of the maximum key. Keys below
/// the tolerance count as zero and never qualify.
fn extreme(points: &[Vec3], key: impl Fn(Vec3) -> f64) -> Vec<Vec3> {
    let keys: Vec<f64> = points.iter().map(|&p| key(p)).collect();
    let max = keys.iter().copied().fold(0.0, f64::max);
    if max <= TIE_EPS {
        return Vec::new();
    }
    points
        .iter()
        .zip(&keys)
        .filter(|(_, &k)| max - k <= TIE_EPS * max)
        .map(|(&p, _)| p)
        .collect()
}

fn any_perpendicular(v: Vec3) -> Vec3 {
    let helper = if v.x.abs() < 0.9 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        Vec3::new(0.0, 1.0, 0.0)
    };
    v.cross(helper).normalized().unwrap_or(Vec3::new(0.0, 0.0, 1.0))
}

fn quantize(x: f64) -> i64 {
    (x / QUANTUM).round() as i64
}

fn quantized_in(points: &[Vec3], frame: &[Vec3; 3]) -> Vec<[i64; 3]> {
    points
        .iter()
        .map(|&p| [quantize(p.dot(frame[0])), quantize(p.dot(frame[1])), quantize(p.dot(frame[2]))])
        .collect()
}

/// Canonical (vertex grid, face list) pair for one frame.
fn canonical_form(quantized: &[[i64; 3]], faces: &[Vec<u32>]) -> (Vec<[i64; 3]>, Vec<Vec<u32>>) {
    // Vertices that land on the same grid point share one canonical index,
    // so the result does not depend on the input order of coincident points.
    let mut distinct = quantized.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let remap: Vec<u32> = quantized
        .iter()
        .map(|q| distinct.binary_search(q).expect("present") as u32)
        .collect();
    let mut canonical: Vec<Vec<u32>> = faces
        .iter()
        .map(|f| {
            let mut face: Vec<u32> = f.iter().map(|&i| remap[i as usize]).collect();
            let start = (0..face.len()).min_by_key(|&i| face[i]).unwrap_or(0);
            face.rotate_left(start);
            face
        })
        .collect();
    canonical.sort_unstable();
    (distinct, canonical)
}

/// Lexicographically smallest canonical form over all frames, hashed.
fn canonical_digest(points: &[Vec3], faces: &[Vec<u32>], frames: &[[Vec3; 3]]) -> String {
    // Cheap pass on the sorted vertex grid first; faces only break ties.
    let grids: Vec<Vec<[i64; 3]>> = frames
        .iter()
        .map(|f| {
            let mut q = quantized_in(points, f);
            q.sort_unstable();
            q
        })
        .collect();
    let best_grid = grids.iter().min().expect("at least one frame");
    let best = frames
        .iter()
        .zip(&grids)
        .filter(|(_, g)| *g == best_grid)
        .map(|(f, _)| canonical_form(&quantized_in(points, f), faces))
        .min()
        .expect("at least one frame");
    hash_form(&best.0, &best.1)
}

fn hash_form(vertices: &[[i64; 3]], faces: &[Vec<u32>]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"meshgrade-fingerprint-v1");
    hasher.update((vertices.len() as u64).to_le_bytes());
    for q in vertices {
        for x in q {
            hasher.update(x.to_le_bytes());
        }
    }
    hasher.update((faces.len() as u64).to_le_bytes());
    for f in faces {
        hasher.update((f.len() as u32).to_le_bytes());
        for i in f {
            hasher.update(i.to_le_bytes());
        }
    }
    hex::encode(hasher.finalize())
}

/// Fallback for very symmetric meshes: hashes rotation-invariant per-face
/// descriptors (arity, centroid distance, sorted edge lengths).
fn invariant_digest(points: &[Vec3], faces: &[Vec<u32>]) -> String {
    let mut descriptors: Vec<Vec<i64>> = faces
        .iter()
        .map(|f| {
            let corners: Vec<Vec3> = f.iter().map(|&i| points[i as usize]).collect();
            let centroid = corners.iter().fold(Vec3::ZERO, |a, &b| a + b) / corners.len() as f64;
            let mut edges: Vec<i64> = (0..corners.len())
                .map(|k| quantize((corners[(k + 1) % corners.len()] - corners[k]).norm()))
                .collect();
            edges.sort_unstable();
            let mut d = vec![corners.len() as i64, quantize(centroid.norm())];
            d.extend(edges);
            d
        })
        .collect();
    descriptors.sort();
    let mut hasher = Sha256::new();
    hasher.update(b"meshgrade-fingerprint-invariant-v1");
    hasher.update((points.len() as u64).to_le_bytes());
    for d in &descriptors {
        hasher.update((d.len() as u32).to_le_bytes());
        for x in d {
            hasher.update(x.to_le_bytes());
        }
    }
    hex::encode(hasher.finalize())
}

/// Fingerprints of every non-empty object of a scene, in name order.
pub fn scene_fingerprints(scene: &Scene) -> Vec<Fingerprint> {
    let mut out: Vec<Fingerprint> = scene
        .objects
        .iter()
        .filter_map(|o| {
            mesh_fingerprint(&o.mesh).ok().map(|f| Fingerprint {
                object_name: o.name.clone(),
                ..f
            })
        })
        .collect();
    out.sort_by(|a, b| a.object_name.cmp(&b.object_name));
    out
}

/// Groups equal digests across submissions. A cluster needs members from at
/// least two different submissions; digests in `exclude` are ignored.
/// Members are sorted and clusters are ordered by their smallest member.
pub fn cluster_fingerprints<'a>(
    fingerprints: impl IntoIterator<Item = (&'a str, &'a Fingerprint)>,
    exclude: &BTreeSet<String>,
) -> DuplicateReport {
    let mut groups: BTreeMap<&str, BTreeSet<ClusterMember>> = BTreeMap::new();
    for (id, fp) in fingerprints {
        if exclude.contains(&fp.digest) {
            continue;
        }
        groups.entry(fp.digest.as_str()).or_default().insert(ClusterMember {
            submission_id: id.to_owned(),
            object_name: fp.object_name.clone(),
        });
    }
    let mut clusters: Vec<Vec<ClusterMember>> = groups
        .into_values()
        .filter(|members| {
            let ids: BTreeSet<&str> = members.iter().map(|m| m.submission_id.as_str()).collect();
            ids.len() >= 2
        })
        .map(|members| members.into_iter().collect())
        .collect();
    clusters.sort();
    DuplicateReport {
        clusters,
        method: METHOD.to_owned(),
    }
}

/// Fingerprints all submissions in parallel and clusters the digests.
pub fn scan_duplicates(submissions: &[(String, Scene)], exclude: &BTreeSet<String>) -> DuplicateReport {
    let fingerprints: Vec<(&str, Vec<Fingerprint>)> = submissions
        .par_iter()
        .map(|(id, scene)| (id.as_str(), scene_fingerprints(scene)))
        .collect();
    cluster_fingerprints(
        fingerprints
            .iter()
            .flat_map(|(id, fps)| fps.iter().map(move |f| (*id, f))),
        exclude,
    )
}

/// Digests of every object of a scene, used to exclude rubric geometry.
pub fn digests_of(scene: &Scene) -> BTreeSet<String> {
    scene_fingerprints(scene).into_iter().map(|f| f.digest).collect()
}
