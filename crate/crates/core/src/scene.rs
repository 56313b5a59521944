//! Core domain types shared by every other module.
//!
//! Everything in here is plain data with validating constructors. Fields are
//! public so callers can pattern-match and build fixtures freely; the
//! constructors and [`crate::ingest::validate_scene`] are where invariants are
//! enforced.

use std::collections::HashSet;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Violation of a scene-model invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("quaternion has zero norm")]
    ZeroQuaternion,
    #[error("scale components must be strictly positive, got {0}")]
    NonPositiveScale(Vec3),
    #[error("face {face} has {arity} vertices; at least 3 are required")]
    FaceTooSmall { face: usize, arity: usize },
    #[error("face {face} references vertex {index} but the mesh has {count} vertices")]
    FaceIndexOutOfRange { face: usize, index: u32, count: usize },
    #[error("face {face} repeats vertex {index}")]
    FaceRepeatsVertex { face: usize, index: u32 },
    #[error("object name must not be empty")]
    EmptyName,
    #[error("duplicate object name {0:?}")]
    DuplicateObjectName(String),
    #[error("duplicate camera name {0:?}")]
    DuplicateCameraName(String),
    #[error("camera fov_y must lie in (0, pi), got {0}")]
    InvalidFov(f64),
    #[error("camera aspect must be positive, got {0}")]
    InvalidAspect(f64),
    #[error("camera clip range must satisfy 0 < near < far, got near={near} far={far}")]
    InvalidClip { near: f64, far: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const ONE: Vec3 = Vec3::new(1.0, 1.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Validating constructor; rejects NaN and infinities.
    pub fn try_new(x: f64, y: f64, z: f64) -> Result<Self, SceneError> {
        let v = Self::new(x, y, z);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(SceneError::NonFinite("vector"))
        }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self / n)
    }

    pub fn component_mul(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn max_component(self) -> f64 {
        self.x.max(self.y).max(self.z)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Rotation stored as a unit quaternion `(w, x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Builds a quaternion and normalizes it to unit length.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self, SceneError> {
        if !(w.is_finite() && x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(SceneError::NonFinite("quaternion"));
        }
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(SceneError::ZeroQuaternion);
        }
        Ok(Self {
            w: w / n,
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self, SceneError> {
        let axis = axis.normalized().ok_or(SceneError::ZeroQuaternion)?;
        let (s, c) = (angle / 2.0).sin_cos();
        Self::new(c, axis.x * s, axis.y * s, axis.z * s)
    }

    /// Converts XYZ Euler angles (radians) to a quaternion. The resulting
    /// rotation matrix is `Rz * Ry * Rx`, i.e. X is applied first.
    pub fn from_euler_xyz(rx: f64, ry: f64, rz: f64) -> Result<Self, SceneError> {
        if !(rx.is_finite() && ry.is_finite() && rz.is_finite()) {
            return Err(SceneError::NonFinite("euler angles"));
        }
        let (sx, cx) = (rx / 2.0).sin_cos();
        let (sy, cy) = (ry / 2.0).sin_cos();
        let (sz, cz) = (rz / 2.0).sin_cos();
        // qz * qy * qx
        Self::new(
            cz * cy * cx + sz * sy * sx,
            cz * cy * sx - sz * sy * cx,
            cz * sy * cx + sz * cy * sx,
            sz * cy * cx - cz * sy * sx,
        )
    }

    /// Inverse of [`Quaternion::from_euler_xyz`]. Returns `(rx, ry, rz)`.
    pub fn to_euler_xyz(self) -> (f64, f64, f64) {
        let m = self.to_matrix();
        // m = Rz*Ry*Rx, so m[2][0] = -sin(ry)
        let sy = (-m[2][0]).clamp(-1.0, 1.0);
        let ry = sy.asin();
        if sy.abs() < 1.0 - 1e-12 {
            let rx = m[2][1].atan2(m[2][2]);
            let rz = m[1][0].atan2(m[0][0]);
            (rx, ry, rz)
        } else {
            // gimbal lock: fold rz into rx
            let rx = (-m[1][2]).atan2(m[1][1]);
            (rx, ry, 0.0)
        }
    }

    pub fn dot(self, o: Quaternion) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn conjugate(self) -> Quaternion {
        Quaternion {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Hamilton product `self * o`.
    pub fn mul(self, o: Quaternion) -> Quaternion {
        Quaternion {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    pub fn rotate(self, v: Vec3) -> Vec3 {
        let u = Vec3::new(self.x, self.y, self.z);
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }

    /// Row-major 3x3 rotation matrix.
    pub fn to_matrix(self) -> [[f64; 3]; 3] {
        let Quaternion { w, x, y, z } = self;
        [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Object pose: scale, then rotate, then translate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub location: Vec3,
    pub rotation: Quaternion,
    pub scale: Vec3,
}

impl Default for Transform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Transform {
    pub const IDENTITY: Transform = Transform {
        location: Vec3::ZERO,
        rotation: Quaternion::IDENTITY,
        scale: Vec3::ONE,
    };

    pub fn new(location: Vec3, rotation: Quaternion, scale: Vec3) -> Result<Self, SceneError> {
        if !location.is_finite() {
            return Err(SceneError::NonFinite("location"));
        }
        if !scale.is_finite() {
            return Err(SceneError::NonFinite("scale"));
        }
        if scale.x <= 0.0 || scale.y <= 0.0 || scale.z <= 0.0 {
            return Err(SceneError::NonPositiveScale(scale));
        }
        let rotation = if (rotation.norm() - 1.0).abs() > 1e-9 {
            Quaternion::new(rotation.w, rotation.x, rotation.y, rotation.z)?
        } else if rotation.norm().is_finite() {
            rotation
        } else {
            return Err(SceneError::NonFinite("quaternion"));
        };
        Ok(Self {
            location,
            rotation,
            scale,
        })
    }

    pub fn from_location(location: Vec3) -> Self {
        Self {
            location,
            ..Self::IDENTITY
        }
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation.rotate(p.component_mul(self.scale)) + self.location
    }

    /// Rigid composition `outer ∘ self`, ignoring `outer.scale`.
    pub fn then_rigid(&self, outer: &Transform) -> Transform {
        Transform {
            location: outer.rotation.rotate(self.location) + outer.location,
            rotation: outer.rotation.mul(self.rotation),
            scale: self.scale,
        }
    }

    /// Expresses this pose in the rigid frame `frame` (its scale is ignored).
    pub fn relative_to(&self, frame: &Transform) -> Transform {
        let inv = frame.rotation.conjugate();
        Transform {
            location: inv.rotate(self.location - frame.location),
            rotation: inv.mul(self.rotation),
            scale: self.scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<Vec<u32>>,
}

impl Mesh {
    /// Validates face indices. An empty face list is allowed here;
    /// `validate_scene` reports it as "empty mesh".
    pub fn new(vertices: Vec<Vec3>, faces: Vec<Vec<u32>>) -> Result<Self, SceneError> {
        let mesh = Self { vertices, faces };
        mesh.check()?;
        Ok(mesh)
    }

    pub fn check(&self) -> Result<(), SceneError> {
        if self.vertices.iter().any(|v| !v.is_finite()) {
            return Err(SceneError::NonFinite("vertex"));
        }
        let count = self.vertices.len();
        for (fi, face) in self.faces.iter().enumerate() {
            check_face(fi, face, count)?;
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty() || self.vertices.is_empty()
    }

    pub fn face_points<'a>(&'a self, face: &'a [u32]) -> impl Iterator<Item = Vec3> + 'a {
        face.iter().map(move |&i| self.vertices[i as usize])
    }

    pub fn face_centroid(&self, face: &[u32]) -> Vec3 {
        let sum = self.face_points(face).fold(Vec3::ZERO, |a, p| a + p);
        sum / face.len() as f64
    }

    /// Area-weighted normal via Newell's method; its length is twice the
    /// polygon area.
    pub fn face_area_vector(&self, face: &[u32]) -> Vec3 {
        let n = face.len();
        let mut acc = Vec3::ZERO;
        for k in 0..n {
            let a = self.vertices[face[k] as usize];
            let b = self.vertices[face[(k + 1) % n] as usize];
            acc = acc + a.cross(b);
        }
        acc
    }

    pub fn vertex_centroid(&self) -> Vec3 {
        let sum = self.vertices.iter().fold(Vec3::ZERO, |a, &p| a + p);
        sum / self.vertices.len().max(1) as f64
    }
}

pub(crate) fn check_face(fi: usize, face: &[u32], count: usize) -> Result<(), SceneError> {
    if face.len() < 3 {
        return Err(SceneError::FaceTooSmall {
            face: fi,
            arity: face.len(),
        });
    }
    for (k, &idx) in face.iter().enumerate() {
        if idx as usize >= count {
            return Err(SceneError::FaceIndexOutOfRange {
                face: fi,
                index: idx,
                count,
            });
        }
        if face[..k].contains(&idx) {
            return Err(SceneError::FaceRepeatsVertex {
                face: fi,
                index: idx,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveType {
    Cube,
    UvSphere,
    Torus,
    Cylinder,
    Cone,
    Plane,
    Unknown,
}

impl PrimitiveType {
    pub const ALL: [PrimitiveType; 7] = [
        PrimitiveType::Cube,
        PrimitiveType::UvSphere,
        PrimitiveType::Torus,
        PrimitiveType::Cylinder,
        PrimitiveType::Cone,
        PrimitiveType::Plane,
        PrimitiveType::Unknown,
    ];

    /// Identifier used in SGF documents.
    pub fn as_str(self) -> &'static str {
        match self {
            PrimitiveType::Cube => "cube",
            PrimitiveType::UvSphere => "uv_sphere",
            PrimitiveType::Torus => "torus",
            PrimitiveType::Cylinder => "cylinder",
            PrimitiveType::Cone => "cone",
            PrimitiveType::Plane => "plane",
            PrimitiveType::Unknown => "unknown",
        }
    }

    /// Human-readable label for feedback text.
    pub fn label(self) -> &'static str {
        match self {
            PrimitiveType::Cube => "cube",
            PrimitiveType::UvSphere => "UV sphere",
            PrimitiveType::Torus => "torus",
            PrimitiveType::Cylinder => "cylinder",
            PrimitiveType::Cone => "cone",
            PrimitiveType::Plane => "plane",
            PrimitiveType::Unknown => "unrecognized shape",
        }
    }

    /// Parses an SGF primitive name. Unrecognized names map to `Unknown`.
    pub fn from_name(s: &str) -> PrimitiveType {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .unwrap_or(PrimitiveType::Unknown)
    }
}

impl fmt::Display for PrimitiveType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub name: String,
    pub declared_primitive: Option<PrimitiveType>,
    pub transform: Transform,
    pub mesh: Mesh,
    pub modifiers: Vec<String>,
}

impl SceneObject {
    pub fn new(name: impl Into<String>, transform: Transform, mesh: Mesh) -> Self {
        Self {
            name: name.into(),
            declared_primitive: None,
            transform,
            mesh,
            modifiers: Vec::new(),
        }
    }

    pub fn with_primitive(mut self, p: PrimitiveType) -> Self {
        self.declared_primitive = Some(p);
        self
    }

    pub fn with_modifiers<I, S>(mut self, mods: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.modifiers = mods.into_iter().map(Into::into).collect();
        self
    }
}

/// Perspective camera. Looks down its local -Z axis with +Y up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub name: String,
    pub transform: Transform,
    pub fov_y: f64,
    pub aspect: f64,
    pub clip_near: f64,
    pub clip_far: f64,
}

impl Camera {
    pub fn new(
        name: impl Into<String>,
        transform: Transform,
        fov_y: f64,
        aspect: f64,
        clip_near: f64,
        clip_far: f64,
    ) -> Result<Self, SceneError> {
        let cam = Self {
            name: name.into(),
            transform,
            fov_y,
            aspect,
            clip_near,
            clip_far,
        };
        cam.check()?;
        Ok(cam)
    }

    pub fn check(&self) -> Result<(), SceneError> {
        if self.name.is_empty() {
            return Err(SceneError::EmptyName);
        }
        if !(self.fov_y > 0.0 && self.fov_y < std::f64::consts::PI) {
            return Err(SceneError::InvalidFov(self.fov_y));
        }
        if !(self.aspect > 0.0 && self.aspect.is_finite()) {
            return Err(SceneError::InvalidAspect(self.aspect));
        }
        if !(self.clip_near > 0.0 && self.clip_near < self.clip_far && self.clip_far.is_finite()) {
            return Err(SceneError::InvalidClip {
                near: self.clip_near,
                far: self.clip_far,
            });
        }
        Ok(())
    }

    /// Builds a camera at `eye` looking at `target` with world +Z as up.
    pub fn look_at(
        name: impl Into<String>,
        eye: Vec3,
        target: Vec3,
        fov_y: f64,
        aspect: f64,
    ) -> Result<Self, SceneError> {
        let rotation = look_rotation(target - eye, Vec3::new(0.0, 0.0, 1.0))?;
        let transform = Transform {
            location: eye,
            rotation,
            scale: Vec3::ONE,
        };
        Self::new(name, transform, fov_y, aspect, 0.1, 100.0)
    }
}

/// Rotation taking local -Z onto `forward` and local +Y towards `up`.
pub fn look_rotation(forward: Vec3, up: Vec3) -> Result<Quaternion, SceneError> {
    let f = forward.normalized().ok_or(SceneError::ZeroQuaternion)?;
    let mut right = f.cross(up);
    if right.norm() < 1e-9 {
        right = f.cross(Vec3::new(0.0, 1.0, 0.0));
    }
    let right = right.normalized().ok_or(SceneError::ZeroQuaternion)?;
    let true_up = right.cross(f);
    let back = -f;
    // columns: right (x), up (y), back (z)
    let m = [
        [right.x, true_up.x, back.x],
        [right.y, true_up.y, back.y],
        [right.z, true_up.z, back.z],
    ];
    Ok(quaternion_from_matrix(m))
}

pub(crate) fn quaternion_from_matrix(m: [[f64; 3]; 3]) -> Quaternion {
    let trace = m[0][0] + m[1][1] + m[2][2];
    let (w, x, y, z) = if trace > 0.0 {
        let s = (trace + 1.0).sqrt() * 2.0;
        (
            0.25 * s,
            (m[2][1] - m[1][2]) / s,
            (m[0][2] - m[2][0]) / s,
            (m[1][0] - m[0][1]) / s,
        )
    } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
        let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
        (
            (m[2][1] - m[1][2]) / s,
            0.25 * s,
            (m[0][1] + m[1][0]) / s,
            (m[0][2] + m[2][0]) / s,
        )
    } else if m[1][1] > m[2][2] {
        let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
        (
            (m[0][2] - m[2][0]) / s,
            (m[0][1] + m[1][0]) / s,
            0.25 * s,
            (m[1][2] + m[2][1]) / s,
        )
    } else {
        let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
        (
            (m[1][0] - m[0][1]) / s,
            (m[0][2] + m[2][0]) / s,
            (m[1][2] + m[2][1]) / s,
            0.25 * s,
        )
    };
    Quaternion::new(w, x, y, z).unwrap_or(Quaternion::IDENTITY)
}

/// Where a scene came from. OBJ input carries no poses or cameras.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneSource {
    #[default]
    Sgf,
    Obj,
}

impl SceneSource {
    pub fn has_pose(self) -> bool {
        matches!(self, SceneSource::Sgf)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
    pub cameras: Vec<Camera>,
    pub units: String,
    pub source: SceneSource,
}

impl Scene {
    pub fn new(objects: Vec<SceneObject>, cameras: Vec<Camera>) -> Result<Self, SceneError> {
        let scene = Self {
            objects,
            cameras,
            units: "blender".to_owned(),
            source: SceneSource::Sgf,
        };
        scene.check()?;
        Ok(scene)
    }

    /// Checks every structural invariant of the scene and its parts.
    pub fn check(&self) -> Result<(), SceneError> {
        let mut names = HashSet::new();
        for obj in &self.objects {
            if obj.name.is_empty() {
                return Err(SceneError::EmptyName);
            }
            if !names.insert(obj.name.as_str()) {
                return Err(SceneError::DuplicateObjectName(obj.name.clone()));
            }
            Transform::new(
                obj.transform.location,
                obj.transform.rotation,
                obj.transform.scale,
            )?;
            obj.mesh.check()?;
        }
        let mut cams = HashSet::new();
        for cam in &self.cameras {
            cam.check()?;
            if !cams.insert(cam.name.as_str()) {
                return Err(SceneError::DuplicateCameraName(cam.name.clone()));
            }
        }
        Ok(())
    }

    pub fn object(&self, name: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.name == name)
    }

    /// First camera in name order.
    pub fn primary_camera(&self) -> Option<&Camera> {
        self.cameras.iter().min_by(|a, b| a.name.cmp(&b.name))
    }
}
