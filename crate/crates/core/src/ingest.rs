//! Parsing and validation of submission files.
//!
//! Two formats are accepted:
//!
//! * SGF (Scene Grading Format), a JSON document carrying objects with
//!   transforms, meshes and modifier labels, plus cameras.
//! * Wavefront OBJ as a geometry-only fallback. OBJ has no transforms or
//!   cameras, so the resulting scene is marked [`SceneSource::Obj`] and the
//!   pose and camera checks report "not assessable".
//!
//! Parsers never panic on bad input; every problem is reported as a
//! [`Finding`] with a path into the document.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::scene::{
    check_face, Camera, Mesh, PrimitiveType, Quaternion, Scene, SceneObject, SceneSource, Transform, Vec3,
};

pub const SGF_VERSION: u64 = 1;

/// Declared quaternions further than this from unit norm are rejected.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-3;

/// Faces whose area is below this are reported as degenerate.
pub const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty() && self.warnings.is_empty()
    }

    pub fn error(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Finding {
            path: path.into(),
            message: message.into(),
        });
    }

    pub fn warn(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Finding {
            path: path.into(),
            message: message.into(),
        });
    }

    fn merge(&mut self, other: ValidationReport) {
        self.errors.extend(other.errors);
        self.warnings.extend(other.warnings);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

/// A successfully parsed scene together with any non-fatal findings.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub scene: Scene,
    pub warnings: Vec<Finding>,
}

/// Parses a file by extension: `.obj` as OBJ, everything else as SGF.
pub fn parse_by_name(file_name: &str, bytes: &[u8]) -> Result<Parsed, ValidationReport> {
    crate::pipeline::SubmissionFormat::from_file_name(file_name).parse(bytes)
}

pub fn parse_sgf(bytes: &[u8]) -> Result<Parsed, ValidationReport> {
    let mut report = ValidationReport::default();
    let text = match std::str::from_utf8(bytes) {
        Ok(t) => t,
        Err(e) => {
            report.error("", format!("document is not valid UTF-8 (byte {})", e.valid_up_to()));
            return Err(report);
        }
    };
    let doc: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => {
            report.error(
                format!("line {}, column {}", e.line(), e.column()),
                format!("malformed JSON: {e}"),
            );
            return Err(report);
        }
    };
    parse_sgf_value(&doc)
}

/// Parses an already-decoded SGF JSON value.
pub fn parse_sgf_value(doc: &Value) -> Result<Parsed, ValidationReport> {
    let mut r = ValidationReport::default();
    let Some(root) = doc.as_object() else {
        r.error("", "SGF document must be a JSON object");
        return Err(r);
    };
    warn_unknown(&mut r, "", root, &["sgf_version", "units", "objects", "cameras"]);

    match root.get("sgf_version").map(Value::as_u64) {
        Some(Some(SGF_VERSION)) => {}
        Some(_) => r.error("sgf_version", format!("unsupported version; expected {SGF_VERSION}")),
        None => r.error("sgf_version", "missing field"),
    }
    let units = match root.get("units") {
        None | Some(Value::Null) => "blender".to_owned(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => {
            r.error("units", "expected a string");
            String::new()
        }
    };

    let mut objects = Vec::new();
    match root.get("objects") {
        Some(Value::Array(items)) => {
            let mut names = HashSet::new();
            for (i, item) in items.iter().enumerate() {
                let path = format!("objects[{i}]");
                if let Some(obj) = parse_object(&mut r, &path, item) {
                    if !names.insert(obj.name.clone()) {
                        r.error(format!("{path}.name"), format!("duplicate object name {:?}", obj.name));
                    }
                    objects.push(obj);
                }
            }
        }
        Some(_) => r.error("objects", "expected an array"),
        None => r.error("objects", "missing field"),
    }

    let mut cameras = Vec::new();
    match root.get("cameras") {
        None | Some(Value::Null) => {}
        Some(Value::Array(items)) => {
            let mut names = HashSet::new();
            for (i, item) in items.iter().enumerate() {
                let path = format!("cameras[{i}]");
                if let Some(cam) = parse_camera(&mut r, &path, item) {
                    if !names.insert(cam.name.clone()) {
                        r.error(format!("{path}.name"), format!("duplicate camera name {:?}", cam.name));
                    }
                    cameras.push(cam);
                }
            }
        }
        Some(_) => r.error("cameras", "expected an array"),
    }

    if !r.is_ok() {
        return Err(r);
    }
    let scene = Scene {
        objects,
        cameras,
        units,
        source: SceneSource::Sgf,
    };
    r.merge(validate_scene(&scene));
    if r.is_ok() {
        Ok(Parsed {
            scene,
            warnings: r.warnings,
        })
    } else {
        Err(r)
    }
}

fn warn_unknown(r: &mut ValidationReport, path: &str, map: &Map<String, Value>, known: &[&str]) {
    for key in map.keys().filter(|k| !known.contains(&k.as_str())) {
        r.warn(join(path, key), "unknown field ignored");
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_owned()
    } else {
        format!("{path}.{key}")
    }
}

fn number(r: &mut ValidationReport, path: &str, v: Option<&Value>) -> Option<f64> {
    match v {
        None => {
            r.error(path, "missing field");
            None
        }
        Some(v) => match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                r.error(path, "expected a finite number");
                None
            }
        },
    }
}

fn numbers<const N: usize>(r: &mut ValidationReport, path: &str, v: Option<&Value>) -> Option<[f64; N]> {
    let Some(v) = v else {
        r.error(path, "missing field");
        return None;
    };
    let arr = match v.as_array() {
        Some(a) if a.len() == N => a,
        _ => {
            r.error(path, format!("expected an array of {N} numbers"));
            return None;
        }
    };
    let mut out = [0.0; N];
    for (k, x) in arr.iter().enumerate() {
        match x.as_f64() {
            Some(x) if x.is_finite() => out[k] = x,
            _ => {
                r.error(format!("{path}[{k}]"), "expected a finite number");
                return None;
            }
        }
    }
    Some(out)
}

fn name_field(r: &mut ValidationReport, path: &str, map: &Map<String, Value>) -> Option<String> {
    match map.get("name") {
        Some(Value::String(s)) if !s.is_empty() => Some(s.clone()),
        Some(Value::String(_)) => {
            r.error(join(path, "name"), "name must not be empty");
            None
        }
        Some(_) => {
            r.error(join(path, "name"), "expected a string");
            None
        }
        None => {
            r.error(join(path, "name"), "missing field");
            None
        }
    }
}

fn parse_transform(r: &mut ValidationReport, path: &str, v: Option<&Value>, camera: bool) -> Option<Transform> {
    let Some(v) = v else {
        r.error(path, "missing transform");
        return None;
    };
    let Some(map) = v.as_object() else {
        r.error(path, "transform must be an object");
        return None;
    };
    warn_unknown(
        r,
        path,
        map,
        &["location", "rotation_quaternion", "rotation_euler_xyz", "scale"],
    );
    let location = numbers::<3>(r, &join(path, "location"), map.get("location")).map(Vec3::from_array);
    let rotation = match (map.get("rotation_quaternion"), map.get("rotation_euler_xyz")) {
        (Some(_), Some(_)) => {
            r.error(path, "give exactly one of rotation_quaternion and rotation_euler_xyz");
            None
        }
        (None, None) => {
            r.error(path, "missing rotation (rotation_quaternion or rotation_euler_xyz)");
            None
        }
        (Some(q), None) => {
            let qpath = join(path, "rotation_quaternion");
            numbers::<4>(r, &qpath, Some(q)).and_then(|[w, x, y, z]| {
                let n = (w * w + x * x + y * y + z * z).sqrt();
                if (n - 1.0).abs() > QUATERNION_NORM_TOLERANCE {
                    r.error(qpath, format!("quaternion norm {n} is not within 1e-3 of 1"));
                    None
                } else {
                    Quaternion::new(w, x, y, z).ok()
                }
            })
        }
        (None, Some(e)) => {
            let epath = join(path, "rotation_euler_xyz");
            numbers::<3>(r, &epath, Some(e)).and_then(|[x, y, z]| match Quaternion::from_euler_xyz(x, y, z) {
                Ok(q) => Some(q),
                Err(err) => {
                    r.error(epath, err.to_string());
                    None
                }
            })
        }
    };
    let spath = join(path, "scale");
    let scale = if camera {
        // scale is irrelevant to projection
        if map.contains_key("scale") {
            numbers::<3>(r, &spath, map.get("scale"));
        }
        Some(Vec3::ONE)
    } else {
        numbers::<3>(r, &spath, map.get("scale")).map(Vec3::from_array).and_then(|s| {
            if s.x > 0.0 && s.y > 0.0 && s.z > 0.0 {
                Some(s)
            } else {
                r.error(spath, "scale components must be strictly positive");
                None
            }
        })
    };
    let (location, rotation, scale) = (location?, rotation?, scale?);
    match Transform::new(location, rotation, scale) {
        Ok(t) => Some(t),
        Err(e) => {
            r.error(path, e.to_string());
            None
        }
    }
}

fn parse_mesh(r: &mut ValidationReport, path: &str, v: Option<&Value>) -> Option<Mesh> {
    let Some(map) = v.and_then(Value::as_object) else {
        r.error(path, "missing or non-object mesh");
        return None;
    };
    warn_unknown(r, path, map, &["vertices", "faces"]);
    let errors_before = r.errors.len();
    let vpath = join(path, "vertices");
    let mut vertices = Vec::new();
    match map.get("vertices").and_then(Value::as_array) {
        Some(items) => {
            vertices.reserve(items.len());
            for (i, item) in items.iter().enumerate() {
                if let Some(p) = numbers::<3>(r, &format!("{vpath}[{i}]"), Some(item)) {
                    vertices.push(Vec3::from_array(p));
                }
            }
        }
        None => r.error(vpath, "expected an array of [x, y, z]"),
    }
    let fpath = join(path, "faces");
    let mut faces = Vec::new();
    match map.get("faces").and_then(Value::as_array) {
        Some(items) => {
            faces.reserve(items.len());
            for (i, item) in items.iter().enumerate() {
                let here = format!("{fpath}[{i}]");
                let Some(idx) = item.as_array() else {
                    r.error(here, "expected an array of vertex indices");
                    continue;
                };
                let face: Option<Vec<u32>> = idx
                    .iter()
                    .map(|x| x.as_u64().and_then(|x| u32::try_from(x).ok()))
                    .collect();
                let Some(face) = face else {
                    r.error(here, "vertex indices must be non-negative integers");
                    continue;
                };
                if let Err(e) = check_face(i, &face, vertices.len()) {
                    r.error(here, e.to_string());
                    continue;
                }
                faces.push(face);
            }
        }
        None => r.error(fpath, "expected an array of faces"),
    }
    (r.errors.len() == errors_before).then_some(Mesh { vertices, faces })
}

fn parse_object(r: &mut ValidationReport, path: &str, v: &Value) -> Option<SceneObject> {
    let Some(map) = v.as_object() else {
        r.error(path, "object entry must be a JSON object");
        return None;
    };
    warn_unknown(r, path, map, &["name", "primitive", "transform", "mesh", "modifiers"]);
    let name = name_field(r, path, map);
    let declared_primitive = match map.get("primitive") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => match PrimitiveType::from_name(s) {
            PrimitiveType::Unknown => {
                r.warn(join(path, "primitive"), format!("unrecognized primitive {s:?} ignored"));
                None
            }
            p => Some(p),
        },
        Some(_) => {
            r.error(join(path, "primitive"), "expected a string or null");
            None
        }
    };
    let transform = parse_transform(r, &join(path, "transform"), map.get("transform"), false);
    let mesh = parse_mesh(r, &join(path, "mesh"), map.get("mesh"));
    let mut modifiers = Vec::new();
    match map.get("modifiers") {
        None | Some(Value::Null) => {}
        Some(Value::Array(items)) => {
            for (i, m) in items.iter().enumerate() {
                match m.as_str() {
                    Some(s) => modifiers.push(s.to_owned()),
                    None => r.error(format!("{path}.modifiers[{i}]"), "expected a string"),
                }
            }
        }
        Some(_) => r.error(join(path, "modifiers"), "expected an array of strings"),
    }
    Some(SceneObject {
        name: name?,
        declared_primitive,
        transform: transform?,
        mesh: mesh?,
        modifiers,
    })
}

fn parse_camera(r: &mut ValidationReport, path: &str, v: &Value) -> Option<Camera> {
    let Some(map) = v.as_object() else {
        r.error(path, "camera entry must be a JSON object");
        return None;
    };
    warn_unknown(
        r,
        path,
        map,
        &["name", "transform", "fov_y_radians", "aspect", "clip_near", "clip_far"],
    );
    let name = name_field(r, path, map);
    let transform = parse_transform(r, &join(path, "transform"), map.get("transform"), true);
    let fov = number(r, &join(path, "fov_y_radians"), map.get("fov_y_radians"));
    let aspect = number(r, &join(path, "aspect"), map.get("aspect"));
    let near = number(r, &join(path, "clip_near"), map.get("clip_near"));
    let far = number(r, &join(path, "clip_far"), map.get("clip_far"));
    match Camera::new(name?, transform?, fov?, aspect?, near?, far?) {
        Ok(c) => Some(c),
        Err(e) => {
            r.error(path, e.to_string());
            None
        }
    }
}

/// Semantic checks on a structurally complete scene. Never mutates it.
pub fn validate_scene(scene: &Scene) -> ValidationReport {
    let mut r = ValidationReport::default();
    let mut names = HashSet::new();
    for (i, obj) in scene.objects.iter().enumerate() {
        let path = format!("objects[{i}]");
        if obj.name.is_empty() {
            r.error(format!("{path}.name"), "name must not be empty");
        } else if !names.insert(obj.name.as_str()) {
            r.error(format!("{path}.name"), format!("duplicate object name {:?}", obj.name));
        }
        let t = &obj.transform;
        if let Err(e) = Transform::new(t.location, t.rotation, t.scale) {
            r.error(format!("{path}.transform"), e.to_string());
        }
        if let Err(e) = obj.mesh.check() {
            r.error(format!("{path}.mesh"), e.to_string());
            continue;
        }
        if obj.mesh.is_empty() {
            r.error(format!("{path}.mesh"), "empty mesh");
            continue;
        }
        for (j, f) in obj.mesh.faces.iter().enumerate() {
            if obj.mesh.face_area_vector(f).norm() / 2.0 < DEGENERATE_AREA {
                r.warn(format!("{path}.mesh.faces[{j}]"), "degenerate face");
            }
        }
    }
    let mut cams = HashSet::new();
    for (i, cam) in scene.cameras.iter().enumerate() {
        let path = format!("cameras[{i}]");
        if let Err(e) = cam.check() {
            r.error(path.clone(), e.to_string());
        }
        if !cams.insert(cam.name.as_str()) {
            r.error(format!("{path}.name"), format!("duplicate camera name {:?}", cam.name));
        }
    }
    r
}

fn transform_json(t: &Transform, camera: bool) -> Value {
    let q = t.rotation;
    let mut v = json!({
        "location": t.location.to_array(),
        "rotation_quaternion": [q.w, q.x, q.y, q.z],
    });
    if !camera {
        v["scale"] = json!(t.scale.to_array());
    }
    v
}

/// Serializes a scene as an SGF JSON value.
pub fn to_sgf_value(scene: &Scene) -> Value {
    let objects: Vec<Value> = scene
        .objects
        .iter()
        .map(|o| {
            json!({
                "name": o.name,
                "primitive": o.declared_primitive.map(PrimitiveType::as_str),
                "transform": transform_json(&o.transform, false),
                "mesh": {
                    "vertices": o.mesh.vertices.iter().map(|v| v.to_array()).collect::<Vec<_>>(),
                    "faces": o.mesh.faces,
                },
                "modifiers": o.modifiers,
            })
        })
        .collect();
    let cameras: Vec<Value> = scene
        .cameras
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "transform": transform_json(&c.transform, true),
                "fov_y_radians": c.fov_y,
                "aspect": c.aspect,
                "clip_near": c.clip_near,
                "clip_far": c.clip_far,
            })
        })
        .collect();
    json!({
        "sgf_version": SGF_VERSION,
        "units": scene.units,
        "objects": objects,
        "cameras": cameras,
    })
}

pub fn to_sgf(scene: &Scene) -> String {
    serde_json::to_string(&to_sgf_value(scene)).expect("SGF values always serialize")
}

/// Writes the scene as OBJ with transforms baked into world coordinates.
pub fn to_obj(scene: &Scene) -> String {
    let mut out = String::new();
    let mut base = 1usize;
    for obj in &scene.objects {
        let _ = writeln!(out, "o {}", obj.name);
        for &v in &obj.mesh.vertices {
            let p = obj.transform.apply(v);
            let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
        }
        for f in &obj.mesh.faces {
            out.push('f');
            for &i in f {
                let _ = write!(out, " {}", i as usize + base);
            }
            out.push('\n');
        }
        base += obj.mesh.vertices.len();
    }
    out
}

/// Parses Wavefront OBJ text. `v`, `f`, `o`, `g` and comments are honored;
/// other records are ignored with one warning per record type.
pub fn parse_obj(bytes: &[u8]) -> Result<Parsed, ValidationReport> {
    let mut r = ValidationReport::default();
    let text = String::from_utf8_lossy(bytes);
    let mut vertices: Vec<Vec3> = Vec::new();
    // object name -> faces (global vertex indices), in order of first appearance
    let mut groups: Vec<(String, Vec<Vec<usize>>)> = Vec::new();
    let mut current: Option<usize> = None;
    let mut ignored: BTreeMap<String, (usize, usize)> = BTreeMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        let Some(keyword) = tokens.next() else { continue };
        let here = format!("line {line_no}");
        match keyword {
            "v" => {
                let comps: Vec<&str> = tokens.collect();
                if comps.len() < 3 {
                    r.error(here, "vertex needs three coordinates");
                    continue;
                }
                let parsed: Result<Vec<f64>, _> = comps[..3].iter().map(|s| s.parse::<f64>()).collect();
                match parsed {
                    Ok(c) if c.iter().all(|x| x.is_finite()) => vertices.push(Vec3::new(c[0], c[1], c[2])),
                    _ => r.error(here, "non-numeric vertex component"),
                }
            }
            "f" => {
                let mut face = Vec::new();
                let mut ok = true;
                for tok in tokens {
                    let idx = tok.split('/').next().unwrap_or("");
                    match resolve_obj_index(idx, vertices.len()) {
                        Some(i) => face.push(i),
                        None => {
                            r.error(here.clone(), format!("face references undefined vertex {tok:?}"));
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                if face.len() < 3 {
                    r.error(here, "face needs at least three vertices");
                    continue;
                }
                if (1..face.len()).any(|k| face[..k].contains(&face[k])) {
                    r.error(here, "face repeats a vertex");
                    continue;
                }
                let g = *current.get_or_insert_with(|| {
                    groups.push(("Object".to_owned(), Vec::new()));
                    groups.len() - 1
                });
                groups[g].1.push(face);
            }
            "o" | "g" => {
                let name = tokens.collect::<Vec<_>>().join(" ");
                let name = if name.is_empty() { "Object".to_owned() } else { name };
                current = Some(match groups.iter().position(|(n, _)| *n == name) {
                    Some(i) => i,
                    None => {
                        groups.push((name, Vec::new()));
                        groups.len() - 1
                    }
                });
            }
            other => {
                let entry = ignored.entry(other.to_owned()).or_insert((line_no, 0));
                entry.1 += 1;
            }
        }
    }
    for (kw, (first, count)) in ignored {
        r.warn(format!("line {first}"), format!("ignored {count} '{kw}' record(s)"));
    }

    let mut objects = Vec::new();
    for (name, faces) in groups.into_iter().filter(|(_, f)| !f.is_empty()) {
        let mut used: Vec<usize> = faces.iter().flatten().copied().collect();
        used.sort_unstable();
        used.dedup();
        let remap = |g: usize| used.binary_search(&g).expect("index collected above") as u32;
        let mesh = Mesh {
            vertices: used.iter().map(|&g| vertices[g]).collect(),
            faces: faces.iter().map(|f| f.iter().map(|&g| remap(g)).collect()).collect(),
        };
        objects.push(SceneObject::new(name, Transform::IDENTITY, mesh));
    }
    if objects.is_empty() && r.is_ok() {
        r.error("", "no geometry");
    }
    if !r.is_ok() {
        return Err(r);
    }
    let scene = Scene {
        objects,
        cameras: Vec::new(),
        units: String::new(),
        source: SceneSource::Obj,
    };
    r.merge(validate_scene(&scene));
    if r.is_ok() {
        Ok(Parsed {
            scene,
            warnings: r.warnings,
        })
    } else {
        Err(r)
    }
}

/// 1-based positive or negative (relative) OBJ index to a 0-based index.
fn resolve_obj_index(token: &str, defined: usize) -> Option<usize> {
    let i: i64 = token.parse().ok()?;
    let resolved = match i {
        0 => return None,
        i if i > 0 => i - 1,
        i => defined as i64 + i,
    };
    (0..defined as i64).contains(&resolved).then_some(resolved as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{corpus, shapes};

    const MINIMAL: &str = r#"{
        "sgf_version": 1,
        "units": "blender",
        "objects": [{
            "name": "Cube",
            "primitive": "cube",
            "transform": {"location": [0,0,0], "rotation_quaternion": [1,0,0,0], "scale": [1,1,1]},
            "mesh": {
                "vertices": [[-1,-1,-1],[1,-1,-1],[1,1,-1],[-1,1,-1],[-1,-1,1],[1,-1,1],[1,1,1],[-1,1,1]],
                "faces": [[0,3,2,1],[4,5,6,7],[0,1,5,4],[1,2,6,5],[2,3,7,6],[3,0,4,7]]
            },
            "modifiers": []
        }]
    }"#;

    #[test]
    fn minimal_document() {
        let p = parse_sgf(MINIMAL.as_bytes()).unwrap();
        assert_eq!(p.scene.objects.len(), 1);
        assert!(p.scene.cameras.is_empty());
        assert_eq!(p.scene.objects[0].declared_primitive, Some(PrimitiveType::Cube));
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn bad_face_index_reported_with_path() {
        let doc = MINIMAL.replace("[3,0,4,7]", "[3,0,4,99]");
        let r = parse_sgf(doc.as_bytes()).unwrap_err();
        assert_eq!(r.errors.len(), 1);
        assert_eq!(r.errors[0].path, "objects[0].mesh.faces[5]");
    }

    #[test]
    fn duplicate_object_name() {
        let mut v: Value = serde_json::from_str(MINIMAL).unwrap();
        let obj = v["objects"][0].clone();
        v["objects"].as_array_mut().unwrap().push(obj);
        let r = parse_sgf(v.to_string().as_bytes()).unwrap_err();
        assert!(r.errors.iter().any(|e| e.message.contains("duplicate object name")));
    }

    #[test]
    fn malformed_json_has_position() {
        let r = parse_sgf(b"{\"sgf_version\": 1,\n \"objects\": [}").unwrap_err();
        assert!(r.errors[0].path.starts_with("line 2"), "{:?}", r.errors);
    }

    #[test]
    fn missing_transform_and_non_unit_quaternion() {
        let mut v: Value = serde_json::from_str(MINIMAL).unwrap();
        v["objects"][0].as_object_mut().unwrap().remove("transform");
        let r = parse_sgf(v.to_string().as_bytes()).unwrap_err();
        assert_eq!(r.errors[0].message, "missing transform");

        let doc = MINIMAL.replace("[1,0,0,0]", "[1.01,0,0,0]");
        let r = parse_sgf(doc.as_bytes()).unwrap_err();
        assert_eq!(r.errors[0].path, "objects[0].transform.rotation_quaternion");

        // small drift is normalized
        let doc = MINIMAL.replace("[1,0,0,0]", "[1.0005,0,0,0]");
        let p = parse_sgf(doc.as_bytes()).unwrap();
        assert_eq!(p.scene.objects[0].transform.rotation, Quaternion::IDENTITY);
    }

    #[test]
    fn euler_rotation_and_unknown_fields() {
        let doc = MINIMAL
            .replace("\"rotation_quaternion\": [1,0,0,0]", "\"rotation_euler_xyz\": [0,0,1.5707963267948966]")
            .replace("\"units\": \"blender\",", "\"units\": \"blender\", \"author\": \"x\",");
        let p = parse_sgf(doc.as_bytes()).unwrap();
        let q = p.scene.objects[0].transform.rotation;
        assert!((q.w - q.z).abs() < 1e-12 && q.z > 0.7);
        assert_eq!(p.warnings.len(), 1);
        assert_eq!(p.warnings[0].path, "author");

        let both = MINIMAL.replace(
            "\"rotation_quaternion\": [1,0,0,0]",
            "\"rotation_quaternion\": [1,0,0,0], \"rotation_euler_xyz\": [0,0,0]",
        );
        assert!(parse_sgf(both.as_bytes()).is_err());
    }

    #[test]
    fn rejects_zero_scale() {
        let doc = MINIMAL.replace("\"scale\": [1,1,1]", "\"scale\": [1,0,1]");
        let r = parse_sgf(doc.as_bytes()).unwrap_err();
        assert_eq!(r.errors[0].path, "objects[0].transform.scale");
    }

    #[test]
    fn sgf_round_trip() {
        let scene = corpus::rubric_scene();
        let again = parse_sgf(to_sgf(&scene).as_bytes()).unwrap().scene;
        assert_eq!(scene, again);
    }

    #[test]
    fn obj_cube() {
        let obj = "# cube\nv -1 -1 -1\nv 1 -1 -1\nv 1 1 -1\nv -1 1 -1\nv -1 -1 1\nv 1 -1 1\nv 1 1 1\nv -1 1 1\n\
                   vn 0 0 1\nf 1 4 3 2\nf 5 6 7 8\nf 1 2 6 5\nf 2 3 7 6\nf 3 4 8 7\nf 4 1 5 8\n";
        let p = parse_obj(obj.as_bytes()).unwrap();
        assert_eq!(p.scene.objects.len(), 1);
        assert_eq!(p.scene.objects[0].mesh.vertices.len(), 8);
        assert_eq!(p.scene.objects[0].mesh.faces.len(), 6);
        assert_eq!(p.scene.source, SceneSource::Obj);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn obj_negative_indices() {
        let p = parse_obj(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf -1 -2 -3\n").unwrap();
        assert_eq!(p.scene.objects[0].mesh.faces[0], vec![2, 1, 0]);
    }

    #[test]
    fn obj_errors() {
        assert_eq!(parse_obj(b"").unwrap_err().errors[0].message, "no geometry");
        assert!(parse_obj(b"v 0 0 0\nv 1 0 0\nf 1 2 3\n").is_err());
        assert!(parse_obj(b"v 0 x 0\n").is_err());
        assert!(parse_obj(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2//2 3/3\n").is_ok());
    }

    #[test]
    fn obj_groups_split_objects() {
        let scene = Scene::new(
            vec![
                SceneObject::new("A", Transform::IDENTITY, shapes::cube(1.0)),
                SceneObject::new("B", Transform::from_location(Vec3::new(3.0, 0.0, 0.0)), shapes::cone(1.0, 1.0, 6)),
            ],
            vec![],
        )
        .unwrap();
        let p = parse_obj(to_obj(&scene).as_bytes()).unwrap();
        assert_eq!(p.scene.objects.len(), 2);
        assert_eq!(p.scene.objects[1].name, "B");
        assert_eq!(p.scene.objects[1].mesh.vertices.len(), 7);
        assert_eq!(p.scene.objects[1].mesh.vertices[6], Vec3::new(3.0, 0.0, 0.5));
    }

    #[test]
    fn validate_examples() {
        let mut scene = corpus::rubric_scene();
        assert!(validate_scene(&scene).is_empty());

        scene.objects[0].mesh.faces.clear();
        let r = validate_scene(&scene);
        assert_eq!(r.errors[0].message, "empty mesh");

        // collinear triple: cross product of (1,1,1) and (2,2,2) is exactly zero
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(1.0, 1.0, 1.0);
        let c = Vec3::new(2.0, 2.0, 2.0);
        assert!((b - a).cross(c - a).norm() / 2.0 < 1e-12);
        let mesh = Mesh::new(vec![a, b, c], vec![vec![0, 1, 2]]).unwrap();
        let s = Scene::new(vec![SceneObject::new("T", Transform::IDENTITY, mesh)], vec![]).unwrap();
        let r = validate_scene(&s);
        assert!(r.is_ok());
        assert_eq!(r.warnings[0].message, "degenerate face");
    }

    #[test]
    fn validate_reports_camera_errors() {
        let mut scene = corpus::rubric_scene();
        scene.cameras[0].clip_near = 0.0;
        assert!(!validate_scene(&scene).is_ok());
    }
}
