//! Object matching, per-check sub-scores and deduction-from-maximum
//! aggregation.
//!
//! Poses are compared in a camera-relative frame when both the submission
//! and the rubric have a camera (otherwise in world space), so moving a
//! whole scene together with its camera changes nothing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assignment::min_cost_assignment;
use crate::feedback::FeedbackItem;
use crate::geometry::{frustum_hits, infer_primitive_with, rotation_distance, PrimitiveGuess};
use crate::rubric::{ConfigError, Rubric};
use crate::scene::{PrimitiveType, Scene, SceneObject, Transform, Vec3};

pub const ENGINE_VERSION: &str = concat!("meshgrade ", env!("CARGO_PKG_VERSION"));

/// Surface samples per object for the camera check.
pub const CAMERA_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CheckId {
    Location,
    Rotation,
    Scale,
    PolygonRatio,
    PrimitiveType,
    MissingObject,
    ExtraObject,
    Camera,
    Modifier,
}

impl CheckId {
    pub const ALL: [CheckId; 9] = [
        CheckId::Location,
        CheckId::Rotation,
        CheckId::Scale,
        CheckId::PolygonRatio,
        CheckId::PrimitiveType,
        CheckId::MissingObject,
        CheckId::ExtraObject,
        CheckId::Camera,
        CheckId::Modifier,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::Location => "Location",
            CheckId::Rotation => "Rotation",
            CheckId::Scale => "Scale",
            CheckId::PolygonRatio => "PolygonRatio",
            CheckId::PrimitiveType => "PrimitiveType",
            CheckId::MissingObject => "MissingObject",
            CheckId::ExtraObject => "ExtraObject",
            CheckId::Camera => "Camera",
            CheckId::Modifier => "Modifier",
        }
    }

    pub fn parse(s: &str) -> Option<CheckId> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl std::fmt::Display for CheckId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubScore {
    pub check_id: CheckId,
    pub object_name: Option<String>,
    pub deduction: f64,
    /// Weight of this check; `deduction <= weight` always.
    pub weight: f64,
    /// Raw metric (distance ratio, angle, factor, coverage, ...).
    pub measured: f64,
    /// Full-credit bound the metric was compared against.
    pub threshold: f64,
    pub assessable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<String>,
}

impl SubScore {
    fn new(check_id: CheckId, object: Option<&str>, weight: f64) -> Self {
        Self {
            check_id,
            object_name: object.map(str::to_owned),
            deduction: 0.0,
            weight,
            measured: 0.0,
            threshold: 0.0,
            assessable: true,
            observed: None,
            expected: None,
            evidence: None,
        }
    }

    fn not_assessable(check_id: CheckId, object: Option<&str>, weight: f64, why: &str) -> Self {
        Self {
            assessable: false,
            evidence: Some(why.to_owned()),
            ..Self::new(check_id, object, weight)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub submission: String,
    pub rubric: String,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<MatchPair>,
    pub unmatched_submission: Vec<String>,
    pub unmatched_rubric: Vec<String>,
}

impl Matching {
    pub fn total_cost(&self) -> f64 {
        self.pairs.iter().map(|p| p.cost).sum()
    }

    pub fn rubric_for(&self, submission: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|p| p.submission == submission)
            .map(|p| p.rubric.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeReport {
    pub score: f64,
    pub subscores: Vec<SubScore>,
    pub matching: Matching,
    pub primitive_guesses: BTreeMap<String, PrimitiveGuess>,
    pub rubric_id: String,
    pub submission_id: String,
    pub engine_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<Vec<FeedbackItem>>,
}

impl GradeReport {
    pub fn total_deduction(&self) -> f64 {
        self.subscores.iter().map(|s| s.deduction).sum()
    }

    /// Summed deduction per check.
    pub fn deductions_by_check(&self) -> BTreeMap<CheckId, f64> {
        let mut out: BTreeMap<CheckId, f64> = CheckId::ALL.iter().map(|&c| (c, 0.0)).collect();
        for s in &self.subscores {
            *out.entry(s.check_id).or_default() += s.deduction;
        }
        out
    }

    /// Canonical JSON document (pretty-printed, newline-terminated) shared
    /// by the CLI and the service.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports always serialize");
        text.push('\n');
        text
    }
}

/// Linear ramp: 0 at or below `full`, `weight` at or above `zero`.
pub fn ramp(metric: f64, full: f64, zero: f64, weight: f64) -> f64 {
    if metric <= full {
        0.0
    } else if metric >= zero {
        weight
    } else {
        weight * (metric - full) / (zero - full)
    }
}

/// Everything the checks need to know about one object.
#[derive(Debug, Clone)]
struct ObjectView<'a> {
    object: &'a SceneObject,
    kind: PrimitiveType,
    guess: PrimitiveGuess,
    /// Vertex centroid, in the scene's comparison frame.
    centroid: Vec3,
    /// Transform, in the scene's comparison frame.
    pose: Transform,
}

fn comparison_frames(submission: &Scene, rubric: &Rubric) -> (Transform, Transform) {
    match (submission.primary_camera(), rubric.scene.primary_camera()) {
        (Some(s), Some(r)) if submission.source.has_pose() => (s.transform, r.transform),
        _ => (Transform::IDENTITY, Transform::IDENTITY),
    }
}

fn views<'a>(scene: &'a Scene, frame: &Transform, rubric: &Rubric) -> Vec<ObjectView<'a>> {
    let mut out: Vec<ObjectView<'a>> = scene
        .objects
        .iter()
        .map(|object| {
            let guess = infer_primitive_with(&object.mesh, &rubric.classifier);
            let kind = match object.declared_primitive {
                Some(p) if rubric.use_declared_primitive && p != PrimitiveType::Unknown => p,
                _ => guess.primitive,
            };
            let world_centroid = object.transform.apply(object.mesh.vertex_centroid());
            ObjectView {
                object,
                kind,
                guess,
                centroid: Transform::from_location(world_centroid).relative_to(frame).location,
                pose: object.transform.relative_to(frame),
            }
        })
        .collect();
    out.sort_by(|a, b| a.object.name.cmp(&b.object.name));
    out
}

fn pair_cost(sub: &ObjectView<'_>, reference: &ObjectView<'_>, radius: f64, rubric: &Rubric) -> f64 {
    let mismatch = if sub.kind == reference.kind { 0.0 } else { 1.0 };
    let distance = ((sub.centroid - reference.centroid).norm() / radius).min(rubric.tolerances.match_position_cap);
    let faces = |v: &ObjectView<'_>| v.object.mesh.faces.len().max(1) as f64;
    let ratio = (faces(sub) / faces(reference)).ln().abs();
    mismatch + distance + 0.25 * ratio
}

/// Cost matrix used by [`match_objects`]: rows are submission objects and
/// columns rubric objects, both in name order.
pub fn pair_costs(submission: &Scene, rubric: &Rubric) -> (Vec<String>, Vec<String>, Vec<Vec<f64>>) {
    let (sf, rf) = comparison_frames(submission, rubric);
    let subs = views(submission, &sf, rubric);
    let refs = views(&rubric.scene, &rf, rubric);
    let radius = rubric.bounding_radius();
    let costs = subs
        .iter()
        .map(|s| refs.iter().map(|r| pair_cost(s, r, radius, rubric)).collect())
        .collect();
    (
        subs.iter().map(|v| v.object.name.clone()).collect(),
        refs.iter().map(|v| v.object.name.clone()).collect(),
        costs,
    )
}

fn match_views(subs: &[ObjectView<'_>], refs: &[ObjectView<'_>], radius: f64, rubric: &Rubric) -> Matching {
    let costs: Vec<Vec<f64>> = subs
        .iter()
        .map(|s| refs.iter().map(|r| pair_cost(s, r, radius, rubric)).collect())
        .collect();
    let assigned = min_cost_assignment(&costs);
    let mut matching = Matching::default();
    let mut rubric_used = vec![false; refs.len()];
    for (i, col) in assigned.iter().enumerate() {
        match col {
            Some(j) if costs[i][*j] <= rubric.tolerances.match_cost_cutoff => {
                rubric_used[*j] = true;
                matching.pairs.push(MatchPair {
                    submission: subs[i].object.name.clone(),
                    rubric: refs[*j].object.name.clone(),
                    cost: costs[i][*j],
                });
            }
            _ => matching.unmatched_submission.push(subs[i].object.name.clone()),
        }
    }
    matching.unmatched_rubric = refs
        .iter()
        .zip(&rubric_used)
        .filter(|(_, used)| !**used)
        .map(|(r, _)| r.object.name.clone())
        .collect();
    matching
}

/// Minimum-total-cost one-to-one assignment between submission and rubric
/// objects. Pairs costlier than the cutoff are split into unmatched entries.
pub fn match_objects(submission: &Scene, rubric: &Rubric) -> Matching {
    let (sf, rf) = comparison_frames(submission, rubric);
    let subs = views(submission, &sf, rubric);
    let refs = views(&rubric.scene, &rf, rubric);
    match_views(&subs, &refs, rubric.bounding_radius(), rubric)
}

/// Location and rotation sub-scores for poses already expressed in a common
/// frame. `radius` normalizes the location error.
pub fn score_pose(sub: &Transform, reference: &Transform, radius: f64, rubric: &Rubric, object: &str) -> [SubScore; 2] {
    let (w, t) = (&rubric.weights, &rubric.tolerances);
    let mut loc = SubScore::new(CheckId::Location, Some(object), w.w_location);
    loc.measured = (sub.location - reference.location).norm() / radius;
    loc.threshold = t.loc_full_credit;
    loc.deduction = ramp(loc.measured, t.loc_full_credit, t.loc_zero_credit, w.w_location);

    let mut rot = SubScore::new(CheckId::Rotation, Some(object), w.w_rotation);
    rot.measured = rotation_distance(sub.rotation, reference.rotation);
    rot.threshold = t.rot_full_credit;
    rot.deduction = ramp(rot.measured, t.rot_full_credit, t.rot_zero_credit, w.w_rotation);
    [loc, rot]
}

pub fn score_scale(sub: Vec3, reference: Vec3, rubric: &Rubric, object: &str) -> SubScore {
    let (w, t) = (&rubric.weights, &rubric.tolerances);
    let axis = |s: f64, r: f64| (s / r).max(r / s);
    let factor = axis(sub.x, reference.x)
        .max(axis(sub.y, reference.y))
        .max(axis(sub.z, reference.z));
    let mut s = SubScore::new(CheckId::Scale, Some(object), w.w_scale);
    s.measured = factor;
    s.threshold = t.scale_full_credit_factor;
    s.deduction = ramp(factor, t.scale_full_credit_factor, t.scale_zero_credit_factor, w.w_scale);
    s
}

/// Binary polygon-count check: full weight when the ratio falls strictly
/// outside the inclusive band.
pub fn score_polygon_ratio(
    submission_faces: usize,
    rubric_faces: usize,
    rubric: &Rubric,
    object: &str,
) -> Result<SubScore, ConfigError> {
    if rubric_faces == 0 {
        return Err(ConfigError::ZeroPolygonRubric(object.to_owned()));
    }
    let [low, high] = rubric.tolerances.polygon_band;
    let ratio = submission_faces as f64 / rubric_faces as f64;
    let mut s = SubScore::new(CheckId::PolygonRatio, Some(object), rubric.weights.w_polygon);
    s.measured = ratio;
    s.threshold = low;
    s.observed = Some(format!("{submission_faces} of {rubric_faces} polygons"));
    s.expected = Some(format!("[{low:.2}, {high:.2}]"));
    if !(low..=high).contains(&ratio) {
        s.deduction = rubric.weights.w_polygon;
    }
    Ok(s)
}

/// Object count and type checks: wrong primitive and unneeded modifiers per
/// matched pair, missing rubric objects, and extra submission objects
/// (capped in total).
pub fn score_inventory(matching: &Matching, submission: &Scene, rubric: &Rubric) -> Vec<SubScore> {
    let (sf, rf) = comparison_frames(submission, rubric);
    let subs = views(submission, &sf, rubric);
    let refs = views(&rubric.scene, &rf, rubric);
    inventory(matching, &subs, &refs, rubric)
}

fn find<'v, 'a>(views: &'v [ObjectView<'a>], name: &str) -> &'v ObjectView<'a> {
    views
        .iter()
        .find(|v| v.object.name == name)
        .expect("matching refers to known objects")
}

fn inventory(matching: &Matching, subs: &[ObjectView<'_>], refs: &[ObjectView<'_>], rubric: &Rubric) -> Vec<SubScore> {
    let w = &rubric.weights;
    let mut out = Vec::new();
    for pair in &matching.pairs {
        let (s, r) = (find(subs, &pair.submission), find(refs, &pair.rubric));
        out.push(primitive_subscore(s, r, rubric));
        out.push(modifier_subscore(s, r, rubric));
    }
    for name in &matching.unmatched_rubric {
        let mut m = SubScore::new(CheckId::MissingObject, Some(name), w.w_missing_object);
        m.deduction = w.w_missing_object;
        m.measured = 1.0;
        m.expected = Some(find(refs, name).kind.label().to_owned());
        out.push(m);
    }
    let mut charged = 0.0;
    for name in &matching.unmatched_submission {
        let mut e = SubScore::new(CheckId::ExtraObject, Some(name), w.w_extra_object);
        e.deduction = w.w_extra_object.min((w.w_extra_object_cap - charged).max(0.0));
        charged += e.deduction;
        e.measured = 1.0;
        e.threshold = w.w_extra_object_cap;
        e.observed = Some(find(subs, name).kind.label().to_owned());
        out.push(e);
    }
    out
}

fn primitive_subscore(s: &ObjectView<'_>, r: &ObjectView<'_>, rubric: &Rubric) -> SubScore {
    let w = rubric.weights.w_primitive_type;
    let name = s.object.name.as_str();
    if r.kind == PrimitiveType::Unknown {
        return SubScore::not_assessable(
            CheckId::PrimitiveType,
            Some(name),
            w,
            "rubric object does not match a known primitive",
        );
    }
    let mut p = SubScore::new(CheckId::PrimitiveType, Some(name), w);
    p.observed = Some(s.kind.label().to_owned());
    p.expected = Some(r.kind.label().to_owned());
    if s.kind != r.kind {
        p.measured = 1.0;
        p.deduction = w;
        p.evidence = s.guess.evidence.last().cloned();
    }
    p
}

fn modifier_subscore(s: &ObjectView<'_>, r: &ObjectView<'_>, rubric: &Rubric) -> SubScore {
    let w = rubric.weights.w_modifier;
    let mut m = SubScore::new(CheckId::Modifier, Some(&s.object.name), w);
    m.measured = s.object.modifiers.len() as f64;
    if !s.object.modifiers.is_empty() {
        m.observed = Some(s.object.modifiers.join(", "));
    }
    if !s.object.modifiers.is_empty() && r.object.modifiers.is_empty() {
        m.deduction = w;
    }
    m
}

/// Allowance below the rubric's own coverage before a framing deduction.
/// Sample placement is area-weighted, so float noise in the geometry can move
/// a sample or two across a frustum plane.
pub const REFERENCE_COVERAGE_SLACK: f64 = 0.01;

/// Deduction for a coverage shortfall, rounded to two decimals.
pub fn camera_deduction(coverage: f64, full_credit: f64, weight: f64) -> f64 {
    if full_credit <= 0.0 || coverage >= full_credit {
        return 0.0;
    }
    let raw = weight * (full_credit - coverage) / full_credit;
    ((raw * 100.0).round() / 100.0).min(weight)
}

/// Framing check: fraction of the matched objects' surface samples visible
/// from the submission's first camera (name order).
///
/// The full-credit bound is the configured coverage or the rubric's own
/// coverage less [`REFERENCE_COVERAGE_SLACK`], whichever is lower.
pub fn score_camera(matching: &Matching, submission: &Scene, rubric: &Rubric) -> SubScore {
    let w = rubric.weights.w_camera;
    let Some(rubric_cam) = rubric.scene.primary_camera() else {
        return SubScore::not_assessable(CheckId::Camera, None, w, "rubric defines no camera");
    };
    if !submission.source.has_pose() {
        return SubScore::not_assessable(CheckId::Camera, None, w, "submission format carries no camera");
    }
    let Some(cam) = submission.primary_camera() else {
        let mut s = SubScore::new(CheckId::Camera, None, w);
        s.deduction = w;
        s.evidence = Some("no camera".into());
        return s;
    };
    let mut names: Vec<&str> = matching.pairs.iter().map(|p| p.submission.as_str()).collect();
    if names.is_empty() {
        return SubScore::not_assessable(CheckId::Camera, Some(&cam.name), w, "no matched objects to frame");
    }
    names.sort_unstable();
    let coverage_of = |cam, objects: &mut dyn Iterator<Item = &SceneObject>| {
        let (mut inside, mut total) = (0usize, 0usize);
        for o in objects {
            if let Ok((i, t)) = frustum_hits(&o.mesh, &o.transform, cam, CAMERA_SAMPLES) {
                inside += i;
                total += t;
            }
        }
        if total == 0 {
            0.0
        } else {
            inside as f64 / total as f64
        }
    };
    let coverage = coverage_of(cam, &mut names.iter().filter_map(|n| submission.object(n)));
    let mut rubric_objects: Vec<&SceneObject> = rubric.scene.objects.iter().collect();
    rubric_objects.sort_by(|a, b| a.name.cmp(&b.name));
    let reference = coverage_of(rubric_cam, &mut rubric_objects.into_iter());
    let bound = rubric
        .tolerances
        .camera_full_credit_coverage
        .min(reference - REFERENCE_COVERAGE_SLACK);

    let mut s = SubScore::new(CheckId::Camera, Some(&cam.name), w);
    s.measured = coverage;
    s.threshold = bound;
    s.deduction = camera_deduction(coverage, bound, w);
    s
}

/// Grades a submission against a rubric. Pure and deterministic.
pub fn grade(submission_id: &str, submission: &Scene, rubric: &Rubric) -> Result<GradeReport, ConfigError> {
    let radius = rubric.bounding_radius();
    if radius <= 0.0 {
        return Err(ConfigError::DegenerateRubric);
    }
    let (sf, rf) = comparison_frames(submission, rubric);
    let subs = views(submission, &sf, rubric);
    let refs = views(&rubric.scene, &rf, rubric);
    let matching = match_views(&subs, &refs, radius, rubric);

    let mut subscores = Vec::new();
    let mut pairs: Vec<&MatchPair> = matching.pairs.iter().collect();
    pairs.sort_by(|a, b| a.rubric.cmp(&b.rubric));
    let w = &rubric.weights;
    for pair in pairs {
        let (s, r) = (find(&subs, &pair.submission), find(&refs, &pair.rubric));
        let name = pair.submission.as_str();
        if submission.source.has_pose() {
            subscores.extend(score_pose(&s.pose, &r.pose, radius, rubric, name));
            subscores.push(score_scale(s.pose.scale, r.pose.scale, rubric, name));
        } else {
            let why = "submission format carries no transforms";
            subscores.push(SubScore::not_assessable(CheckId::Location, Some(name), w.w_location, why));
            subscores.push(SubScore::not_assessable(CheckId::Rotation, Some(name), w.w_rotation, why));
            subscores.push(SubScore::not_assessable(CheckId::Scale, Some(name), w.w_scale, why));
        }
        subscores.push(score_polygon_ratio(
            s.object.mesh.faces.len(),
            r.object.mesh.faces.len(),
            rubric,
            name,
        )?);
        subscores.push(primitive_subscore(s, r, rubric));
        subscores.push(modifier_subscore(s, r, rubric));
    }
    let unmatched_only = Matching {
        pairs: Vec::new(),
        ..matching.clone()
    };
    subscores.extend(inventory(&unmatched_only, &subs, &refs, rubric));
    subscores.push(score_camera(&matching, submission, rubric));

    let total: f64 = subscores.iter().map(|s| s.deduction).sum();
    let score = (w.max_score - total).clamp(0.0, w.max_score);
    let primitive_guesses = subs
        .iter()
        .map(|v| (v.object.name.clone(), v.guess.clone()))
        .collect();
    Ok(GradeReport {
        score,
        subscores,
        matching,
        primitive_guesses,
        rubric_id: rubric.id.clone(),
        submission_id: submission_id.to_owned(),
        engine_version: ENGINE_VERSION.to_owned(),
        feedback: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{corpus, shapes};
    use crate::scene::Quaternion;
    use std::f64::consts::PI;

    fn crown_rubric() -> Rubric {
        Rubric::from_scene("crown", corpus::rubric_scene()).unwrap()
    }

    fn deduction(report: &GradeReport, check: CheckId) -> f64 {
        report.subscores.iter().filter(|s| s.check_id == check).map(|s| s.deduction).sum()
    }

    #[test]
    fn ramp_shape() {
        assert_eq!(ramp(0.05, 0.1, 0.5, 10.0), 0.0);
        assert_eq!(ramp(0.1, 0.1, 0.5, 10.0), 0.0);
        assert!((ramp(0.3, 0.1, 0.5, 10.0) - 5.0).abs() < 1e-12);
        assert_eq!(ramp(0.5, 0.1, 0.5, 10.0), 10.0);
        assert_eq!(ramp(9.0, 0.1, 0.5, 10.0), 10.0);
    }

    #[test]
    fn pose_examples() {
        let rubric = crown_rubric();
        let t = Transform::IDENTITY;
        let [l, r] = score_pose(&t, &t, 2.0, &rubric, "Crown");
        assert_eq!((l.deduction, r.deduction), (0.0, 0.0));

        // offset of exactly half the radius sits on the zero-credit bound
        let radius = 2.0;
        let moved = Transform::from_location(Vec3::new(0.5 * radius, 0.0, 0.0));
        let [l, _] = score_pose(&moved, &t, radius, &rubric, "Crown");
        assert_eq!(l.measured, 0.5);
        assert_eq!(l.deduction, 10.0);

        // 37.5 degrees is the midpoint of the 15..60 degree ramp
        let turned = Transform {
            rotation: Quaternion::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), 37.5 * PI / 180.0).unwrap(),
            ..t
        };
        let [_, r] = score_pose(&turned, &t, radius, &rubric, "Crown");
        assert!((r.deduction - 2.5).abs() < 1e-9, "{}", r.deduction);
    }

    #[test]
    fn scale_examples() {
        let rubric = crown_rubric();
        assert_eq!(score_scale(Vec3::ONE, Vec3::ONE, &rubric, "o").deduction, 0.0);
        assert_eq!(score_scale(Vec3::new(1.0, 3.0, 1.0), Vec3::ONE, &rubric, "o").deduction, 10.0);
        assert_eq!(score_scale(Vec3::ONE * 1.25, Vec3::ONE, &rubric, "o").deduction, 0.0);
        // shrinking counts the same as growing
        assert_eq!(score_scale(Vec3::ONE * 0.4, Vec3::ONE, &rubric, "o").deduction, 10.0);
    }

    #[test]
    fn polygon_examples() {
        let rubric = crown_rubric();
        assert_eq!(score_polygon_ratio(576, 576, &rubric, "o").unwrap().deduction, 0.0);
        let half = score_polygon_ratio(288, 576, &rubric, "o").unwrap();
        assert_eq!((half.measured, half.deduction), (0.5, 15.0));
        assert_eq!(score_polygon_ratio(70, 100, &rubric, "o").unwrap().deduction, 0.0);
        assert!(matches!(
            score_polygon_ratio(5, 0, &rubric, "o"),
            Err(ConfigError::ZeroPolygonRubric(_))
        ));
    }

    #[test]
    fn camera_formula() {
        assert_eq!(camera_deduction(1.0, 0.95, 15.0), 0.0);
        assert_eq!(camera_deduction(0.0, 0.95, 15.0), 15.0);
        assert_eq!(camera_deduction(0.475, 0.95, 15.0), 7.5);
    }

    #[test]
    fn single_pair_matching() {
        let rubric = crown_rubric();
        let m = match_objects(&corpus::clean(), &rubric);
        assert_eq!(m.pairs.len(), 1);
        assert!(m.unmatched_rubric.is_empty() && m.unmatched_submission.is_empty());
    }

    #[test]
    fn empty_submission_misses_everything() {
        let rubric = crown_rubric();
        let empty = Scene::new(vec![], vec![corpus::reference_camera()]).unwrap();
        let m = match_objects(&empty, &rubric);
        assert_eq!(m.unmatched_rubric, vec!["Crown".to_owned()]);
        let inv = score_inventory(&m, &empty, &rubric);
        assert_eq!(inv.len(), 1);
        assert_eq!((inv[0].check_id, inv[0].deduction), (CheckId::MissingObject, 30.0));
    }

    #[test]
    fn extra_objects_capped() {
        let rubric = crown_rubric();
        let mut scene = corpus::clean();
        for k in 0..4 {
            scene.objects.push(SceneObject::new(
                format!("Gem{k}"),
                Transform::from_location(Vec3::new(0.0, 0.0, 0.4 + 0.1 * k as f64)),
                shapes::uv_sphere(0.05, 8, 4),
            ));
        }
        let report = grade("s", &scene, &rubric).unwrap();
        assert_eq!(report.matching.unmatched_submission.len(), 4);
        assert_eq!(deduction(&report, CheckId::ExtraObject), 15.0);
        assert!(report
            .subscores
            .iter()
            .filter(|s| s.check_id == CheckId::ExtraObject)
            .all(|s| s.deduction <= s.weight));
    }

    #[test]
    fn crown_from_cube_scores_70() {
        let report = grade("s", &corpus::crown_from_cube(), &crown_rubric()).unwrap();
        assert_eq!(deduction(&report, CheckId::PrimitiveType), 30.0);
        assert_eq!(report.score, 70.0, "{:#?}", report.subscores);
    }

    #[test]
    fn self_grade_is_max() {
        let rubric = crown_rubric();
        let report = grade("s", &rubric.scene, &rubric).unwrap();
        assert_eq!(report.score, 100.0);
        assert!(report.subscores.iter().all(|s| s.deduction == 0.0));
    }

    #[test]
    fn everything_wrong_clamps_to_zero() {
        let report = grade("s", &corpus::everything_wrong(), &crown_rubric()).unwrap();
        assert!(report.total_deduction() > 100.0, "{:#?}", report.subscores);
        assert_eq!(report.score, 0.0);
    }

    #[test]
    fn obj_submission_marks_pose_not_assessable() {
        let rubric = crown_rubric();
        let obj = crate::ingest::to_obj(&corpus::clean());
        let scene = crate::ingest::parse_obj(obj.as_bytes()).unwrap().scene;
        let report = grade("s", &scene, &rubric).unwrap();
        for check in [CheckId::Location, CheckId::Rotation, CheckId::Scale, CheckId::Camera] {
            let s = report.subscores.iter().find(|s| s.check_id == check).unwrap();
            assert!(!s.assessable);
            assert_eq!(s.deduction, 0.0);
        }
        assert_eq!(report.score, 100.0);
    }

    #[test]
    fn missing_camera_takes_full_deduction() {
        let mut scene = corpus::clean();
        scene.cameras.clear();
        let report = grade("s", &scene, &crown_rubric()).unwrap();
        let cam = report.subscores.iter().find(|s| s.check_id == CheckId::Camera).unwrap();
        assert_eq!(cam.deduction, 15.0);
        assert_eq!(cam.evidence.as_deref(), Some("no camera"));
    }

    #[test]
    fn declared_primitive_policy() {
        let mut rubric = crown_rubric();
        let mut scene = corpus::crown_from_cube();
        // the learner claims a torus; only the declared-type policy believes it
        scene.objects[0].declared_primitive = Some(PrimitiveType::Torus);
        assert_eq!(grade("s", &scene, &rubric).unwrap().score, 70.0);
        rubric.use_declared_primitive = true;
        assert_eq!(grade("s", &scene, &rubric).unwrap().score, 100.0);
    }
}
