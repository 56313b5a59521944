//! The grading contract: reference scene, weight table and tolerances.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::geometry::{world_aabb, Aabb, ClassifierConfig};
use crate::ingest::{self, ValidationReport};
use crate::scene::Scene;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid weight {name}: {value} (weights must be finite and >= 0)")]
    InvalidWeight { name: &'static str, value: f64 },
    #[error("invalid weight max_score: {0} (must be > 0)")]
    InvalidMaxScore(f64),
    #[error(
        "invalid weight order: w_rotation ({rotation}) must be lower than w_location ({location}); \
         set allow_weight_order_override to accept"
    )]
    WeightOrder { rotation: f64, location: f64 },
    #[error("invalid tolerance {name}: {reason}")]
    InvalidTolerance { name: &'static str, reason: String },
    #[error("rubric scene has no objects")]
    EmptyRubricScene,
    #[error("rubric scene is invalid:\n{0}")]
    RubricScene(ValidationReport),
    #[error("rubric object {0:?} has no polygons")]
    ZeroPolygonRubric(String),
    #[error("rubric geometry has zero extent")]
    DegenerateRubric,
    #[error("malformed rubric document: {0}")]
    Malformed(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Points deducted per failed check. Defaults encode the relative
/// orderings: rotation below location, wrong primitive among the heaviest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightTable {
    pub max_score: f64,
    pub w_location: f64,
    pub w_rotation: f64,
    pub w_scale: f64,
    pub w_polygon: f64,
    pub w_primitive_type: f64,
    pub w_missing_object: f64,
    /// Per extra object; the total is capped by `w_extra_object_cap`.
    pub w_extra_object: f64,
    pub w_extra_object_cap: f64,
    pub w_camera: f64,
    pub w_modifier: f64,
}

impl Default for WeightTable {
    fn default() -> Self {
        Self {
            max_score: 100.0,
            w_location: 10.0,
            w_rotation: 5.0,
            w_scale: 10.0,
            w_polygon: 15.0,
            w_primitive_type: 30.0,
            w_missing_object: 30.0,
            w_extra_object: 5.0,
            w_extra_object_cap: 15.0,
            w_camera: 15.0,
            w_modifier: 5.0,
        }
    }
}

impl WeightTable {
    fn entries(&self) -> [(&'static str, f64); 10] {
        [
            ("w_location", self.w_location),
            ("w_rotation", self.w_rotation),
            ("w_scale", self.w_scale),
            ("w_polygon", self.w_polygon),
            ("w_primitive_type", self.w_primitive_type),
            ("w_missing_object", self.w_missing_object),
            ("w_extra_object", self.w_extra_object),
            ("w_extra_object_cap", self.w_extra_object_cap),
            ("w_camera", self.w_camera),
            ("w_modifier", self.w_modifier),
        ]
    }

    /// Checks the table. With `allow_order_override`, a rotation weight not
    /// below the location weight is returned as a warning instead of an error.
    pub fn validate(&self, allow_order_override: bool) -> Result<Vec<String>, ConfigError> {
        if !(self.max_score.is_finite() && self.max_score > 0.0) {
            return Err(ConfigError::InvalidMaxScore(self.max_score));
        }
        for (name, value) in self.entries() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ConfigError::InvalidWeight { name, value });
            }
        }
        let mut warnings = Vec::new();
        if self.w_rotation >= self.w_location {
            let err = ConfigError::WeightOrder {
                rotation: self.w_rotation,
                location: self.w_location,
            };
            if !allow_order_override {
                return Err(err);
            }
            warnings.push(err.to_string());
        }
        Ok(warnings)
    }
}

/// Full-credit and zero-credit bounds for each continuous check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceTable {
    /// Location error as a fraction of the rubric scene's bounding radius.
    pub loc_full_credit: f64,
    pub loc_zero_credit: f64,
    /// Radians.
    pub rot_full_credit: f64,
    pub rot_zero_credit: f64,
    pub scale_full_credit_factor: f64,
    pub scale_zero_credit_factor: f64,
    /// Inclusive band for submission/rubric polygon count ratio.
    pub polygon_band: [f64; 2],
    pub camera_full_credit_coverage: f64,
    pub match_cost_cutoff: f64,
    /// Upper bound on the position term of the matching cost.
    pub match_position_cap: f64,
}

impl Default for ToleranceTable {
    fn default() -> Self {
        Self {
            loc_full_credit: 0.10,
            loc_zero_credit: 0.50,
            rot_full_credit: PI / 12.0,
            rot_zero_credit: PI / 3.0,
            scale_full_credit_factor: 1.25,
            scale_zero_credit_factor: 2.0,
            polygon_band: [0.7, 1.3],
            camera_full_credit_coverage: 0.95,
            match_cost_cutoff: 4.0,
            match_position_cap: 2.0,
        }
    }
}

impl ToleranceTable {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let pair = |name: &'static str, full: f64, zero: f64, lower: f64| {
            if full.is_finite() && zero.is_finite() && lower <= full && full < zero {
                Ok(())
            } else {
                Err(ConfigError::InvalidTolerance {
                    name,
                    reason: format!("need {lower} <= full credit ({full}) < zero credit ({zero})"),
                })
            }
        };
        pair("loc", self.loc_full_credit, self.loc_zero_credit, 0.0)?;
        pair("rot", self.rot_full_credit, self.rot_zero_credit, 0.0)?;
        pair(
            "scale",
            self.scale_full_credit_factor,
            self.scale_zero_credit_factor,
            1.0,
        )?;
        let [low, high] = self.polygon_band;
        if !(low > 0.0 && low < 1.0 && high > 1.0 && high.is_finite()) {
            return Err(ConfigError::InvalidTolerance {
                name: "polygon_band",
                reason: format!("need 0 < low < 1 < high, got [{low}, {high}]"),
            });
        }
        let cov = self.camera_full_credit_coverage;
        if !(cov > 0.0 && cov <= 1.0) {
            return Err(ConfigError::InvalidTolerance {
                name: "camera_full_credit_coverage",
                reason: format!("must lie in (0, 1], got {cov}"),
            });
        }
        if !(self.match_cost_cutoff > 0.0) {
            return Err(ConfigError::InvalidTolerance {
                name: "match_cost_cutoff",
                reason: format!("must be positive, got {}", self.match_cost_cutoff),
            });
        }
        if !(self.match_position_cap > 0.0) {
            return Err(ConfigError::InvalidTolerance {
                name: "match_position_cap",
                reason: format!("must be positive, got {}", self.match_position_cap),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rubric {
    pub id: String,
    pub scene: Scene,
    pub weights: WeightTable,
    pub tolerances: ToleranceTable,
    /// Compare exporter-declared primitive types instead of inferred ones
    /// where both sides declare one.
    pub use_declared_primitive: bool,
    pub allow_weight_order_override: bool,
    pub classifier: ClassifierConfig,
    /// Non-fatal configuration findings.
    pub warnings: Vec<String>,
}

impl Rubric {
    pub fn new(
        id: impl Into<String>,
        scene: Scene,
        weights: WeightTable,
        tolerances: ToleranceTable,
    ) -> Result<Self, ConfigError> {
        let mut r = Self {
            id: id.into(),
            scene,
            weights,
            tolerances,
            use_declared_primitive: false,
            allow_weight_order_override: false,
            classifier: ClassifierConfig::default(),
            warnings: Vec::new(),
        };
        r.validate()?;
        Ok(r)
    }

    /// A rubric with default weights and tolerances.
    pub fn from_scene(id: impl Into<String>, scene: Scene) -> Result<Self, ConfigError> {
        Self::new(id, scene, WeightTable::default(), ToleranceTable::default())
    }

    /// Re-checks every invariant; refreshes `warnings`.
    pub fn validate(&mut self) -> Result<(), ConfigError> {
        self.warnings = self.weights.validate(self.allow_weight_order_override)?;
        self.tolerances.validate()?;
        if self.scene.objects.is_empty() {
            return Err(ConfigError::EmptyRubricScene);
        }
        let report = ingest::validate_scene(&self.scene);
        if !report.is_ok() {
            return Err(ConfigError::RubricScene(report));
        }
        if let Some(o) = self.scene.objects.iter().find(|o| o.mesh.faces.is_empty()) {
            return Err(ConfigError::ZeroPolygonRubric(o.name.clone()));
        }
        if self.bounding_radius() <= 0.0 {
            return Err(ConfigError::DegenerateRubric);
        }
        Ok(())
    }

    /// World-space bounding box of the whole rubric scene.
    pub fn scene_aabb(&self) -> Option<Aabb> {
        self.scene
            .objects
            .iter()
            .filter_map(|o| world_aabb(&o.mesh, &o.transform).ok())
            .reduce(|a, b| a.union(&b))
    }

    /// Radius of the sphere enclosing the rubric scene; the unit for
    /// location tolerances.
    pub fn bounding_radius(&self) -> f64 {
        self.scene_aabb().map_or(0.0, |b| b.bounding_radius())
    }

    /// JSON rubric document with the scene inlined.
    pub fn to_value(&self) -> Value {
        json!({
            "id": self.id,
            "scene": ingest::to_sgf_value(&self.scene),
            "weights": self.weights,
            "tolerances": self.tolerances,
            "use_declared_primitive": self.use_declared_primitive,
            "allow_weight_order_override": self.allow_weight_order_override,
            "classifier": self.classifier,
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RubricDoc {
    #[serde(default)]
    id: Option<String>,
    scene: Value,
    #[serde(default)]
    weights: WeightTable,
    #[serde(default)]
    tolerances: ToleranceTable,
    #[serde(default)]
    use_declared_primitive: bool,
    #[serde(default)]
    allow_weight_order_override: bool,
    #[serde(default)]
    classifier: ClassifierConfig,
}

/// Parses a rubric document. `scene` is either an inline SGF object or
/// `{"path": "..."}`, resolved against `base_dir`; path references are
/// refused when `base_dir` is `None`.
pub fn parse_rubric(bytes: &[u8], base_dir: Option<&Path>, default_id: &str) -> Result<Rubric, ConfigError> {
    let doc: RubricDoc = serde_json::from_slice(bytes).map_err(|e| ConfigError::Malformed(e.to_string()))?;
    let scene = match doc.scene.get("path").and_then(Value::as_str) {
        Some(rel) => {
            let Some(dir) = base_dir else {
                return Err(ConfigError::Malformed(
                    "scene path references are not allowed here; inline the scene".into(),
                ));
            };
            let path = dir.join(rel);
            let bytes = std::fs::read(&path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            ingest::parse_by_name(&name, &bytes).map_err(ConfigError::RubricScene)?.scene
        }
        None => ingest::parse_sgf_value(&doc.scene).map_err(ConfigError::RubricScene)?.scene,
    };
    let mut rubric = Rubric {
        id: doc.id.unwrap_or_else(|| default_id.to_owned()),
        scene,
        weights: doc.weights,
        tolerances: doc.tolerances,
        use_declared_primitive: doc.use_declared_primitive,
        allow_weight_order_override: doc.allow_weight_order_override,
        classifier: doc.classifier,
        warnings: Vec::new(),
    };
    rubric.validate()?;
    Ok(rubric)
}

/// Loads a rubric file; its id defaults to the file stem.
pub fn load_rubric(path: &Path) -> Result<Rubric, ConfigError> {
    let bytes = std::fs::read(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let stem = file_stem(path);
    parse_rubric(&bytes, path.parent(), &stem)
}

/// File name without `.sgf.json`, `.json` or `.obj` suffixes.
pub fn file_stem(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    for suffix in [".sgf.json", ".rubric.json", ".json", ".obj", ".OBJ"] {
        if let Some(stem) = name.strip_suffix(suffix) {
            return stem.to_owned();
        }
    }
    name
}
