//! Rubric-based grading of 3D modeling submissions.
//!
//! A submission [`Scene`] is compared against an instructor [`Rubric`]:
//! objects are matched, each pair is checked for pose, scale, polygon
//! budget, primitive type and modifiers, and deductions are subtracted
//! from the maximum score.

pub mod assignment;
pub mod engine;
pub mod feedback;
pub mod fixtures;
pub mod geometry;
pub mod ingest;
pub mod pipeline;
pub mod rubric;
pub mod scene;
pub mod similarity;
pub mod summary;

pub use engine::{grade, CheckId, GradeReport, Matching, SubScore, ENGINE_VERSION};
pub use feedback::{render_feedback, FeedbackItem, FeedbackTemplateSet, Severity};
pub use geometry::{infer_primitive, mesh_stats, MeshStats, PrimitiveGuess};
pub use ingest::{parse_by_name, parse_obj, parse_sgf, ValidationReport};
pub use rubric::{load_rubric, parse_rubric, ConfigError, Rubric};
pub use scene::{Camera, Mesh, PrimitiveType, Quaternion, Scene, SceneObject, Transform, Vec3};
pub use similarity::{mesh_fingerprint, scan_duplicates, DuplicateReport, Fingerprint};
pub use pipeline::{grade_submission, PipelineError, SubmissionFormat};
