//! Bytes in, rendered report out: the path shared by the CLI and the
//! service so both emit identical reports for identical inputs.

use crate::engine::{grade, GradeReport};
use crate::feedback::{render_feedback, FeedbackTemplateSet};
use crate::ingest::{parse_obj, parse_sgf, Parsed, ValidationReport};
use crate::rubric::{ConfigError, Rubric};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubmissionFormat {
    Sgf,
    Obj,
}

impl SubmissionFormat {
    /// `.obj` (any case) is OBJ; everything else is SGF.
    pub fn from_file_name(name: &str) -> Self {
        if name.to_ascii_lowercase().ends_with(".obj") {
            SubmissionFormat::Obj
        } else {
            SubmissionFormat::Sgf
        }
    }

    pub fn parse(self, bytes: &[u8]) -> Result<Parsed, ValidationReport> {
        match self {
            SubmissionFormat::Sgf => parse_sgf(bytes),
            SubmissionFormat::Obj => parse_obj(bytes),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid submission:\n{0}")]
    Input(ValidationReport),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Parses, grades and attaches feedback.
pub fn grade_submission(
    submission_id: &str,
    format: SubmissionFormat,
    bytes: &[u8],
    rubric: &Rubric,
    templates: &FeedbackTemplateSet,
) -> Result<GradeReport, PipelineError> {
    let parsed = format.parse(bytes).map_err(PipelineError::Input)?;
    let mut report = grade(submission_id, &parsed.scene, rubric)?;
    report.feedback = Some(render_feedback(&report, templates));
    Ok(report)
}
