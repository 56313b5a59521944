//! Directory grading on a fixed-size worker pool.
//!
//! Results are collected in file-name order whatever the pool size, so the
//! summary CSV is byte-identical for any `jobs`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use meshgrade::engine::{CheckId, GradeReport};
use meshgrade::feedback::FeedbackTemplateSet;
use meshgrade::rubric::{file_stem, Rubric};
use meshgrade::summary::{check_failure_counts, score_histogram, HISTOGRAM_BINS};
use meshgrade::{grade_submission, SubmissionFormat};
use rayon::prelude::*;
use serde::Serialize;

use crate::{csv_row, render_csv, submission_files, Failure};

#[derive(Debug, Clone, Default)]
pub struct BatchOptions {
    pub jobs: usize,
    /// File name to submission id; unlisted files use their stem.
    pub manifest: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub total: usize,
    pub graded: usize,
    pub failed: Vec<(String, String)>,
    pub score_histogram: [u64; HISTOGRAM_BINS],
    pub per_check_failure_counts: BTreeMap<CheckId, u64>,
}

#[derive(Debug)]
pub struct BatchOutcome {
    /// Graded files in name order.
    pub reports: Vec<(String, GradeReport)>,
    pub summary: BatchSummary,
    pub csv: Vec<u8>,
}

impl BatchOutcome {
    /// `{stem}.report.json` per graded file plus `summary.json`.
    pub fn write_reports(&self, dir: &Path) -> Result<(), Failure> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .map_err(Failure::Internal)?;
        for (file, report) in &self.reports {
            let path = dir.join(format!("{}.report.json", file_stem(Path::new(file))));
            std::fs::write(&path, report.to_json())
                .with_context(|| format!("cannot write {}", path.display()))
                .map_err(Failure::Internal)?;
        }
        let mut json = serde_json::to_string_pretty(&self.summary).map_err(|e| Failure::Internal(e.into()))?;
        json.push('\n');
        std::fs::write(dir.join("summary.json"), json).map_err(|e| Failure::Internal(e.into()))
    }
}

fn grade_file(path: &Path, rubric: &Rubric, templates: &FeedbackTemplateSet, options: &BatchOptions) -> Result<GradeReport, String> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let id = options
        .manifest
        .as_ref()
        .and_then(|m| m.get(&name).cloned())
        .unwrap_or_else(|| file_stem(path));
    let bytes = std::fs::read(path).map_err(|e| format!("cannot read: {e}"))?;
    grade_submission(&id, SubmissionFormat::from_file_name(&name), &bytes, rubric, templates)
        .map_err(|e| e.to_string().trim_end().to_owned())
}

/// Grades every submission in `dir`. Unreadable or invalid files are listed
/// in the summary and never stop the batch; an empty directory is an input
/// error.
pub fn run_batch(
    dir: &Path,
    rubric: &Rubric,
    templates: &FeedbackTemplateSet,
    options: &BatchOptions,
) -> Result<BatchOutcome, Failure> {
    let files: Vec<PathBuf> = submission_files(dir)?;
    if files.is_empty() {
        return Err(Failure::Input(anyhow!("no submissions (*.sgf.json, *.obj) in {}", dir.display())));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs.max(1))
        .build()
        .map_err(|e| Failure::Internal(e.into()))?;
    let results: Vec<Result<GradeReport, String>> =
        pool.install(|| files.par_iter().map(|p| grade_file(p, rubric, templates, options)).collect());

    let mut reports = Vec::new();
    let mut failed = Vec::new();
    for (path, result) in files.iter().zip(results) {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        match result {
            Ok(report) => reports.push((name, report)),
            Err(e) => failed.push((name, e)),
        }
    }
    let summary = BatchSummary {
        total: files.len(),
        graded: reports.len(),
        failed,
        score_histogram: score_histogram(reports.iter().map(|(_, r)| r.score), rubric.weights.max_score),
        per_check_failure_counts: check_failure_counts(reports.iter().map(|(_, r)| r)),
    };
    let csv = render_csv(reports.iter().map(|(file, r)| csv_row(file, r)))?;
    Ok(BatchOutcome { reports, summary, csv })
}
