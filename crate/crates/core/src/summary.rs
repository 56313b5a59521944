//! Cohort aggregates shared by batch summaries and service statistics.

use std::collections::BTreeMap;

use crate::engine::{CheckId, GradeReport};

pub const HISTOGRAM_BINS: usize = 10;

/// Ten equal bins over `[0, max_score]`; a perfect score lands in the last
/// bin and out-of-range scores are clamped.
pub fn histogram_bin(score: f64, max_score: f64) -> usize {
    if max_score <= 0.0 || score.is_nan() {
        return 0;
    }
    let t = (score / max_score).clamp(0.0, 1.0);
    ((t * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)
}

pub fn score_histogram(scores: impl IntoIterator<Item = f64>, max_score: f64) -> [u64; HISTOGRAM_BINS] {
    let mut bins = [0u64; HISTOGRAM_BINS];
    for s in scores {
        bins[histogram_bin(s, max_score)] += 1;
    }
    bins
}

/// Number of reports with a positive deduction on each check. Every check
/// is present, zero counts included.
pub fn check_failure_counts<'a>(reports: impl IntoIterator<Item = &'a GradeReport>) -> BTreeMap<CheckId, u64> {
    let mut counts: BTreeMap<CheckId, u64> = CheckId::ALL.iter().map(|&c| (c, 0)).collect();
    for r in reports {
        for (check, deduction) in r.deductions_by_check() {
            if deduction > 0.0 {
                *counts.entry(check).or_default() += 1;
            }
        }
    }
    counts
}
