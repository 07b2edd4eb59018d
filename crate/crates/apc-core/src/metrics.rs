//! Per-record and aggregate evaluation metrics.
//!
//! A record is scored against the (possibly placeholder-annotated) ground
//! truth: exact match, Levenshtein-based edit similarity, and editing
//! cost. Cost is measured against the user's final text when available,
//! otherwise against the ground truth. Aggregation reports everything on
//! a 0-100 percentage scale: HCR/PCR (outputs without/with placeholders),
//! EM (acting as recall on annotated benchmarks), ES, Precision (exact
//! matches among placeholder-bearing outputs), their harmonic-mean F1,
//! and Cost.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::levenshtein_slice;
use crate::cursor;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("cannot aggregate an empty record set")]
    EmptyInput,
}

/// Per-record constituents of the aggregate metrics (unit scale).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordScore {
    pub has_placeholder: bool,
    /// 1.0 on exact match with the ground truth, else 0.0.
    pub em: f64,
    /// Normalized Levenshtein similarity to the ground truth.
    pub es: f64,
    /// Normalized editing cost to reach the user-final text when present,
    /// otherwise the ground truth.
    pub cost: f64,
}

/// Aggregate metrics on a 0-100 scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub hcr: f64,
    pub pcr: f64,
    pub em: f64,
    pub es: f64,
    pub precision: f64,
    pub f1: f64,
    pub cost: f64,
}

/// Normalized Levenshtein similarity `1 - lev/max(|a|, |b|)` at character
/// level, cursor as one atomic character. Both empty gives 1.0.
pub fn levenshtein_similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = cursor::normalize(a).chars().collect();
    let b: Vec<char> = cursor::normalize(b).chars().collect();
    let denom = a.len().max(b.len());
    if denom == 0 {
        return 1.0;
    }
    1.0 - levenshtein_slice(&a, &b) as f64 / denom as f64
}

/// Harmonic mean of two percentage-scale quantities; zero when either is.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision <= 0.0 || recall <= 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Score one prediction against its ground truth (and, for cost, the
/// user-final text when present).
pub fn score_record(pred: &str, truth: &str, user_final: Option<&str>) -> RecordScore {
    let pred = cursor::normalize(pred);
    let truth = cursor::normalize(truth);
    let es = levenshtein_similarity(&pred, &truth);
    let cost = match user_final {
        Some(uf) => 1.0 - levenshtein_similarity(&pred, &cursor::normalize(uf)),
        None => 1.0 - es,
    };
    RecordScore {
        has_placeholder: cursor::contains_cursor(&pred),
        em: if pred == truth { 1.0 } else { 0.0 },
        es,
        cost,
    }
}

/// Fold record scores into a percentage-scale report.
pub fn aggregate(scores: &[RecordScore]) -> Result<MetricsReport, MetricsError> {
    if scores.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = scores.len();
    let nf = n as f64;
    let with_placeholder = scores.iter().filter(|s| s.has_placeholder).count();
    let exact_with_placeholder = scores
        .iter()
        .filter(|s| s.has_placeholder && s.em == 1.0)
        .count();

    let pcr = 100.0 * with_placeholder as f64 / nf;
    let hcr = 100.0 * (n - with_placeholder) as f64 / nf;
    let em = 100.0 * scores.iter().map(|s| s.em).sum::<f64>() / nf;
    let es = 100.0 * scores.iter().map(|s| s.es).sum::<f64>() / nf;
    let cost = 100.0 * scores.iter().map(|s| s.cost).sum::<f64>() / nf;
    let precision = if with_placeholder == 0 {
        0.0
    } else {
        100.0 * exact_with_placeholder as f64 / with_placeholder as f64
    };
    let f1 = f1_score(precision, em);

    Ok(MetricsReport {
        n,
        hcr,
        pcr,
        em,
        es,
        precision,
        f1,
        cost,
    })
}
