//! Cost-based reward for scoring completions against ground truth.
//!
//! Everything here works at character level after cursor normalization,
//! with the placeholder counting as one atomic character. A char-level
//! LCS feeds both the similarity ratio and the cost decomposition, so
//! the two stay mutually consistent:
//!
//! - `es = 2 * lcs / (|pred| + |truth|)`
//! - `c_model`: hallucinated characters (in pred, not in truth, cursors
//!   excluded)
//! - `c_gt`: omitted characters (in truth, not in pred)
//!
//! Raw costs map to bounded penalties through the saturation function
//! `f(x) = 1 - 1/(1 + slope*x)`, and the reward runs in three regimes:
//! exact match, placeholder-bearing output (split by whether it
//! hallucinates), and plain hard completion. The result is clamped to a
//! floor so long errors cannot produce runaway negative signals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::lcs_len_slice;
use crate::cursor::{self, CURSOR_CHAR};

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("ground truth contains the cursor sentinel")]
    CursorInTruth,
    #[error("saturation input {0} is negative")]
    NegativeCost(f64),
    #[error("invalid reward config: {0}")]
    InvalidConfig(String),
}

/// Weights and bounds of the reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    /// Penalty weight on omitted (placeholder-covered) characters.
    pub alpha_lazy: f64,
    /// Penalty weight on hallucinated characters.
    pub alpha_error: f64,
    /// Slope of the saturation function.
    pub saturation_slope: f64,
    /// Lower clamp on the reward.
    pub floor: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            alpha_lazy: 1.0,
            alpha_error: 1.0,
            saturation_slope: 0.1,
            floor: -1.0,
        }
    }
}

impl RewardConfig {
    pub fn new(
        alpha_lazy: f64,
        alpha_error: f64,
        saturation_slope: f64,
        floor: f64,
    ) -> Result<Self, RewardError> {
        if alpha_lazy < 0.0 || alpha_error < 0.0 {
            return Err(RewardError::InvalidConfig(format!(
                "alpha weights must be non-negative, got lazy={alpha_lazy}, error={alpha_error}"
            )));
        }
        if saturation_slope <= 0.0 || !saturation_slope.is_finite() {
            return Err(RewardError::InvalidConfig(format!(
                "saturation slope must be positive, got {saturation_slope}"
            )));
        }
        if floor > 0.0 {
            return Err(RewardError::InvalidConfig(format!(
                "floor must be <= 0, got {floor}"
            )));
        }
        Ok(RewardConfig {
            alpha_lazy,
            alpha_error,
            saturation_slope,
            floor,
        })
    }
}

/// Character counts of the diff decomposition, cursors excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostCounts {
    /// Hallucinated characters (prediction-only).
    pub c_model: usize,
    /// Omitted characters (truth-only).
    pub c_gt: usize,
}

/// Which regime produced a reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardCase {
    ExactMatch,
    /// Placeholder present, no hallucination: the stripped prediction is
    /// a subsequence of the truth.
    StructuralCorrect,
    /// Placeholder present alongside hallucinated content.
    StructuralError,
    HardCompletion,
}

impl RewardCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            RewardCase::ExactMatch => "exact_match",
            RewardCase::StructuralCorrect => "structural_correct",
            RewardCase::StructuralError => "structural_error",
            RewardCase::HardCompletion => "hard_completion",
        }
    }
}

/// A reward with its intermediate quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBreakdown {
    pub reward: f64,
    pub case: RewardCase,
    pub es: f64,
    pub counts: CostCounts,
}

/// Binary indicator of equality after cursor normalization.
pub fn exact_match(pred: &str, truth: &str) -> f64 {
    if cursor::normalize(pred) == cursor::normalize(truth) {
        1.0
    } else {
        0.0
    }
}

/// LCS similarity ratio `2 * lcs / (|pred| + |truth|)` at character level,
/// cursor counting as one atomic character. Both empty gives 1.0.
pub fn edit_similarity(pred: &str, truth: &str) -> f64 {
    let a: Vec<char> = cursor::normalize(pred).chars().collect();
    let b: Vec<char> = cursor::normalize(truth).chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let lcs = lcs_len_slice(&a, &b);
    2.0 * lcs as f64 / (a.len() + b.len()) as f64
}

/// Hallucinated/omitted character counts from the char-level diff.
/// The ground truth must be cursor-free.
pub fn cost_counts(pred: &str, truth: &str) -> Result<CostCounts, RewardError> {
    let pred = cursor::normalize(pred);
    let truth = cursor::normalize(truth);
    if cursor::contains_cursor(&truth) {
        return Err(RewardError::CursorInTruth);
    }
    let a: Vec<char> = pred.chars().collect();
    let b: Vec<char> = truth.chars().collect();
    let lcs = lcs_len_slice(&a, &b);
    let cursors = a.iter().filter(|&&c| c == CURSOR_CHAR).count();
    Ok(CostCounts {
        c_model: a.len() - lcs - cursors,
        c_gt: b.len() - lcs,
    })
}

/// Saturation penalty `f(x) = 1 - 1/(1 + slope*x)`: zero at zero, strictly
/// increasing, approaching 1.
pub fn saturate(x: f64, slope: f64) -> Result<f64, RewardError> {
    if x < 0.0 {
        return Err(RewardError::NegativeCost(x));
    }
    Ok(1.0 - 1.0 / (1.0 + slope * x))
}

/// Reward for a prediction against a cursor-free ground truth.
pub fn reward(pred: &str, truth: &str, cfg: &RewardConfig) -> Result<f64, RewardError> {
    Ok(reward_breakdown(pred, truth, cfg)?.reward)
}

/// Like [`reward`], also exposing the regime and intermediate quantities.
pub fn reward_breakdown(
    pred: &str,
    truth: &str,
    cfg: &RewardConfig,
) -> Result<RewardBreakdown, RewardError> {
    let pred = cursor::normalize(pred);
    let truth = cursor::normalize(truth);
    if cursor::contains_cursor(&truth) {
        return Err(RewardError::CursorInTruth);
    }
    let counts = cost_counts(&pred, &truth)?;
    let es = edit_similarity(&pred, &truth);

    if pred == truth {
        return Ok(RewardBreakdown {
            reward: 1.0,
            case: RewardCase::ExactMatch,
            es,
            counts,
        });
    }

    let f = |x: f64| saturate(x, cfg.saturation_slope);
    let (case, raw) = if cursor::contains_cursor(&pred) {
        if counts.c_model == 0 {
            (
                RewardCase::StructuralCorrect,
                es - cfg.alpha_lazy * f(counts.c_gt as f64)?,
            )
        } else {
            (
                RewardCase::StructuralError,
                es - f(cfg.alpha_error * counts.c_model as f64
                    + cfg.alpha_lazy * counts.c_gt as f64)?,
            )
        }
    } else {
        (
            RewardCase::HardCompletion,
            es - f((counts.c_model + counts.c_gt) as f64)?,
        )
    };

    Ok(RewardBreakdown {
        reward: raw.max(cfg.floor),
        case,
        es,
        counts,
    })
}
