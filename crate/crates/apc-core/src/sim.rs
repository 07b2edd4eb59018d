//! Fixed-threshold post-processing experiments over a benchmark.
//!
//! Given a probability source, every prediction is profiled
//! autoregressively; a position triggers when its entropy exceeds the
//! entropy threshold, or its confidence falls below the confidence
//! threshold. Triggering units are replaced by the placeholder sentinel
//! (adjacent sentinels collapse to one) and the modified outputs are
//! scored with the standard metrics. Sweeping the threshold produces one
//! metrics row per threshold value.
//!
//! [`cumulative_entropy`] supports the complementary analysis: per-sample
//! mean entropy over placeholder-designated ground-truth regions vs. the
//! remaining (hard-completion) regions, cumulatively averaged as the
//! benchmark grows.

use thiserror::Error;

use crate::align::TokenSeq;
use crate::cursor::CURSOR_STR;
use crate::data::CompletionRecord;
use crate::lm::{NgramModel, PositionProfile};
use crate::metrics::{self, MetricsError};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("profile length {profile} does not match prediction length {prediction}")]
    LengthMismatch { prediction: usize, profile: usize },
    #[error("benchmark is empty")]
    EmptyBenchmark,
    #[error("no thresholds supplied")]
    EmptyThresholds,
    #[error("invalid {kind:?} threshold {value}")]
    InvalidThreshold { kind: ThresholdKind, value: f64 },
    #[error("record {id:?} lacks placeholder-region annotations")]
    MissingAnnotations { id: String },
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
}

/// Which per-position quantity the policy thresholds on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    /// Trigger when entropy exceeds the threshold (nats).
    Entropy,
    /// Trigger when confidence falls below the threshold (probability).
    Confidence,
}

/// A fixed placeholder-insertion policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPolicy {
    kind: ThresholdKind,
    value: f64,
}

impl ThresholdPolicy {
    pub fn new(kind: ThresholdKind, value: f64) -> Result<Self, SimError> {
        let valid = match kind {
            ThresholdKind::Entropy => value >= 0.0 && !value.is_nan(),
            ThresholdKind::Confidence => (0.0..=1.0).contains(&value),
        };
        if !valid {
            return Err(SimError::InvalidThreshold { kind, value });
        }
        Ok(ThresholdPolicy { kind, value })
    }

    pub fn kind(&self) -> ThresholdKind {
        self.kind
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    fn triggers(&self, profile: &PositionProfile) -> bool {
        match self.kind {
            ThresholdKind::Entropy => profile.entropy > self.value,
            ThresholdKind::Confidence => profile.confidence < self.value,
        }
    }
}

/// One row of a threshold sweep (percentage scale).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub threshold: f64,
    pub pcr: f64,
    pub cost: f64,
    pub em: f64,
    pub es: f64,
}

/// Replace every triggering unit with the sentinel, collapsing adjacent
/// sentinels. Non-triggering units pass through untouched.
pub fn apply_threshold(
    pred: &TokenSeq,
    profile: &[PositionProfile],
    policy: &ThresholdPolicy,
) -> Result<TokenSeq, SimError> {
    if pred.len() != profile.len() {
        return Err(SimError::LengthMismatch {
            prediction: pred.len(),
            profile: profile.len(),
        });
    }
    let mut units: Vec<String> = Vec::with_capacity(pred.len());
    for (unit, prof) in pred.units().iter().zip(profile) {
        let replacement = if policy.triggers(prof) {
            CURSOR_STR
        } else {
            unit.as_str()
        };
        if replacement == CURSOR_STR && units.last().map(String::as_str) == Some(CURSOR_STR) {
            continue;
        }
        units.push(replacement.to_string());
    }
    Ok(TokenSeq::from_units(units))
}

/// Profile each prediction once, then score the post-processed outputs at
/// every threshold. Rows come back sorted by threshold.
pub fn sweep(
    benchmark: &[CompletionRecord],
    model: &NgramModel,
    thresholds: &[f64],
    kind: ThresholdKind,
) -> Result<Vec<SweepRow>, SimError> {
    if benchmark.is_empty() {
        return Err(SimError::EmptyBenchmark);
    }
    if thresholds.is_empty() {
        return Err(SimError::EmptyThresholds);
    }
    let mut thresholds = thresholds.to_vec();
    thresholds.sort_by(f64::total_cmp);

    let prepared: Vec<(TokenSeq, Vec<PositionProfile>)> = benchmark
        .iter()
        .map(|record| {
            let pred = TokenSeq::tokenize(&record.prediction, model.mode());
            let profile = model.sequence_profile(pred.units());
            (pred, profile)
        })
        .collect();

    let mut rows = Vec::with_capacity(thresholds.len());
    for &value in &thresholds {
        let policy = ThresholdPolicy::new(kind, value)?;
        let mut scores = Vec::with_capacity(benchmark.len());
        for (record, (pred, profile)) in benchmark.iter().zip(&prepared) {
            let modified = apply_threshold(pred, profile, &policy)?;
            scores.push(metrics::score_record(
                &modified.concat(),
                &record.truth,
                record.user_final.as_deref(),
            ));
        }
        let report = metrics::aggregate(&scores)?;
        rows.push(SweepRow {
            threshold: value,
            pcr: report.pcr,
            cost: report.cost,
            em: report.em,
            es: report.es,
        });
    }
    Ok(rows)
}

/// One point of the cumulative entropy curves after `n` records.
///
/// A curve stays `None` until the first record contributing to it; records
/// whose placeholder (or hard-completion) region is empty do not advance
/// that curve's mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyCurvePoint {
    pub n: usize,
    pub pc_mean: Option<f64>,
    pub hc_mean: Option<f64>,
}

/// Per-sample mean entropy over placeholder-designated regions vs. the
/// rest, computed autoregressively on the pre-substitution ground truth
/// and cumulatively averaged in benchmark order.
pub fn cumulative_entropy(
    benchmark: &[CompletionRecord],
    model: &NgramModel,
) -> Result<Vec<EntropyCurvePoint>, SimError> {
    if benchmark.is_empty() {
        return Err(SimError::EmptyBenchmark);
    }
    let mut pc_sum = 0.0;
    let mut pc_samples = 0usize;
    let mut hc_sum = 0.0;
    let mut hc_samples = 0usize;
    let mut points = Vec::with_capacity(benchmark.len());

    for (idx, record) in benchmark.iter().enumerate() {
        let spans = record
            .annotations
            .as_ref()
            .ok_or_else(|| SimError::MissingAnnotations {
                id: record.id.clone(),
            })?;
        let truth = TokenSeq::tokenize(&record.truth, model.mode());
        let profile = model.sequence_profile(truth.units());

        let mut pc_entropies = Vec::new();
        let mut hc_entropies = Vec::new();
        let mut offset = 0usize;
        for (unit, prof) in truth.units().iter().zip(&profile) {
            let start = offset;
            let end = offset + unit.chars().count();
            offset = end;
            let in_pc = spans.iter().any(|s| start < s.end && s.start < end);
            if in_pc {
                pc_entropies.push(prof.entropy);
            } else {
                hc_entropies.push(prof.entropy);
            }
        }
        if !pc_entropies.is_empty() {
            pc_sum += pc_entropies.iter().sum::<f64>() / pc_entropies.len() as f64;
            pc_samples += 1;
        }
        if !hc_entropies.is_empty() {
            hc_sum += hc_entropies.iter().sum::<f64>() / hc_entropies.len() as f64;
            hc_samples += 1;
        }
        points.push(EntropyCurvePoint {
            n: idx + 1,
            pc_mean: (pc_samples > 0).then(|| pc_sum / pc_samples as f64),
            hc_mean: (hc_samples > 0).then(|| hc_sum / hc_samples as f64),
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::TokenMode;
    use crate::cursor::CURSOR_CHAR;
    use crate::data::Span;

    fn profile_with_entropies(units: &[&str], entropies: &[f64]) -> Vec<PositionProfile> {
        units
            .iter()
            .zip(entropies)
            .map(|(u, &e)| PositionProfile {
                token: u.to_string(),
                confidence: (-e).exp(),
                entropy: e,
            })
            .collect()
    }

    fn seq(units: &[&str]) -> TokenSeq {
        TokenSeq::from_units(units.iter().map(|s| s.to_string()))
    }

    fn record(id: &str, prediction: &str, truth: &str) -> CompletionRecord {
        CompletionRecord {
            id: id.to_string(),
            prefix: String::new(),
            suffix: String::new(),
            prediction: prediction.to_string(),
            truth: truth.to_string(),
            user_final: None,
            annotations: None,
        }
    }

    #[test]
    fn apply_threshold_replaces_triggering_positions() {
        let pred = seq(&["a", "b", "c"]);
        let prof = profile_with_entropies(&["a", "b", "c"], &[0.1, 2.0, 0.1]);
        let policy = ThresholdPolicy::new(ThresholdKind::Entropy, 1.0).unwrap();
        let out = apply_threshold(&pred, &prof, &policy).unwrap();
        assert_eq!(out.concat(), format!("a{CURSOR_CHAR}c"));
    }

    #[test]
    fn apply_threshold_infinite_is_identity() {
        let pred = seq(&["a", "b"]);
        let prof = profile_with_entropies(&["a", "b"], &[5.0, 9.0]);
        let policy = ThresholdPolicy::new(ThresholdKind::Entropy, f64::INFINITY).unwrap();
        let out = apply_threshold(&pred, &prof, &policy).unwrap();
        assert_eq!(out, pred);
    }

    #[test]
    fn apply_threshold_zero_collapses_everything() {
        let pred = seq(&["a", "b", "c"]);
        let prof = profile_with_entropies(&["a", "b", "c"], &[0.5, 0.7, 0.9]);
        let policy = ThresholdPolicy::new(ThresholdKind::Entropy, 0.0).unwrap();
        let out = apply_threshold(&pred, &prof, &policy).unwrap();
        assert_eq!(out.concat(), CURSOR_CHAR.to_string());
    }

    #[test]
    fn apply_threshold_confidence_kind() {
        let pred = seq(&["a", "b"]);
        let mut prof = profile_with_entropies(&["a", "b"], &[0.0, 0.0]);
        prof[0].confidence = 0.2;
        prof[1].confidence = 0.9;
        let policy = ThresholdPolicy::new(ThresholdKind::Confidence, 0.5).unwrap();
        let out = apply_threshold(&pred, &prof, &policy).unwrap();
        assert_eq!(out.concat(), format!("{CURSOR_CHAR}b"));
    }

    #[test]
    fn apply_threshold_length_mismatch() {
        let pred = seq(&["a", "b"]);
        let prof = profile_with_entropies(&["a"], &[0.0]);
        let policy = ThresholdPolicy::new(ThresholdKind::Entropy, 1.0).unwrap();
        assert_eq!(
            apply_threshold(&pred, &prof, &policy),
            Err(SimError::LengthMismatch {
                prediction: 2,
                profile: 1
            })
        );
    }

    #[test]
    fn policy_validation() {
        assert!(ThresholdPolicy::new(ThresholdKind::Entropy, -0.1).is_err());
        assert!(ThresholdPolicy::new(ThresholdKind::Confidence, 1.5).is_err());
        assert!(ThresholdPolicy::new(ThresholdKind::Confidence, 0.5).is_ok());
    }

    fn tiny_benchmark_and_model() -> (Vec<CompletionRecord>, NgramModel) {
        // slot after "k " is ambiguous, the frame is deterministic
        let mut corpus = String::new();
        for i in 0..40 {
            corpus.push_str(&format!("k v{} ; ", i % 4));
        }
        let model = NgramModel::train(&corpus, 3, 0.001, TokenMode::Word).unwrap();
        let benchmark: Vec<CompletionRecord> = (0..10)
            .map(|i| record(&format!("r{i}"), "k v0 ;", &format!("k v{} ;", i % 4)))
            .collect();
        (benchmark, model)
    }

    #[test]
    fn sweep_is_monotone_and_converges_to_baseline() {
        let (benchmark, model) = tiny_benchmark_and_model();
        let thresholds = [0.0, 0.5, 1.0, 1.2, 2.0, 100.0];
        let rows = sweep(&benchmark, &model, &thresholds, ThresholdKind::Entropy).unwrap();
        assert_eq!(rows.len(), thresholds.len());
        for pair in rows.windows(2) {
            assert!(pair[0].threshold <= pair[1].threshold);
            assert!(
                pair[0].pcr >= pair[1].pcr,
                "pcr must not increase with the entropy threshold"
            );
        }
        assert_eq!(rows[0].pcr, 100.0, "threshold 0 placeholds everything");
        // a threshold above every observed entropy reproduces the baseline
        let scores: Vec<_> = benchmark
            .iter()
            .map(|r| metrics::score_record(&r.prediction, &r.truth, None))
            .collect();
        let baseline = metrics::aggregate(&scores).unwrap();
        let last = rows.last().unwrap();
        assert_eq!(last.pcr, baseline.pcr);
        assert_eq!(last.cost, baseline.cost);
        assert_eq!(last.em, baseline.em);
        assert_eq!(last.es, baseline.es);
    }

    #[test]
    fn sweep_rejects_empty_inputs() {
        let (benchmark, model) = tiny_benchmark_and_model();
        assert_eq!(
            sweep(&[], &model, &[1.0], ThresholdKind::Entropy),
            Err(SimError::EmptyBenchmark)
        );
        assert_eq!(
            sweep(&benchmark, &model, &[], ThresholdKind::Entropy),
            Err(SimError::EmptyThresholds)
        );
    }

    #[test]
    fn cumulative_entropy_single_sample() {
        let (_, model) = tiny_benchmark_and_model();
        let mut r = record("r0", "k v0 ;", "k v1 ;");
        r.annotations = Some(vec![Span { start: 2, end: 4 }]); // the "v1" chars
        let points = cumulative_entropy(&[r], &model).unwrap();
        assert_eq!(points.len(), 1);
        let p = points[0];
        assert_eq!(p.n, 1);
        assert!(p.pc_mean.is_some());
        assert!(p.hc_mean.is_some());
    }

    #[test]
    fn cumulative_entropy_requires_annotations() {
        let (_, model) = tiny_benchmark_and_model();
        let r = record("r0", "k v0 ;", "k v1 ;");
        assert_eq!(
            cumulative_entropy(&[r], &model),
            Err(SimError::MissingAnnotations {
                id: "r0".to_string()
            })
        );
    }

    #[test]
    fn cumulative_entropy_skips_empty_regions() {
        let (_, model) = tiny_benchmark_and_model();
        let mut no_pc = record("r0", "k v0 ;", "k v1 ;");
        no_pc.annotations = Some(vec![]);
        let mut with_pc = record("r1", "k v0 ;", "k v2 ;");
        with_pc.annotations = Some(vec![Span { start: 2, end: 4 }]);
        let points = cumulative_entropy(&[no_pc, with_pc], &model).unwrap();
        assert_eq!(points[0].pc_mean, None);
        assert!(points[0].hc_mean.is_some());
        assert!(points[1].pc_mean.is_some());
    }

    #[test]
    fn ambiguous_slots_carry_more_entropy() {
        let (_, model) = tiny_benchmark_and_model();
        let benchmark: Vec<CompletionRecord> = (0..8)
            .map(|i| {
                let mut r = record(
                    &format!("r{i}"),
                    "k v0 ; k v0 ; k v0 ;",
                    &format!("k v{} ; k v{} ; k v{} ;", i % 4, (i + 1) % 4, (i + 2) % 4),
                );
                // the "vN" slots sit at chars 2..4, 9..11, 16..18
                r.annotations = Some(vec![
                    Span { start: 2, end: 4 },
                    Span { start: 9, end: 11 },
                    Span { start: 16, end: 18 },
                ]);
                r
            })
            .collect();
        let points = cumulative_entropy(&benchmark, &model).unwrap();
        let last = points.last().unwrap();
        assert!(
            last.pc_mean.unwrap() > last.hc_mean.unwrap(),
            "placeholder regions should accumulate more entropy: {last:?}"
        );
    }
}
