//! Add-k smoothed n-gram model used as a deterministic token-probability
//! source, plus a JSONL adapter for externally supplied distributions.
//!
//! The model stores raw context counts; conditional probabilities are
//! `(count + k) / (total + k*|V|)`, which degrades to the uniform
//! distribution for contexts never seen in training. Everything is kept
//! in ordered maps so that training, querying and serialization are fully
//! deterministic.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use thiserror::Error;

use crate::align::{TokenMode, TokenSeq};
use crate::costmodel::{shannon_entropy, TokenDistribution};

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LmError {
    #[error("corpus contains no tokens")]
    EmptyCorpus,
    #[error("n-gram order must be >= 1, got {0}")]
    InvalidOrder(usize),
    #[error("smoothing k must be a positive finite number, got {0}")]
    InvalidSmoothing(f64),
    #[error("model file version {found} not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("line {line}: {message}")]
    DistributionFile { line: usize, message: String },
    #[error("{count} distributions supplied for {expected} positions")]
    PositionCountMismatch { count: usize, expected: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("model file: {0}")]
    Format(#[from] serde_json::Error),
}

/// Per-position output of a probability source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionProfile {
    /// The unit actually present at this position.
    pub token: String,
    /// Maximum probability of the predictive distribution.
    pub confidence: f64,
    /// Shannon entropy of the predictive distribution, in nats.
    pub entropy: f64,
}

/// Add-k smoothed n-gram model over text units.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    order: usize,
    mode: TokenMode,
    smoothing_k: f64,
    vocab: BTreeSet<String>,
    counts: BTreeMap<Vec<String>, BTreeMap<String, u64>>,
}

#[derive(Serialize, Deserialize)]
struct ContextFile {
    context: Vec<String>,
    counts: BTreeMap<String, u64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    order: usize,
    mode: TokenMode,
    smoothing_k: f64,
    vocab: Vec<String>,
    contexts: Vec<ContextFile>,
}

impl NgramModel {
    /// Train on a corpus: every window of `order` consecutive units
    /// contributes one (context, target) count.
    pub fn train(
        corpus: &str,
        order: usize,
        smoothing_k: f64,
        mode: TokenMode,
    ) -> Result<Self, LmError> {
        if order < 1 {
            return Err(LmError::InvalidOrder(order));
        }
        if smoothing_k <= 0.0 || !smoothing_k.is_finite() {
            return Err(LmError::InvalidSmoothing(smoothing_k));
        }
        let tokens = TokenSeq::tokenize(corpus, mode);
        if tokens.is_empty() {
            return Err(LmError::EmptyCorpus);
        }
        let units = tokens.units();
        let vocab: BTreeSet<String> = units.iter().cloned().collect();
        let mut counts: BTreeMap<Vec<String>, BTreeMap<String, u64>> = BTreeMap::new();
        for window in units.windows(order) {
            let context = window[..order - 1].to_vec();
            let target = window[order - 1].clone();
            *counts
                .entry(context)
                .or_default()
                .entry(target)
                .or_insert(0) += 1;
        }
        Ok(NgramModel {
            order,
            mode,
            smoothing_k,
            vocab,
            counts,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mode(&self) -> TokenMode {
        self.mode
    }

    pub fn smoothing_k(&self) -> f64 {
        self.smoothing_k
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    /// Predictive distribution after `context` (only the last `order - 1`
    /// units matter). Contexts never seen in training yield the uniform
    /// distribution over the vocabulary.
    pub fn next_dist(&self, context: &[String]) -> TokenDistribution {
        let keep = self.order - 1;
        let suffix = &context[context.len().saturating_sub(keep)..];
        let observed = if suffix.len() == keep {
            self.counts.get(suffix)
        } else {
            None
        };
        let total: u64 = observed.map(|m| m.values().sum()).unwrap_or(0);
        let k = self.smoothing_k;
        let denom = total as f64 + k * self.vocab.len() as f64;
        let probs: BTreeMap<String, f64> = self
            .vocab
            .iter()
            .map(|token| {
                let count = observed.and_then(|m| m.get(token)).copied().unwrap_or(0);
                (token.clone(), (count as f64 + k) / denom)
            })
            .collect();
        TokenDistribution::new(probs).expect("smoothed probabilities sum to one")
    }

    /// Profile every position of a unit sequence autoregressively: the
    /// distribution at position `i` is conditioned on the preceding units.
    pub fn sequence_profile(&self, units: &[String]) -> Vec<PositionProfile> {
        (0..units.len())
            .map(|i| {
                let dist = self.next_dist(&units[..i]);
                let (_, confidence) = dist.p_max();
                PositionProfile {
                    token: units[i].clone(),
                    confidence,
                    entropy: shannon_entropy(&dist),
                }
            })
            .collect()
    }

    /// Serialize to the versioned JSON model format.
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            order: self.order,
            mode: self.mode,
            smoothing_k: self.smoothing_k,
            vocab: self.vocab.iter().cloned().collect(),
            contexts: self
                .counts
                .iter()
                .map(|(context, counts)| ContextFile {
                    context: context.clone(),
                    counts: counts.clone(),
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LmError> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(LmError::VersionMismatch {
                found: file.version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        if file.order < 1 {
            return Err(LmError::InvalidOrder(file.order));
        }
        if file.smoothing_k <= 0.0 || !file.smoothing_k.is_finite() {
            return Err(LmError::InvalidSmoothing(file.smoothing_k));
        }
        Ok(NgramModel {
            order: file.order,
            mode: file.mode,
            smoothing_k: file.smoothing_k,
            vocab: file.vocab.into_iter().collect(),
            counts: file
                .contexts
                .into_iter()
                .map(|c| (c.context, c.counts))
                .collect(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), LmError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, LmError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[derive(Deserialize)]
struct DistributionLine {
    candidates: Vec<String>,
    probs: Vec<f64>,
}

/// Read externally supplied per-position distributions: one JSONL object
/// `{"candidates": [...], "probs": [...]}` per position.
pub fn read_distribution_file(path: &Path) -> Result<Vec<TokenDistribution>, LmError> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut dists = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let number = idx + 1;
        let fail = |message: String| LmError::DistributionFile {
            line: number,
            message,
        };
        let parsed: DistributionLine =
            serde_json::from_str(&line).map_err(|e| fail(e.to_string()))?;
        if parsed.candidates.len() != parsed.probs.len() {
            return Err(fail(format!(
                "{} candidates but {} probabilities",
                parsed.candidates.len(),
                parsed.probs.len()
            )));
        }
        let mut map = BTreeMap::new();
        for (token, p) in parsed.candidates.into_iter().zip(parsed.probs) {
            if map.insert(token.clone(), p).is_some() {
                return Err(fail(format!("duplicate candidate {token:?}")));
            }
        }
        dists.push(TokenDistribution::new(map).map_err(|e| fail(e.to_string()))?);
    }
    Ok(dists)
}

/// Pair externally supplied distributions with the units they scored.
pub fn profiles_from_distributions(
    units: &[String],
    dists: &[TokenDistribution],
) -> Result<Vec<PositionProfile>, LmError> {
    if units.len() != dists.len() {
        return Err(LmError::PositionCountMismatch {
            count: dists.len(),
            expected: units.len(),
        });
    }
    Ok(units
        .iter()
        .zip(dists)
        .map(|(token, dist)| {
            let (_, confidence) = dist.p_max();
            PositionProfile {
                token: token.clone(),
                confidence,
                entropy: shannon_entropy(dist),
            }
        })
        .collect())
}
