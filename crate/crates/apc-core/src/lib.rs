//! Core library for adaptive placeholder completion (APC) experiments.
//!
//! Code completion models can either emit a fully concrete suggestion
//! ("hard completion", HC) or leave explicit placeholder markers at
//! uncertain positions ("placeholder completion", PC). This crate provides
//! the pieces needed to study that trade-off at desk scale:
//!
//! - [`align`]: token/character alignment primitives (LCS, Levenshtein,
//!   diff decomposition) and placeholder-instance construction.
//! - [`costmodel`]: the expected-cost calculus for HC vs. adaptive
//!   placeholding, including the critical entropy threshold and a
//!   brute-force verifier for the sign law.
//! - [`reward`]: the cost-based reward used to score completions.
//! - [`metrics`]: per-record and aggregate evaluation metrics
//!   (HCR/PCR/EM/ES/Precision/F1/Cost).
//! - [`lm`]: an add-k smoothed n-gram model serving as a deterministic
//!   token-probability source, plus a file adapter for external
//!   distributions.
//! - [`sim`]: fixed-threshold post-processing sweeps and cumulative
//!   entropy analysis over a benchmark.
//! - [`data`]: JSONL ingestion, HC/PC classification and deterministic
//!   dataset construction.
//!
//! All text is normalized at I/O boundaries so that the placeholder is a
//! single atomic character in memory; see [`cursor`].

pub mod align;
pub mod costmodel;
pub mod cursor;
pub mod data;
pub mod lm;
pub mod metrics;
pub mod reward;
pub mod sim;
