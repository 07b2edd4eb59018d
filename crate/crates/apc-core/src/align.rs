//! Sequence alignment primitives and placeholder-instance construction.
//!
//! Completions are compared as sequences of text units: single characters
//! in [`TokenMode::Char`], or code-shaped words in [`TokenMode::Word`]
//! (identifier runs, whitespace runs, single punctuation characters; the
//! split is reversible). A true longest common subsequence computed by
//! dynamic programming drives both the diff decomposition and the
//! rewriting of a ground truth into a placeholder instance.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::cursor::{CURSOR_CHAR, CURSOR_STR};

/// Granularity of text units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenMode {
    /// One unit per Unicode scalar value.
    Char,
    /// Identifier/digit runs, whitespace runs, single punctuation chars.
    Word,
}

impl fmt::Display for TokenMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenMode::Char => write!(f, "char"),
            TokenMode::Word => write!(f, "word"),
        }
    }
}

impl FromStr for TokenMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "char" => Ok(TokenMode::Char),
            "word" => Ok(TokenMode::Word),
            other => Err(format!("unknown token mode `{other}` (expected char|word)")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlignError {
    /// Inputs to placeholder construction must not already carry the sentinel.
    #[error("input already contains the cursor sentinel")]
    SentinelInInput,
}

/// A sequence of text units.
///
/// Concatenating the units reproduces the source text exactly in either
/// mode; in word mode whitespace is preserved as its own units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    units: Vec<String>,
}

impl TokenSeq {
    /// Split `text` into units according to `mode`.
    pub fn tokenize(text: &str, mode: TokenMode) -> Self {
        let units = match mode {
            TokenMode::Char => text.chars().map(String::from).collect(),
            TokenMode::Word => word_units(text),
        };
        TokenSeq { units }
    }

    /// Build a sequence from pre-split units. Empty units are dropped.
    pub fn from_units<I: IntoIterator<Item = String>>(units: I) -> Self {
        TokenSeq {
            units: units.into_iter().filter(|u| !u.is_empty()).collect(),
        }
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Join the units back into text.
    pub fn concat(&self) -> String {
        self.units.concat()
    }

    pub fn contains_sentinel(&self) -> bool {
        self.units.iter().any(|u| u.contains(CURSOR_CHAR))
    }
}

/// Word-mode split: maximal identifier/digit runs, maximal whitespace runs,
/// everything else one character per unit.
fn word_units(text: &str) -> Vec<String> {
    #[derive(PartialEq, Clone, Copy)]
    enum Class {
        Ident,
        Space,
        Other,
    }
    fn class_of(c: char) -> Class {
        if c.is_alphanumeric() || c == '_' {
            Class::Ident
        } else if c.is_whitespace() {
            Class::Space
        } else {
            Class::Other
        }
    }

    let mut units = Vec::new();
    let mut current = String::new();
    let mut current_class = Class::Other;
    for c in text.chars() {
        let cl = class_of(c);
        let extends = !current.is_empty()
            && current_class == cl
            && matches!(cl, Class::Ident | Class::Space);
        if !extends && !current.is_empty() {
            units.push(std::mem::take(&mut current));
        }
        current.push(c);
        current_class = cl;
    }
    if !current.is_empty() {
        units.push(current);
    }
    units
}

/// Classification of an aligned span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    /// Present in both sequences (part of the LCS).
    Common,
    /// Present only in the prediction (hallucinated content).
    PredOnly,
    /// Present only in the ground truth (omitted content).
    TruthOnly,
}

/// One aligned span of units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffSegment {
    pub kind: SegmentKind,
    pub units: Vec<String>,
}

impl DiffSegment {
    pub fn text(&self) -> String {
        self.units.concat()
    }
}

/// Longest common subsequence length over arbitrary unit slices.
pub fn lcs_len_slice<T: Eq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut row = vec![0usize; b.len() + 1];
    for ai in a {
        for (j, bj) in b.iter().enumerate() {
            row[j + 1] = if ai == bj {
                prev[j] + 1
            } else {
                prev[j + 1].max(row[j])
            };
        }
        std::mem::swap(&mut prev, &mut row);
    }
    prev[b.len()]
}

/// Levenshtein distance (unit insert/delete/substitute, all cost 1) over
/// arbitrary unit slices.
pub fn levenshtein_slice<T: Eq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut row = vec![0usize; b.len() + 1];
    for (i, ai) in a.iter().enumerate() {
        row[0] = i + 1;
        for (j, bj) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ai != bj);
            row[j + 1] = sub.min(prev[j + 1] + 1).min(row[j] + 1);
        }
        std::mem::swap(&mut prev, &mut row);
    }
    prev[b.len()]
}

/// LCS length between two token sequences.
pub fn lcs_len(a: &TokenSeq, b: &TokenSeq) -> usize {
    lcs_len_slice(a.units(), b.units())
}

/// Levenshtein distance between two token sequences.
pub fn levenshtein(a: &TokenSeq, b: &TokenSeq) -> usize {
    levenshtein_slice(a.units(), b.units())
}

/// Decompose a prediction/ground-truth pair into maximal common, pred-only
/// and truth-only spans based on a longest common subsequence of units.
///
/// Ties between equally long subsequences are broken toward matches that
/// occur earlier in `pred`, so the decomposition is deterministic. Within
/// a mismatch gap the pred-only span is emitted before the truth-only one.
pub fn diff_segments(pred: &TokenSeq, truth: &TokenSeq) -> Vec<DiffSegment> {
    let a = pred.units();
    let b = truth.units();
    let matches = lcs_matches(a, b);

    let mut segments = Vec::new();
    let mut pi = 0; // next unconsumed index in pred
    let mut ti = 0; // next unconsumed index in truth
    let mut k = 0;
    while k < matches.len() {
        let (mi, mj) = matches[k];
        push_gap(&mut segments, &a[pi..mi], &b[ti..mj]);
        // extend the run of consecutive matches
        let start = k;
        while k + 1 < matches.len()
            && matches[k + 1] == (matches[k].0 + 1, matches[k].1 + 1)
        {
            k += 1;
        }
        segments.push(DiffSegment {
            kind: SegmentKind::Common,
            units: a[matches[start].0..=matches[k].0].to_vec(),
        });
        pi = matches[k].0 + 1;
        ti = matches[k].1 + 1;
        k += 1;
    }
    push_gap(&mut segments, &a[pi..], &b[ti..]);
    segments
}

fn push_gap(segments: &mut Vec<DiffSegment>, pred_units: &[String], truth_units: &[String]) {
    if !pred_units.is_empty() {
        segments.push(DiffSegment {
            kind: SegmentKind::PredOnly,
            units: pred_units.to_vec(),
        });
    }
    if !truth_units.is_empty() {
        segments.push(DiffSegment {
            kind: SegmentKind::TruthOnly,
            units: truth_units.to_vec(),
        });
    }
}

/// Matched index pairs of one LCS embedding: ties pick the earliest
/// matched units in `pred`, and those units then sit at the leftmost
/// possible positions in `truth`.
///
/// The second step makes the embedding stable: re-diffing the common part
/// against the same truth reproduces it, so placeholder rewriting never
/// fragments further on reapplication.
fn lcs_matches(a: &[String], b: &[String]) -> Vec<(usize, usize)> {
    let n = a.len();
    let m = b.len();
    // dp[i][j] = LCS length of a[i..] and b[j..]
    let mut dp = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            dp[i][j] = if a[i] == b[j] {
                dp[i + 1][j + 1] + 1
            } else {
                dp[i + 1][j].max(dp[i][j + 1])
            };
        }
    }
    // phase 1: pick the matched pred indices
    let mut pred_indices = Vec::with_capacity(dp[0][0] as usize);
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a[i] == b[j] {
            pred_indices.push(i);
            i += 1;
            j += 1;
        } else if dp[i][j + 1] == dp[i][j] {
            // skipping this truth unit costs nothing; keep the pred unit
            // available so matches land as early in pred as possible
            j += 1;
        } else {
            i += 1;
        }
    }
    // phase 2: leftmost embedding of the matched units into truth
    let mut matches = Vec::with_capacity(pred_indices.len());
    let mut t = 0;
    for pi in pred_indices {
        while b[t] != a[pi] {
            t += 1;
        }
        matches.push((pi, t));
        t += 1;
    }
    matches
}

/// Rewrite `truth` into a placeholder instance: every maximal run of
/// non-common units (relative to `pred`) collapses to a single sentinel.
///
/// Rejects inputs that already carry the sentinel.
pub fn make_pc_instance(pred: &TokenSeq, truth: &TokenSeq) -> Result<TokenSeq, AlignError> {
    if pred.contains_sentinel() || truth.contains_sentinel() {
        return Err(AlignError::SentinelInInput);
    }
    let mut units = Vec::new();
    let mut gap_open = false;
    for seg in diff_segments(pred, truth) {
        match seg.kind {
            SegmentKind::Common => {
                units.extend(seg.units);
                gap_open = false;
            }
            SegmentKind::PredOnly | SegmentKind::TruthOnly => {
                if !gap_open {
                    units.push(CURSOR_STR.to_string());
                    gap_open = true;
                }
            }
        }
    }
    Ok(TokenSeq { units })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cursor::CURSOR_CHAR;
    use proptest::prelude::*;

    fn seq(units: &[&str]) -> TokenSeq {
        TokenSeq::from_units(units.iter().map(|s| s.to_string()))
    }

    fn chars(s: &str) -> TokenSeq {
        TokenSeq::tokenize(s, TokenMode::Char)
    }

    fn words(s: &str) -> TokenSeq {
        TokenSeq::tokenize(s, TokenMode::Word)
    }

    #[test]
    fn word_tokenizer_is_reversible() {
        let samples = [
            "foo(a, b)",
            "let x = y_2 + 10;",
            "  indented\n\tline",
            "",
            "snake_case_name",
            "a+b",
        ];
        for s in samples {
            assert_eq!(words(s).concat(), s, "round trip failed for {s:?}");
        }
    }

    #[test]
    fn word_tokenizer_units() {
        assert_eq!(
            words("foo(a, b)").units(),
            ["foo", "(", "a", ",", " ", "b", ")"]
        );
        assert_eq!(words("  x").units(), ["  ", "x"]);
    }

    #[test]
    fn diff_basic() {
        let got = diff_segments(&seq(&["a", "b", "c"]), &seq(&["a", "x", "c"]));
        let kinds: Vec<_> = got.iter().map(|s| (s.kind, s.text())).collect();
        assert_eq!(
            kinds,
            vec![
                (SegmentKind::Common, "a".to_string()),
                (SegmentKind::PredOnly, "b".to_string()),
                (SegmentKind::TruthOnly, "x".to_string()),
                (SegmentKind::Common, "c".to_string()),
            ]
        );
    }

    #[test]
    fn diff_identical_is_single_common() {
        let s = chars("same");
        let got = diff_segments(&s, &s);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].kind, SegmentKind::Common);
        assert_eq!(got[0].text(), "same");
    }

    #[test]
    fn diff_empty_pred() {
        let got = diff_segments(&seq(&[]), &seq(&["a"]));
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].kind, SegmentKind::TruthOnly);
    }

    #[test]
    fn diff_tie_break_prefers_earlier_pred_match() {
        // LCS("ab", "ba") is length 1 with two embeddings; keep pred[0].
        let got = diff_segments(&chars("ab"), &chars("ba"));
        let kinds: Vec<_> = got.iter().map(|s| (s.kind, s.text())).collect();
        assert_eq!(
            kinds,
            vec![
                (SegmentKind::TruthOnly, "b".to_string()),
                (SegmentKind::Common, "a".to_string()),
                (SegmentKind::PredOnly, "b".to_string()),
            ]
        );
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein(&chars("kitten"), &chars("sitting")), 3);
        assert_eq!(levenshtein(&chars("same"), &chars("same")), 0);
        assert_eq!(levenshtein(&chars(""), &chars("abc")), 3);
    }

    #[test]
    fn lcs_examples() {
        assert_eq!(lcs_len(&chars("abcd"), &chars("abxd")), 3);
        assert_eq!(lcs_len(&chars("same"), &chars("same")), 4);
        assert_eq!(lcs_len(&chars("ab"), &chars("cd")), 0);
    }

    #[test]
    fn pc_instance_word_mode() {
        let out = make_pc_instance(&words("foo(a, b)"), &words("foo(a, c)")).unwrap();
        assert_eq!(out.concat(), format!("foo(a, {CURSOR_CHAR})"));
    }

    #[test]
    fn pc_instance_identity_has_no_sentinel() {
        let s = words("foo(a, b)");
        let out = make_pc_instance(&s, &s).unwrap();
        assert_eq!(out, s);
        assert!(!out.contains_sentinel());
    }

    #[test]
    fn pc_instance_total_mismatch_collapses() {
        let out = make_pc_instance(&chars("xyz"), &chars("abc")).unwrap();
        assert_eq!(out.concat(), CURSOR_CHAR.to_string());
    }

    #[test]
    fn pc_instance_pred_only_gap_still_marks() {
        // Hallucinated content with nothing omitted still yields a sentinel.
        let out = make_pc_instance(&words("foo(xx)"), &words("foo()")).unwrap();
        assert_eq!(out.concat(), format!("foo({CURSOR_CHAR})"));
    }

    #[test]
    fn pc_instance_rejects_sentinel_input() {
        let bad = TokenSeq::from_units(vec![CURSOR_CHAR.to_string()]);
        assert_eq!(
            make_pc_instance(&bad, &chars("a")),
            Err(AlignError::SentinelInInput)
        );
        assert_eq!(
            make_pc_instance(&chars("a"), &bad),
            Err(AlignError::SentinelInInput)
        );
    }

    fn reconstruct(segs: &[DiffSegment], drop: SegmentKind) -> String {
        segs.iter()
            .filter(|s| s.kind != drop)
            .flat_map(|s| s.units.iter())
            .map(String::as_str)
            .collect()
    }

    fn short_seq() -> impl Strategy<Value = TokenSeq> {
        proptest::collection::vec("[ab c]", 0..12).prop_map(TokenSeq::from_units)
    }

    proptest! {
        #[test]
        fn reconstruction_holds(a in short_seq(), b in short_seq()) {
            let segs = diff_segments(&a, &b);
            prop_assert_eq!(reconstruct(&segs, SegmentKind::PredOnly), b.concat());
            prop_assert_eq!(reconstruct(&segs, SegmentKind::TruthOnly), a.concat());
        }

        #[test]
        fn segment_counts_match_lcs(a in short_seq(), b in short_seq()) {
            let segs = diff_segments(&a, &b);
            let lcs = lcs_len(&a, &b);
            let count = |k: SegmentKind| -> usize {
                segs.iter().filter(|s| s.kind == k).map(|s| s.units.len()).sum()
            };
            prop_assert_eq!(count(SegmentKind::Common), lcs);
            prop_assert_eq!(count(SegmentKind::PredOnly), a.len() - lcs);
            prop_assert_eq!(count(SegmentKind::TruthOnly), b.len() - lcs);
        }

        #[test]
        fn segments_nonempty_and_alternating(a in short_seq(), b in short_seq()) {
            let segs = diff_segments(&a, &b);
            for s in &segs {
                prop_assert!(!s.units.is_empty());
            }
            for w in segs.windows(2) {
                prop_assert_ne!(w[0].kind, w[1].kind);
            }
        }

        #[test]
        fn levenshtein_metric_axioms(a in short_seq(), b in short_seq(), c in short_seq()) {
            let dab = levenshtein(&a, &b);
            let dba = levenshtein(&b, &a);
            prop_assert_eq!(dab, dba);
            prop_assert_eq!(levenshtein(&a, &a), 0);
            prop_assert_eq!(dab == 0, a == b);
            let dac = levenshtein(&a, &c);
            let dcb = levenshtein(&c, &b);
            prop_assert!(dab <= dac + dcb);
        }

        #[test]
        fn pc_instance_invariants(a in short_seq(), b in short_seq()) {
            let out = make_pc_instance(&a, &b).unwrap();
            // stripped output is a subsequence of truth
            let stripped: Vec<&String> =
                out.units().iter().filter(|u| u.as_str() != CURSOR_STR).collect();
            let truth = b.units();
            let mut ti = 0;
            for u in &stripped {
                while ti < truth.len() && &&truth[ti] != u {
                    ti += 1;
                }
                prop_assert!(ti < truth.len(), "not a subsequence");
                ti += 1;
            }
            let sentinels = out.units().iter().filter(|u| u.as_str() == CURSOR_STR).count();
            prop_assert_eq!(sentinels >= 1, a != b);
            for w in out.units().windows(2) {
                prop_assert!(!(w[0] == CURSOR_STR && w[1] == CURSOR_STR));
            }
        }

        #[test]
        fn pc_instance_sentinel_count_non_increasing(a in short_seq(), b in short_seq()) {
            let once = make_pc_instance(&a, &b).unwrap();
            let count = |s: &TokenSeq| s.units().iter().filter(|u| u.as_str() == CURSOR_STR).count();
            let stripped = TokenSeq::from_units(
                once.units().iter().filter(|u| u.as_str() != CURSOR_STR).cloned(),
            );
            let twice = make_pc_instance(&stripped, &b).unwrap();
            prop_assert!(count(&twice) <= count(&once));
        }

        #[test]
        fn word_tokenize_round_trips(s in "[a-z_0-9(){} \\t\\n.,;+=-]{0,40}") {
            prop_assert_eq!(TokenSeq::tokenize(&s, TokenMode::Word).concat(), s);
        }
    }
}
