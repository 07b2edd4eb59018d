//! Edit-trace ingestion, HC/PC classification and dataset construction.
//!
//! Records travel as JSONL, one object per line, with the placeholder
//! spelled `<|cursor|>` on disk. Ingestion normalizes text fields to the
//! internal sentinel and validates per line; writing denormalizes again,
//! so a well-formed file round-trips modulo key order and whitespace.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use thiserror::Error;

use crate::align::{make_pc_instance, AlignError, TokenMode, TokenSeq};
use crate::cursor;

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: record {id:?} has a cursor sentinel in its ground truth")]
    CursorInTruth { line: usize, id: String },
    #[error("line {line}: record {id:?} has an invalid annotation span: {message}")]
    InvalidSpan {
        line: usize,
        id: String,
        message: String,
    },
    #[error("record {id:?}: cannot rewrite ground truth: {source}")]
    Rewrite { id: String, source: AlignError },
    #[error(
        "insufficient records for ratio {ratio_hc}:{ratio_pc}: {hc_available} exact-match and \
         {pc_available} mismatch records available"
    )]
    InsufficientRecords {
        ratio_hc: usize,
        ratio_pc: usize,
        hc_available: usize,
        pc_available: usize,
    },
    #[error("ratio 0:0 is not a valid split request")]
    InvalidRatio,
}

/// Character span within the ground truth (half-open, char offsets).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

/// One completion interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub id: String,
    /// Context before the completion point.
    pub prefix: String,
    /// Context after the completion point.
    pub suffix: String,
    /// What the model suggested.
    pub prediction: String,
    /// The intended code.
    pub truth: String,
    /// What the user actually ended up with, when logged.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub user_final: Option<String>,
    /// Placeholder-designated spans of `truth` (curated upstream).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub annotations: Option<Vec<Span>>,
}

impl CompletionRecord {
    fn normalize_in_place(&mut self) {
        self.prediction = cursor::normalize(&self.prediction);
        self.truth = cursor::normalize(&self.truth);
        if let Some(uf) = &self.user_final {
            self.user_final = Some(cursor::normalize(uf));
        }
    }

    fn denormalized(&self) -> CompletionRecord {
        CompletionRecord {
            id: self.id.clone(),
            prefix: self.prefix.clone(),
            suffix: self.suffix.clone(),
            prediction: cursor::denormalize(&self.prediction),
            truth: cursor::denormalize(&self.truth),
            user_final: self.user_final.as_deref().map(cursor::denormalize),
            annotations: self.annotations.clone(),
        }
    }
}

/// Records split into exact-match (hard-completion) instances and
/// mismatch instances whose truth was rewritten with placeholders.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub hc: Vec<CompletionRecord>,
    pub pc: Vec<CompletionRecord>,
}

/// How to treat sentinels in the `truth` field while reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TruthPolicy {
    /// Raw edit traces: the ground truth must be cursor-free.
    CursorFree,
    /// Curated benchmarks: the ground truth may carry placeholders.
    AllowCursor,
}

fn read_lines(path: &Path, policy: TruthPolicy) -> Result<Vec<CompletionRecord>, DataError> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            return Err(DataError::Malformed {
                line: line_no,
                message: "blank line".to_string(),
            });
        }
        let mut record: CompletionRecord =
            serde_json::from_str(&line).map_err(|e| DataError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        record.normalize_in_place();
        if !seen.insert(record.id.clone()) {
            return Err(DataError::DuplicateId {
                line: line_no,
                id: record.id,
            });
        }
        if policy == TruthPolicy::CursorFree && cursor::contains_cursor(&record.truth) {
            return Err(DataError::CursorInTruth {
                line: line_no,
                id: record.id,
            });
        }
        validate_spans(&record, line_no)?;
        records.push(record);
    }
    Ok(records)
}

fn validate_spans(record: &CompletionRecord, line: usize) -> Result<(), DataError> {
    let Some(spans) = &record.annotations else {
        return Ok(());
    };
    let len = record.truth.chars().count();
    let fail = |message: String| DataError::InvalidSpan {
        line,
        id: record.id.clone(),
        message,
    };
    let mut sorted = spans.clone();
    sorted.sort_by_key(|s| (s.start, s.end));
    for span in &sorted {
        if span.start > span.end || span.end > len {
            return Err(fail(format!(
                "span {}..{} out of bounds for truth of {len} chars",
                span.start, span.end
            )));
        }
    }
    for pair in sorted.windows(2) {
        if pair[1].start < pair[0].end {
            return Err(fail(format!(
                "spans {}..{} and {}..{} overlap",
                pair[0].start, pair[0].end, pair[1].start, pair[1].end
            )));
        }
    }
    Ok(())
}

/// Read raw edit-trace records; the ground truth must be cursor-free.
pub fn ingest(path: &Path) -> Result<Vec<CompletionRecord>, DataError> {
    read_lines(path, TruthPolicy::CursorFree)
}

/// Read a curated benchmark; the ground truth may carry placeholders.
pub fn read_benchmark(path: &Path) -> Result<Vec<CompletionRecord>, DataError> {
    read_lines(path, TruthPolicy::AllowCursor)
}

/// Write records as JSONL with the on-disk sentinel spelling.
pub fn write_records<W: Write>(
    mut writer: W,
    records: &[CompletionRecord],
) -> Result<(), DataError> {
    for record in records {
        let line =
            serde_json::to_string(&record.denormalized()).map_err(|e| DataError::Malformed {
                line: 0,
                message: e.to_string(),
            })?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

/// JSONL text for a record list (convenience over [`write_records`]).
pub fn records_to_jsonl(records: &[CompletionRecord]) -> String {
    let mut buf = Vec::new();
    write_records(&mut buf, records).expect("writing to a vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits utf-8")
}

/// Classify records by exact match, rewrite mismatch truths with
/// placeholders (word-level alignment), then deterministically downsample
/// to the requested `hc:pc` ratio.
///
/// The split keeps the largest sizes `(t*ratio.0, t*ratio.1)` available
/// from both classes; sampling is a seeded uniform shuffle followed by a
/// prefix take, so a fixed seed reproduces the split exactly.
pub fn build_dataset(
    records: &[CompletionRecord],
    hc_pc_ratio: (usize, usize),
    seed: u64,
) -> Result<DatasetSplit, DataError> {
    let (ratio_hc, ratio_pc) = hc_pc_ratio;
    if ratio_hc == 0 && ratio_pc == 0 {
        return Err(DataError::InvalidRatio);
    }

    let mut hc = Vec::new();
    let mut pc = Vec::new();
    for record in records {
        if record.prediction == record.truth {
            hc.push(record.clone());
        } else {
            let pred = TokenSeq::tokenize(&record.prediction, TokenMode::Word);
            let truth = TokenSeq::tokenize(&record.truth, TokenMode::Word);
            let rewritten = make_pc_instance(&pred, &truth).map_err(|source| {
                DataError::Rewrite {
                    id: record.id.clone(),
                    source,
                }
            })?;
            let mut out = record.clone();
            out.truth = rewritten.concat();
            pc.push(out);
        }
    }

    let scale = match (ratio_hc, ratio_pc) {
        (0, p) => pc.len() / p,
        (h, 0) => hc.len() / h,
        (h, p) => (hc.len() / h).min(pc.len() / p),
    };
    if scale == 0 {
        return Err(DataError::InsufficientRecords {
            ratio_hc,
            ratio_pc,
            hc_available: hc.len(),
            pc_available: pc.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    hc.shuffle(&mut rng);
    pc.shuffle(&mut rng);
    hc.truncate(scale * ratio_hc);
    pc.truncate(scale * ratio_pc);
    Ok(DatasetSplit { hc, pc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cursor::CURSOR_CHAR;

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

    fn write_temp(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for line in lines {
            writeln!(f, "{line}").unwrap();
        }
        f
    }

    const VALID: &str = r#"{"id":"r1","prefix":"p","suffix":"s","prediction":"x","truth":"x"}"#;

    #[test]
    fn ingest_valid_lines() {
        let f = write_temp(&[
            VALID,
            r#"{"id":"r2","prefix":"","suffix":"","prediction":"a","truth":"b"}"#,
            r#"{"id":"r3","prefix":"","suffix":"","prediction":"a","truth":"a","user_final":"c"}"#,
        ]);
        let records = ingest(f.path()).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[2].user_final.as_deref(), Some("c"));
    }

    #[test]
    fn ingest_empty_file_is_empty_list() {
        let f = write_temp(&[]);
        assert!(ingest(f.path()).unwrap().is_empty());
    }

    #[test]
    fn ingest_missing_field_names_line() {
        let f = write_temp(&[
            VALID,
            r#"{"id":"r2","prefix":"","suffix":"","prediction":"a"}"#,
        ]);
        match ingest(f.path()) {
            Err(DataError::Malformed { line: 2, message }) => {
                assert!(message.contains("truth"), "message: {message}");
            }
            other => panic!("expected malformed line 2, got {other:?}"),
        }
    }

    #[test]
    fn ingest_duplicate_id_rejected() {
        let f = write_temp(&[VALID, VALID.replace("\"x\"", "\"y\"").as_str()]);
        assert!(matches!(
            ingest(f.path()),
            Err(DataError::DuplicateId { line: 2, .. })
        ));
    }

    #[test]
    fn ingest_rejects_cursor_in_truth() {
        let f = write_temp(&[
            r#"{"id":"r1","prefix":"","suffix":"","prediction":"a","truth":"a<|cursor|>"}"#,
        ]);
        assert!(matches!(
            ingest(f.path()),
            Err(DataError::CursorInTruth { line: 1, .. })
        ));
        // a benchmark reader accepts the same line
        assert_eq!(read_benchmark(f.path()).unwrap().len(), 1);
    }

    #[test]
    fn ingest_normalizes_cursor_literal() {
        let f = write_temp(&[
            r#"{"id":"r1","prefix":"","suffix":"","prediction":"a<|cursor|>b","truth":"ab"}"#,
        ]);
        let records = ingest(f.path()).unwrap();
        assert_eq!(records[0].prediction, format!("a{CURSOR_CHAR}b"));
    }

    #[test]
    fn span_validation() {
        let f = write_temp(&[
            r#"{"id":"r1","prefix":"","suffix":"","prediction":"a","truth":"abc","annotations":[{"start":1,"end":9}]}"#,
        ]);
        assert!(matches!(
            ingest(f.path()),
            Err(DataError::InvalidSpan { line: 1, .. })
        ));
        let f = write_temp(&[
            r#"{"id":"r1","prefix":"","suffix":"","prediction":"a","truth":"abcd","annotations":[{"start":0,"end":2},{"start":1,"end":3}]}"#,
        ]);
        assert!(matches!(
            ingest(f.path()),
            Err(DataError::InvalidSpan { line: 1, .. })
        ));
        let f = write_temp(&[
            r#"{"id":"r1","prefix":"","suffix":"","prediction":"a","truth":"abcd","annotations":[{"start":0,"end":2},{"start":2,"end":4}]}"#,
        ]);
        assert!(ingest(f.path()).is_ok());
    }

    #[test]
    fn round_trip_preserves_lines() {
        let lines = [
            r#"{"id":"r1","prefix":"p","suffix":"s","prediction":"a<|cursor|>","truth":"ab"}"#,
            r#"{"id":"r2","prefix":"","suffix":"","prediction":"x","truth":"y","user_final":"z","annotations":[{"start":0,"end":1}]}"#,
        ];
        let f = write_temp(&lines);
        let records = read_benchmark(f.path()).unwrap();
        let out = records_to_jsonl(&records);
        let reparsed: Vec<serde_json::Value> = out
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        let original: Vec<serde_json::Value> = lines
            .iter()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(reparsed, original);
    }

    #[test]
    fn classification_partitions() {
        let records = vec![
            record("a", "same", "same"),
            record("b", "foo(a, b)", "foo(a, c)"),
            record("c", "x", "x"),
        ];
        let split = build_dataset(&records, (1, 1), 0).unwrap();
        assert_eq!(split.hc.len(), 1);
        assert_eq!(split.pc.len(), 1);
        let all = build_dataset(&records, (2, 1), 0).unwrap();
        assert_eq!(all.hc.len(), 2);
        assert_eq!(all.pc.len(), 1);
        for r in &all.hc {
            assert_eq!(r.prediction, r.truth);
        }
        for r in &all.pc {
            assert!(cursor::contains_cursor(&r.truth));
        }
    }

    #[test]
    fn pc_truth_rewritten_with_single_sentinel() {
        let records = vec![record("b", "foo(a, b)", "foo(a, c)")];
        let split = build_dataset(&records, (0, 1), 0).unwrap();
        assert_eq!(split.pc[0].truth, format!("foo(a, {CURSOR_CHAR})"));
    }

    #[test]
    fn ratio_exact_availability() {
        let mut records = Vec::new();
        for i in 0..30 {
            records.push(record(&format!("h{i}"), "same", "same"));
        }
        for i in 0..60 {
            records.push(record(&format!("p{i}"), &format!("v{i}"), "w"));
        }
        let split = build_dataset(&records, (1, 2), 42).unwrap();
        assert_eq!(split.hc.len(), 30);
        assert_eq!(split.pc.len(), 60);
    }

    #[test]
    fn insufficient_records_error_reports_counts() {
        let records = vec![record("a", "same", "same")];
        match build_dataset(&records, (1, 2), 0) {
            Err(DataError::InsufficientRecords {
                hc_available: 1,
                pc_available: 0,
                ..
            }) => {}
            other => panic!("expected insufficiency, got {other:?}"),
        }
    }

    #[test]
    fn zero_ratio_is_rejected() {
        assert!(matches!(
            build_dataset(&[record("a", "x", "x")], (0, 0), 0),
            Err(DataError::InvalidRatio)
        ));
    }

    #[test]
    fn seeded_determinism() {
        let records: Vec<CompletionRecord> = (0..40)
            .map(|i| {
                if i % 2 == 0 {
                    record(&format!("h{i}"), "same", "same")
                } else {
                    record(&format!("p{i}"), &format!("v{i}"), "w")
                }
            })
            .collect();
        let a = build_dataset(&records, (1, 1), 7).unwrap();
        let b = build_dataset(&records, (1, 1), 7).unwrap();
        assert_eq!(records_to_jsonl(&a.hc), records_to_jsonl(&b.hc));
        assert_eq!(records_to_jsonl(&a.pc), records_to_jsonl(&b.pc));
        let c = build_dataset(&records, (1, 1), 8).unwrap();
        assert_ne!(records_to_jsonl(&a.hc), records_to_jsonl(&c.hc));
    }
}
