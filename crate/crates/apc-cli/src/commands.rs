//! Subcommand implementations. Each reads declared inputs, runs the
//! corresponding library operation and emits CSV or JSONL with fixed
//! numeric formatting.

use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use apc_core::align::{self, SegmentKind, TokenMode, TokenSeq};
use apc_core::costmodel::{verify_theorem, CostParams};
use apc_core::cursor;
use apc_core::data;
use apc_core::lm::NgramModel;
use apc_core::metrics;
use apc_core::reward::{reward_breakdown, RewardConfig};
use apc_core::sim::{self, ThresholdKind};

use crate::output::{emit, fmt6, write_atomic};
use crate::CliError;

/// A bare prediction/truth pair, the input of `align` and `reward`.
#[derive(Deserialize)]
struct PairRecord {
    pred: String,
    truth: String,
}

fn read_pairs(path: &Path) -> Result<Vec<PairRecord>, CliError> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let mut pair: PairRecord = serde_json::from_str(&line)
            .map_err(|e| CliError::Data(format!("line {}: {e}", idx + 1)))?;
        pair.pred = cursor::normalize(&pair.pred);
        pair.truth = cursor::normalize(&pair.truth);
        pairs.push(pair);
    }
    Ok(pairs)
}

fn parse_ratio(text: &str) -> Result<(usize, usize), CliError> {
    let usage = || {
        CliError::Usage(format!(
            "invalid ratio {text:?}: expected two counts like 1:2"
        ))
    };
    let (h, p) = text.split_once(':').ok_or_else(usage)?;
    Ok((
        h.trim().parse().map_err(|_| usage())?,
        p.trim().parse().map_err(|_| usage())?,
    ))
}

fn parse_thresholds(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim().parse::<f64>().map_err(|_| {
                CliError::Usage(format!("invalid threshold {:?} in {text:?}", part.trim()))
            })
        })
        .collect()
}

#[derive(Serialize)]
struct SegmentOut {
    kind: SegmentKind,
    text: String,
}

#[derive(Serialize)]
struct AlignOut {
    pc_instance: String,
    levenshtein: usize,
    lcs: usize,
    segments: Vec<SegmentOut>,
}

pub fn align(input: &Path, output: Option<&Path>, mode: TokenMode) -> Result<(), CliError> {
    let pairs = read_pairs(input)?;
    let mut lines = String::new();
    for (idx, pair) in pairs.iter().enumerate() {
        let pred = TokenSeq::tokenize(&pair.pred, mode);
        let truth = TokenSeq::tokenize(&pair.truth, mode);
        let pc = align::make_pc_instance(&pred, &truth)
            .map_err(|e| CliError::Data(format!("line {}: {e}", idx + 1)))?;
        let row = AlignOut {
            pc_instance: cursor::denormalize(&pc.concat()),
            levenshtein: align::levenshtein(&pred, &truth),
            lcs: align::lcs_len(&pred, &truth),
            segments: align::diff_segments(&pred, &truth)
                .into_iter()
                .map(|s| SegmentOut {
                    kind: s.kind,
                    text: cursor::denormalize(&s.text()),
                })
                .collect(),
        };
        lines.push_str(&serde_json::to_string(&row).map_err(|e| CliError::Data(e.to_string()))?);
        lines.push('\n');
    }
    emit(output, &lines)
}

pub fn build_dataset(
    input: &Path,
    out_dir: &Path,
    seed: u64,
    ratio: &str,
) -> Result<(), CliError> {
    let ratio = parse_ratio(ratio)?;
    let records = data::ingest(input)?;
    let split = data::build_dataset(&records, ratio, seed)?;
    fs::create_dir_all(out_dir)?;
    write_atomic(&out_dir.join("hc.jsonl"), &data::records_to_jsonl(&split.hc))?;
    write_atomic(&out_dir.join("pc.jsonl"), &data::records_to_jsonl(&split.pc))?;
    eprintln!(
        "wrote {} hc and {} pc records to {}",
        split.hc.len(),
        split.pc.len(),
        out_dir.display()
    );
    Ok(())
}

pub fn reward(
    input: &Path,
    output: Option<&Path>,
    alpha_lazy: f64,
    alpha_error: f64,
    slope: f64,
    floor: f64,
) -> Result<(), CliError> {
    let cfg = RewardConfig::new(alpha_lazy, alpha_error, slope, floor)?;
    let pairs = read_pairs(input)?;
    let mut lines = String::new();
    for (idx, pair) in pairs.iter().enumerate() {
        let b = reward_breakdown(&pair.pred, &pair.truth, &cfg)
            .map_err(|e| match CliError::from(e) {
                CliError::Data(m) => CliError::Data(format!("line {}: {m}", idx + 1)),
                other => other,
            })?;
        lines.push_str(&format!(
            "{{\"reward\":{},\"case\":\"{}\",\"es\":{},\"c_model\":{},\"c_gt\":{}}}\n",
            fmt6(b.reward),
            b.case.as_str(),
            fmt6(b.es),
            b.counts.c_model,
            b.counts.c_gt,
        ));
    }
    emit(output, &lines)
}

pub fn eval(
    input: &Path,
    output: Option<&Path>,
    per_record: Option<&Path>,
) -> Result<(), CliError> {
    let records = data::read_benchmark(input)?;
    if records.is_empty() {
        return Err(CliError::Data("empty benchmark".to_string()));
    }
    let scores: Vec<metrics::RecordScore> = records
        .iter()
        .map(|r| metrics::score_record(&r.prediction, &r.truth, r.user_final.as_deref()))
        .collect();
    let report = metrics::aggregate(&scores)?;

    if let Some(path) = per_record {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["id", "has_placeholder", "em", "es", "cost"])?;
        for (record, score) in records.iter().zip(&scores) {
            wtr.write_record([
                record.id.clone(),
                score.has_placeholder.to_string(),
                fmt6(score.em),
                fmt6(score.es),
                fmt6(score.cost),
            ])?;
        }
        let csv_text = String::from_utf8(wtr.into_inner().map_err(|e| {
            CliError::Data(e.to_string())
        })?)
        .expect("csv output is utf-8");
        write_atomic(path, &csv_text)?;
    }

    let line = format!(
        "{{\"n\":{},\"hcr\":{},\"pcr\":{},\"em\":{},\"es\":{},\"precision\":{},\"f1\":{},\"cost\":{}}}\n",
        report.n,
        fmt6(report.hcr),
        fmt6(report.pcr),
        fmt6(report.em),
        fmt6(report.es),
        fmt6(report.precision),
        fmt6(report.f1),
        fmt6(report.cost),
    );
    emit(output, &line)
}

pub fn simulate(
    kind: ThresholdKind,
    thresholds: &str,
    model: &Path,
    bench: &Path,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let thresholds = parse_thresholds(thresholds)?;
    let model = NgramModel::load(model)?;
    let benchmark = data::read_benchmark(bench)?;
    let rows = sim::sweep(&benchmark, &model, &thresholds, kind)?;

    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["threshold", "pcr", "cost", "em", "es"])?;
    for row in rows {
        wtr.write_record([
            fmt6(row.threshold),
            fmt6(row.pcr),
            fmt6(row.cost),
            fmt6(row.em),
            fmt6(row.es),
        ])?;
    }
    let text = String::from_utf8(wtr.into_inner().map_err(|e| CliError::Data(e.to_string()))?)
        .expect("csv output is utf-8");
    emit(out, &text)
}

pub fn entropy_profile(model: &Path, bench: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let model = NgramModel::load(model)?;
    let benchmark = data::read_benchmark(bench)?;
    let points = sim::cumulative_entropy(&benchmark, &model)?;

    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["n", "pc_mean", "hc_mean"])?;
    for p in points {
        wtr.write_record([
            p.n.to_string(),
            p.pc_mean.map(fmt6).unwrap_or_default(),
            p.hc_mean.map(fmt6).unwrap_or_default(),
        ])?;
    }
    let text = String::from_utf8(wtr.into_inner().map_err(|e| CliError::Data(e.to_string()))?)
        .expect("csv output is utf-8");
    emit(out, &text)
}

pub fn verify_theory(
    c_hc: f64,
    c_pc: f64,
    k_max: usize,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if k_max < 1 {
        return Err(CliError::Usage("k-max must be at least 1".to_string()));
    }
    let params = CostParams::new(c_hc, c_pc)?;
    let rows = verify_theorem(k_max, &params);

    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["k", "h", "h_star", "e_hc", "e_pc", "winner"])?;
    for row in &rows {
        wtr.write_record([
            row.k.to_string(),
            fmt6(row.entropy),
            fmt6(row.h_star),
            fmt6(row.e_hc),
            fmt6(row.e_pc),
            row.winner.as_str().to_string(),
        ])?;
    }
    let text = String::from_utf8(wtr.into_inner().map_err(|e| CliError::Data(e.to_string()))?)
        .expect("csv output is utf-8");
    emit(out, &text)?;

    if let Some(bad) = rows.iter().find(|r| !r.sign_law_holds()) {
        return Err(CliError::Invariant(format!(
            "sign law violated at K={}: e_hc={}, e_pc={}, h={}, h_star={}",
            bad.k, bad.e_hc, bad.e_pc, bad.entropy, bad.h_star
        )));
    }
    Ok(())
}

pub fn train_lm(
    corpus: &Path,
    order: usize,
    smoothing_k: f64,
    mode: TokenMode,
    out: &Path,
) -> Result<(), CliError> {
    if order < 1 {
        return Err(CliError::Usage("order must be at least 1".to_string()));
    }
    if smoothing_k <= 0.0 || !smoothing_k.is_finite() {
        return Err(CliError::Usage("smoothing-k must be positive".to_string()));
    }
    let text = fs::read_to_string(corpus)?;
    let model = NgramModel::train(&text, order, smoothing_k, mode)?;
    write_atomic(out, &model.to_json())?;
    eprintln!(
        "trained order-{} {} model over {} vocabulary units",
        model.order(),
        model.mode(),
        model.vocab().len()
    );
    Ok(())
}
