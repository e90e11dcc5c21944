//! Node correctness, CSI diagnostics and report serialization.

use std::collections::HashSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::graph::{Graph, Permutation};
use crate::inconsistency;
use crate::matcher::{MatchConfig, MatchResult};
use crate::transport::{MarginalMode, StepSchedule};

/// A correspondence keyed by external node labels.
pub type LabelPairs = Vec<(String, String)>;

/// `|pred ∩ truth| / |truth|`, comparing pairs by label.
pub fn node_correctness(pred: &[(String, String)], truth: &[(String, String)]) -> Result<f64> {
    let (hits, total) = correct_count(pred, truth)?;
    Ok(hits as f64 / total as f64)
}

fn correct_count(pred: &[(String, String)], truth: &[(String, String)]) -> Result<(usize, usize)> {
    if truth.is_empty() {
        return Err(Error::EmptyTruth);
    }
    let mut sources = HashSet::new();
    for (s, _) in truth {
        if !sources.insert(s.as_str()) {
            return Err(Error::DuplicateSource(s.clone()));
        }
    }
    let pred: HashSet<(&str, &str)> = pred.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let hits = truth
        .iter()
        .filter(|(a, b)| pred.contains(&(a.as_str(), b.as_str())))
        .count();
    Ok((hits, truth.len()))
}

/// Reads a correspondence file. Accepts whitespace-separated `u v` lines
/// (`#` comments allowed) or CSV with a `source,target[,score]` header.
pub fn parse_correspondence(text: &str) -> Result<LabelPairs> {
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'));
    if first.is_some_and(|l| l.starts_with("source,target")) {
        return parse_csv_correspondence(text);
    }
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [u, v] => out.push((u.to_string(), v.to_string())),
            _ => {
                return Err(Error::parse(
                    lineno + 1,
                    format!("expected `u v`, found {} tokens", tokens.len()),
                ))
            }
        }
    }
    Ok(out)
}

fn parse_csv_correspondence(text: &str) -> Result<LabelPairs> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        match (record.get(0), record.get(1)) {
            (Some(s), Some(t)) => out.push((s.to_string(), t.to_string())),
            _ => return Err(Error::parse(line, "expected at least two columns")),
        }
    }
    Ok(out)
}

/// Writes `u v` lines.
pub fn format_correspondence(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(a, b)| format!("{a} {b}\n")).collect()
}

/// Converts a label correspondence into an index permutation between two
/// graphs. Every node of `g_s` must appear exactly once.
pub fn truth_permutation(
    g_s: &Graph,
    g_t: &Graph,
    truth: &[(String, String)],
) -> Result<Permutation> {
    let mut map = vec![usize::MAX; g_s.n()];
    for (a, b) in truth {
        let i = g_s
            .index_of(a)
            .ok_or_else(|| Error::InvalidPermutation(format!("unknown source label `{a}`")))?;
        let j = g_t
            .index_of(b)
            .ok_or_else(|| Error::InvalidPermutation(format!("unknown target label `{b}`")))?;
        if map[i] != usize::MAX {
            return Err(Error::DuplicateSource(a.clone()));
        }
        map[i] = j;
    }
    if g_s.n() != g_t.n() {
        return Err(Error::DimensionMismatch {
            expected: g_s.n(),
            found: g_t.n(),
        });
    }
    Permutation::new(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsiStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl CsiStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Some(Self { min, mean, max })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// `None` without a ground truth.
    pub nc: Option<f64>,
    pub matched_count: usize,
    pub truth_count: usize,
    /// CSI of the final plan under the truth. Only computed when the truth is
    /// a full bijection between equal-size graphs.
    pub csi_stats: Option<CsiStats>,
    pub objective_trace: Vec<f64>,
    pub displacement_trace: Vec<f64>,
}

impl EvalReport {
    pub fn new(
        result: &MatchResult,
        g_s: &Graph,
        g_t: &Graph,
        truth: Option<&[(String, String)]>,
    ) -> Result<Self> {
        let mut report = Self {
            nc: None,
            matched_count: 0,
            truth_count: 0,
            csi_stats: None,
            objective_trace: result.objective_trace.clone(),
            displacement_trace: result.displacement_trace.clone(),
        };
        if let Some(truth) = truth {
            let (hits, total) = correct_count(&result.label_pairs(), truth)?;
            report.nc = Some(hits as f64 / total as f64);
            report.matched_count = hits;
            report.truth_count = total;
            if result.dummies_added == 0 && truth.len() == g_s.n() {
                if let Ok(perm) = truth_permutation(g_s, g_t, truth) {
                    let values = inconsistency::csi(&result.dissimilarity, &result.plan, &perm)?;
                    report.csi_stats = CsiStats::from_values(values.as_slice().unwrap_or(&[]));
                }
            }
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::UnsupportedFormat(s.to_string())),
        }
    }
}

/// A float written with 17 significant digits, which round-trips exactly.
/// Non-finite values become `null`.
pub fn float_token(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn raw(x: f64) -> Box<RawValue> {
    RawValue::from_string(float_token(x)).expect("float token is valid JSON")
}

#[derive(Serialize)]
struct JsonConfig {
    t: Box<RawValue>,
    k: usize,
    margin: Box<RawValue>,
    step: &'static str,
    eta_target: Option<Box<RawValue>>,
    eta: Box<RawValue>,
    iters: usize,
    sinkhorn_tol: Box<RawValue>,
    sinkhorn_sweeps: usize,
    stop_tol: Box<RawValue>,
    init: String,
    extraction: crate::matcher::Extraction,
    marginals: MarginalMode,
}

#[derive(Serialize)]
struct JsonTimings {
    wavelet: Box<RawValue>,
    solve: Box<RawValue>,
}

#[derive(Serialize)]
struct JsonPadding {
    dummies_added: usize,
}

#[derive(Serialize)]
struct JsonCsi {
    min: Box<RawValue>,
    mean: Box<RawValue>,
    max: Box<RawValue>,
}

#[derive(Serialize)]
struct JsonReport {
    config: JsonConfig,
    nc: Option<Box<RawValue>>,
    correspondence: Vec<[String; 2]>,
    objective_trace: Vec<Box<RawValue>>,
    displacement_trace: Vec<Box<RawValue>>,
    marginal_error: Box<RawValue>,
    iterations: usize,
    timings_ms: JsonTimings,
    padding: JsonPadding,
    csi_stats: Option<JsonCsi>,
}

/// The parts of a JSON report needed to check or reuse a run.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ReportSummary {
    pub nc: Option<f64>,
    pub correspondence: Vec<(String, String)>,
    pub objective_trace: Vec<Option<f64>>,
    pub iterations: usize,
    pub marginal_error: Option<f64>,
}

pub fn parse_report(bytes: &[u8]) -> Result<ReportSummary> {
    serde_json::from_slice(bytes).map_err(|e| Error::parse(e.line(), e.to_string()))
}

/// Serializes a run. JSON carries the whole report; CSV carries the
/// correspondence as `source,target,score` rows.
pub fn serialize_report(
    cfg: &MatchConfig,
    result: &MatchResult,
    report: &EvalReport,
    format: Format,
) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let (step, eta_target) = match cfg.step {
                StepSchedule::Fixed(_) => ("fixed", None),
                StepSchedule::AutoScaled { target } => ("auto", Some(raw(target))),
            };
            let doc = JsonReport {
                config: JsonConfig {
                    t: raw(cfg.wavelet.t),
                    k: cfg.wavelet.order,
                    margin: raw(cfg.wavelet.margin),
                    step,
                    eta_target,
                    eta: raw(result.eta),
                    iters: cfg.iters,
                    sinkhorn_tol: raw(cfg.sinkhorn_tol),
                    sinkhorn_sweeps: cfg.sinkhorn_sweeps,
                    stop_tol: raw(cfg.stop_tol),
                    init: cfg.init.describe(),
                    extraction: cfg.extraction,
                    marginals: cfg.marginal_mode,
                },
                nc: report.nc.map(raw),
                correspondence: result
                    .correspondence
                    .iter()
                    .map(|p| [p.source_label.clone(), p.target_label.clone()])
                    .collect(),
                objective_trace: report.objective_trace.iter().map(|&x| raw(x)).collect(),
                displacement_trace: report.displacement_trace.iter().map(|&x| raw(x)).collect(),
                marginal_error: raw(result.marginal_error),
                iterations: result.iterations_run,
                timings_ms: JsonTimings {
                    wavelet: raw(result.timings.wavelet_ms),
                    solve: raw(result.timings.solve_ms),
                },
                padding: JsonPadding {
                    dummies_added: result.dummies_added,
                },
                csi_stats: report.csi_stats.map(|s| JsonCsi {
                    min: raw(s.min),
                    mean: raw(s.mean),
                    max: raw(s.max),
                }),
            };
            let mut bytes = serde_json::to_vec_pretty(&doc)
                .map_err(|e| Error::InvalidParameter(format!("serialization failed: {e}")))?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Error::InvalidParameter(format!("csv write failed: {e}"));
            writer
                .write_record(["source", "target", "score"])
                .map_err(csv_err)?;
            for p in &result.correspondence {
                writer
                    .write_record([
                        p.source_label.as_str(),
                        p.target_label.as_str(),
                        &float_token(p.score),
                    ])
                    .map_err(csv_err)?;
            }
            writer
                .into_inner()
                .map_err(|e| Error::InvalidParameter(format!("csv write failed: {e}")))
        }
    }
}
