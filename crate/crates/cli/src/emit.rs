//! Result persistence: the CSV row contract, the JSON run summary, and the
//! content-addressed cache that makes re-runs bit-identical.

use crate::scenario::{CliError, Tolerances};
use fockmf_core::C64;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Exact column contract of every emitted CSV.
pub const CSV_HEADER: &str = "scenario_hash,command,epsilon,t,observable,lhs_re,lhs_im,rhs_re,rhs_im,abs_error,envelope_A,envelope_B,envelope_C,wall_ms";

/// One grid point of an experiment.
///
/// For the `dyson` command the `epsilon` column carries the truncation order
/// `M` instead (the series is classical); for `bounds` it carries the
/// instance index.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub scenario_hash: String,
    pub command: String,
    pub epsilon: f64,
    pub t: f64,
    pub observable: String,
    pub lhs: C64,
    pub rhs: C64,
    pub abs_error: f64,
    pub env_a: f64,
    pub env_b: f64,
    pub env_c: f64,
    pub wall_ms: u64,
}

impl ResultRow {
    fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.scenario_hash,
            self.command,
            self.epsilon,
            self.t,
            self.observable,
            self.lhs.re,
            self.lhs.im,
            self.rhs.re,
            self.rhs.im,
            self.abs_error,
            self.env_a,
            self.env_b,
            self.env_c,
            self.wall_ms
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaAudit {
    pub eps: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitEntry {
    pub observable: String,
    pub t: f64,
    /// Fitted log-log decay order; `null` means every error sat at the
    /// numerical floor ("exact").
    pub order: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario_hash: String,
    pub command: String,
    /// `null` when the radius is unbounded (zero interaction).
    pub t0: Option<f64>,
    pub lambda_mu: f64,
    pub lambda_h0: Vec<LambdaAudit>,
    pub tolerances: Tolerances,
    pub fitted_orders: Vec<FitEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violations: Option<usize>,
    pub cache_hit: bool,
    pub rows: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
pub struct EmitOutcome {
    pub cache_hit: bool,
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
}

pub fn render_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

pub fn cache_file(cache_root: &Path, hash: &str, command: &str) -> PathBuf {
    cache_root.join(hash).join(format!("{command}.csv"))
}

/// Cached CSV for this scenario and command, if any.
pub fn read_cache(cache_root: &Path, hash: &str, command: &str) -> Option<String> {
    std::fs::read_to_string(cache_file(cache_root, hash, command)).ok()
}

/// Write the CSV (from rows or verbatim from cache), mirror it into the
/// cache, and write the JSON summary next to it.
pub fn emit(
    rows: &[ResultRow],
    cached_csv: Option<String>,
    summary: &RunSummary,
    out_dir: &Path,
    format: Format,
    cache_root: &Path,
) -> Result<EmitOutcome, CliError> {
    if rows.is_empty() && cached_csv.is_none() {
        return Err(CliError::EmptyRun);
    }
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(format!("{}.csv", summary.command));
    let from_cache = cached_csv.is_some();
    let csv = match cached_csv {
        Some(text) => text,
        None => render_csv(rows),
    };
    std::fs::write(&csv_path, &csv)?;

    if !from_cache {
        let cache_path = cache_file(cache_root, &summary.scenario_hash, &summary.command);
        if let Some(parent) = cache_path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&cache_path, &csv)?;
    }

    if format == Format::Json && !rows.is_empty() {
        let json_rows: Vec<serde_json::Value> = rows
            .iter()
            .map(|r| {
                serde_json::json!({
                    "scenario_hash": r.scenario_hash,
                    "command": r.command,
                    "epsilon": r.epsilon,
                    "t": r.t,
                    "observable": r.observable,
                    "lhs": [r.lhs.re, r.lhs.im],
                    "rhs": [r.rhs.re, r.rhs.im],
                    "abs_error": r.abs_error,
                    "envelope_A": finite_or_null(r.env_a),
                    "envelope_B": finite_or_null(r.env_b),
                    "envelope_C": finite_or_null(r.env_c),
                    "wall_ms": r.wall_ms,
                })
            })
            .collect();
        let rows_path = out_dir.join(format!("{}_rows.json", summary.command));
        std::fs::write(&rows_path, serde_json::to_string_pretty(&json_rows)?)?;
    }

    let summary_path = out_dir.join(format!("{}_summary.json", summary.command));
    std::fs::write(&summary_path, serde_json::to_string_pretty(summary)?)?;
    Ok(EmitOutcome {
        cache_hit: from_cache,
        csv_path,
        summary_path,
    })
}

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else {
        serde_json::Value::Null
    }
}
