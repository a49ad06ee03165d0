//! Run reports: a machine-readable JSON body, an aligned text summary, and an
//! optional CSV metric table. Report bodies are deterministic for a given
//! config and seed; the wall-clock field is the only varying part.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use hrfna::{AmortizationReport, Counters, ErrorBudget, Tape};

use crate::config::RunConfig;

/// One metric row: a workload evaluated under one arithmetic system against a
/// named oracle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricRow {
    pub workload: String,
    pub system: String,
    pub oracle: String,
    pub n: usize,
    pub rms: f64,
    /// `rms / max(1, max |reference|)`: the scale-free headline number.
    pub rms_scaled: f64,
    pub scale: f64,
    pub max_abs: f64,
    pub max_rel: f64,
    /// Hybrid arithmetic ops spent producing this row (0 for baselines).
    pub ops: u64,
    pub normalizations: u64,
    pub normalizations_true: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BudgetSummary {
    /// Exact accumulated bound, as a dyadic literal.
    pub total: String,
    pub total_approx: f64,
    pub events: u64,
    pub normalizations: u64,
    pub lossy_syncs: u64,
}

impl BudgetSummary {
    pub fn from_budget(budget: &ErrorBudget, counters: &Counters) -> Self {
        BudgetSummary {
            total: budget.total().to_string(),
            total_approx: budget.total().to_f64(),
            events: budget.events().len() as u64,
            normalizations: counters.normalizations,
            lossy_syncs: counters.syncs_lossy,
        }
    }
}

/// Self-contained run report: config echo, metric rows, budget and telemetry
/// aggregates, and the wall clock (excluded from determinism comparisons).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config: RunConfig,
    pub rows: Vec<MetricRow>,
    pub budget: BudgetSummary,
    pub counters: Counters,
    pub amortization: AmortizationReport,
    pub wall_clock_ms: u64,
}

impl RunReport {
    pub fn new(command: &str, config: &RunConfig, rows: Vec<MetricRow>, tape: &Tape) -> Self {
        RunReport {
            command: command.to_string(),
            config: config.clone(),
            rows,
            budget: BudgetSummary::from_budget(&tape.budget, &tape.counters),
            counters: tape.counters.clone(),
            amortization: hrfna::amortization_report(&tape.counters),
            wall_clock_ms: 0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Writes atomically: temp file in the target directory, then rename.
pub fn write_report(report: &RunReport, path: &str) -> Result<()> {
    let target = Path::new(path);
    let dir = target.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(".{}.tmp", target.file_name().unwrap().to_string_lossy())),
        None => Path::new(&format!(".{path}.tmp")).to_path_buf(),
    };
    std::fs::write(&tmp, report.to_json()).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, target).with_context(|| format!("renaming into {path}"))?;
    Ok(())
}

pub fn render_summary(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "== {} ==", report.command);
    let _ = writeln!(
        out,
        "{:<34} {:>9} {:>12} {:>12} {:>12} {:>10} {:>7}",
        "workload/system", "oracle", "rms_scaled", "rms", "max_rel", "norms", "ops"
    );
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{:<34} {:>9} {:>12.3e} {:>12.3e} {:>12.3e} {:>10} {:>7}",
            format!("{}/{}", row.workload, row.system),
            row.oracle,
            row.rms_scaled,
            row.rms,
            row.max_rel,
            row.normalizations,
            row.ops
        );
    }
    let _ = writeln!(
        out,
        "budget: {} (~{:.3e}) over {} events ({} normalizations, {} lossy syncs)",
        report.budget.total,
        report.budget.total_approx,
        report.budget.events,
        report.budget.normalizations,
        report.budget.lossy_syncs
    );
    let a = &report.amortization;
    let _ = writeln!(
        out,
        "amortization: {:.1} ops/normalization ({:.1} per audited-true event){}; {:.4} reconstructions/op",
        a.ops_per_normalization,
        a.ops_per_true_normalization,
        if a.no_events { " [no events]" } else { "" },
        a.reconstructions_per_op
    );
    out
}

/// Quotes a CSV field when it carries a delimiter or quote.
fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

pub fn render_csv(report: &RunReport) -> String {
    let mut out = String::from(
        "workload,system,oracle,n,rms,rms_scaled,scale,max_abs,max_rel,ops,normalizations,normalizations_true\n",
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:e},{:e},{:e},{:e},{:e},{},{},{}",
            csv_field(&r.workload),
            csv_field(&r.system),
            csv_field(&r.oracle),
            r.n,
            r.rms,
            r.rms_scaled,
            r.scale,
            r.max_abs,
            r.max_rel,
            r.ops,
            r.normalizations,
            r.normalizations_true
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_fields_with_delimiters() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn csv_rows_with_comma_labels_stay_rectangular() {
        let row = MetricRow {
            workload: "dotprod[len=1024,dist=moderate]".into(),
            system: "hrfna".into(),
            oracle: "exact".into(),
            n: 4,
            rms: 0.0,
            rms_scaled: 0.0,
            scale: 1.0,
            max_abs: 0.0,
            max_rel: 0.0,
            ops: 4096,
            normalizations: 0,
            normalizations_true: 0,
        };
        let report = RunReport::new("dotprod", &RunConfig::default(), vec![row], &Tape::new());
        let csv = render_csv(&report);
        let data_line = csv.lines().nth(1).unwrap();
        assert!(data_line.starts_with("\"dotprod[len=1024,dist=moderate]\","));
        // Splitting outside quotes yields the same column count as the header.
        let header_cols = csv.lines().next().unwrap().split(',').count();
        let mut cols = 0;
        let mut in_quotes = false;
        for c in data_line.chars() {
            match c {
                '"' => in_quotes = !in_quotes,
                ',' if !in_quotes => cols += 1,
                _ => {}
            }
        }
        assert_eq!(cols + 1, header_cols);
    }
}

/// Builds a row from scaled metrics.
pub fn metric_row(
    workload: &str,
    system: &str,
    oracle: &str,
    scaled: &hrfna::ScaledMetrics,
    ops: u64,
    normalizations: u64,
    normalizations_true: u64,
) -> MetricRow {
    MetricRow {
        workload: workload.to_string(),
        system: system.to_string(),
        oracle: oracle.to_string(),
        n: scaled.metrics.n,
        rms: scaled.metrics.rms,
        rms_scaled: scaled.rms_scaled,
        scale: scaled.scale,
        max_abs: scaled.metrics.max_abs,
        max_rel: scaled.metrics.max_rel,
        ops,
        normalizations,
        normalizations_true,
    }
}

/// Comparison helper for determinism checks: the report body with the wall
/// clock zeroed.
pub fn body_for_comparison(json: &str) -> Result<String> {
    let mut report: RunReport = serde_json::from_str(json).context("parsing report")?;
    report.wall_clock_ms = 0;
    Ok(report.to_json())
}
