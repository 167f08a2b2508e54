//! Aligned-column text output. JSON goes straight through serde.

use std::fmt::Write;

use serde::Serialize;
use sysrisk_core::CheckStatus;

use crate::commands::{AllocateReport, CompareReport, RiskReport, VerifyReport};
use crate::config::OutputFormat;
use crate::error::{CliError, CliResult};

/// Fixed-width number formatting so text output is stable across runs.
pub fn num(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    if v == 0.0 || (1e-4..1e9).contains(&v.abs()) {
        format!("{v:.12}")
    } else {
        format!("{v:.12e}")
    }
}

fn kv(out: &mut String, rows: &[(&str, String)]) {
    let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
}

fn table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
    };
    let _ = writeln!(out, "{}", line(header));
    for r in rows {
        let _ = writeln!(out, "{}", line(r));
    }
}

pub fn json<T: Serialize + ?Sized>(report: &T) -> CliResult<String> {
    serde_json::to_string_pretty(report)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Numeric(format!("cannot serialize report: {e}")))
}

pub trait Render: Serialize {
    fn text(&self) -> String;

    fn render(&self, format: OutputFormat) -> CliResult<String> {
        match format {
            OutputFormat::Text => Ok(self.text()),
            OutputFormat::Json => json(self),
        }
    }
}

impl Render for RiskReport {
    fn text(&self) -> String {
        let mut out = String::new();
        kv(
            &mut out,
            &[
                ("measure", self.measure.clone()),
                ("formula", self.formula.clone()),
                ("firms", self.firms.to_string()),
                ("scenarios", self.scenarios.to_string()),
                ("value", num(self.value)),
            ],
        );
        out
    }
}

impl Render for AllocateReport {
    fn text(&self) -> String {
        let r = &self.report;
        let mut out = String::new();
        kv(&mut out, &[("measure", self.measure.clone()), ("method", r.method.to_string())]);
        out.push('\n');
        let rows: Vec<Vec<String>> =
            r.per_firm.iter().enumerate().map(|(i, v)| vec![format!("firm_{}", i + 1), num(*v)]).collect();
        table(&mut out, &["firm".into(), "capital".into()], &rows);
        out.push('\n');
        kv(
            &mut out,
            &[
                ("total", num(r.total)),
                ("risk", num(r.risk)),
                ("full_allocation_gap", num(r.full_allocation_gap)),
                ("diagonal", num(r.diagonal)),
                ("diagonal_gap", num(r.diagonal_gap)),
                ("additivity_gap", num(r.additivity_gap)),
                (
                    "full_allocation",
                    format!("{} (tolerance {})", if self.full_allocation { "holds" } else { "fails" }, num(self.tolerance)),
                ),
            ],
        );
        if let Some(d) = &self.inject {
            out.push('\n');
            let n = r.per_firm.len();
            let mut header = vec!["scenario".to_string()];
            header.extend((1..=n).map(|i| format!("Y_{i}")));
            let rows: Vec<Vec<String>> = d
                .allocation
                .iter()
                .enumerate()
                .map(|(k, row)| std::iter::once((k + 1).to_string()).chain(row.iter().map(|v| num(*v))).collect())
                .collect();
            table(&mut out, &header, &rows);
            out.push('\n');
            let sums: Vec<(String, String)> =
                d.group_sums.iter().enumerate().map(|(j, v)| (format!("group_{}", j + 1), num(*v))).collect();
            let mut rows: Vec<(&str, String)> = sums.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
            rows.push(("expected_loss", num(d.expected_loss)));
            kv(&mut out, &rows);
        }
        out
    }
}

impl Render for VerifyReport {
    fn text(&self) -> String {
        let mut out = String::new();
        kv(
            &mut out,
            &[
                ("measure", self.measure.clone()),
                ("seed", self.seed.to_string()),
                ("samples", self.samples.to_string()),
            ],
        );
        out.push('\n');
        let rows: Vec<Vec<String>> = self
            .checks
            .iter()
            .map(|c| {
                let o = &c.outcome;
                let status = match o.status {
                    CheckStatus::Pass => "PASS",
                    CheckStatus::Fail => "FAIL",
                    CheckStatus::Skipped => "SKIP",
                };
                vec![
                    status.into(),
                    if c.required { "required" } else { "info" }.into(),
                    o.name.clone(),
                    num(o.tolerance),
                    num(o.worst_margin),
                    o.samples.to_string(),
                ]
            })
            .collect();
        let header = ["status", "role", "check", "tolerance", "worst_margin", "samples"].map(String::from);
        table(&mut out, &header, &rows);
        let details: Vec<String> = self
            .checks
            .iter()
            .filter_map(|c| {
                let o = &c.outcome;
                let text = match o.status {
                    CheckStatus::Fail => o.counterexample.clone().or_else(|| o.note.clone()),
                    CheckStatus::Skipped => o.note.clone(),
                    CheckStatus::Pass => None,
                }?;
                Some(format!("{} ({}): {text}", o.name, o.description))
            })
            .collect();
        if !details.is_empty() {
            out.push('\n');
            for d in details {
                let _ = writeln!(out, "{d}");
            }
        }
        out.push('\n');
        let _ = writeln!(out, "{}", if self.passed { "all required checks passed" } else { "required checks FAILED" });
        out
    }
}

impl Render for CompareReport {
    fn text(&self) -> String {
        let mut out = String::new();
        kv(
            &mut out,
            &[
                ("composed", self.composed.clone()),
                ("inject", self.inject.clone()),
                ("composed_value", num(self.composed_value)),
                ("inject_value", num(self.inject_value)),
                ("difference", num(self.difference)),
                ("agree", format!("{} (tolerance {})", self.agree, num(self.tolerance))),
            ],
        );
        if let Some([a, b]) = &self.allocations {
            out.push('\n');
            let rows: Vec<Vec<String>> = a
                .iter()
                .zip(b)
                .enumerate()
                .map(|(i, (x, y))| vec![format!("firm_{}", i + 1), num(*x), num(*y)])
                .collect();
            table(&mut out, &["firm".into(), "as_composed".into(), "as_inject".into()], &rows);
        }
        out
    }
}
