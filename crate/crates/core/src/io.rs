//! Scenario file ingestion.
//!
//! CSV files carry a header `prob,firm_1,…,firm_n` and one row per
//! scenario. JSON files carry `{"probabilities": [..], "losses": [[..]]}`
//! with one inner array per firm. Probabilities summing to within
//! [`PROBABILITY_TOL`] of one are renormalized, anything else is rejected.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::scenario::{ScenarioSpace, SystemLoss};

pub const PROBABILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioFormat {
    Csv,
    Json,
}

impl ScenarioFormat {
    /// Picks the format from the extension, falling back to sniffing the
    /// first non-blank character.
    pub fn detect(path: &Path, text: &str) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("json") => Self::Json,
            Some("csv") => Self::Csv,
            _ if text.trim_start().starts_with('{') => Self::Json,
            _ => Self::Csv,
        }
    }
}

fn parse_err(line: Option<u64>, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn space_from(probabilities: Vec<f64>, line: Option<u64>) -> Result<std::sync::Arc<ScenarioSpace>> {
    ScenarioSpace::normalized(probabilities, PROBABILITY_TOL).map_err(|e| parse_err(line, e.to_string()))
}

pub fn parse_csv(text: &str) -> Result<SystemLoss> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| parse_err(Some(1), e.to_string()))?.clone();
    let header_line = header.position().map_or(1, |p| p.line());
    if header.get(0) != Some("prob") {
        return Err(parse_err(Some(header_line), "first column must be `prob`"));
    }
    let n = header.len() - 1;
    if n == 0 {
        return Err(parse_err(Some(header_line), "no firm columns"));
    }
    for (i, h) in header.iter().skip(1).enumerate() {
        if h != format!("firm_{}", i + 1) {
            return Err(parse_err(Some(header_line), format!("expected column `firm_{}`, found `{h}`", i + 1)));
        }
    }

    let mut probs = Vec::new();
    let mut rows = vec![Vec::new(); n];
    let mut last_line = header_line;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map(|p| p.line()), e.to_string()))?;
        let line = rec.position().map(|p| p.line());
        last_line = line.unwrap_or(last_line);
        if rec.len() != n + 1 {
            return Err(parse_err(line, format!("expected {} fields, found {}", n + 1, rec.len())));
        }
        let mut fields = rec.iter().map(|f| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("`{f}` is not a finite number")))
        });
        probs.push(fields.next().unwrap()?);
        for row in rows.iter_mut() {
            row.push(fields.next().unwrap()?);
        }
    }
    if probs.is_empty() {
        return Err(parse_err(Some(last_line), "no scenarios"));
    }
    let space = space_from(probs, None)?;
    SystemLoss::new(space, rows)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonScenarios {
    probabilities: Vec<f64>,
    losses: Vec<Vec<f64>>,
}

pub fn parse_json(text: &str) -> Result<SystemLoss> {
    let raw: JsonScenarios =
        serde_json::from_str(text).map_err(|e| parse_err(Some(e.line() as u64), e.to_string()))?;
    if raw.losses.is_empty() {
        return Err(parse_err(None, "`losses` has no firms"));
    }
    let k = raw.probabilities.len();
    if let Some((i, r)) = raw.losses.iter().enumerate().find(|(_, r)| r.len() != k) {
        return Err(parse_err(None, format!("firm {} has {} losses for {k} scenarios", i + 1, r.len())));
    }
    let space = space_from(raw.probabilities, None)?;
    SystemLoss::new(space, raw.losses)
}

pub fn parse_scenarios(text: &str, format: ScenarioFormat) -> Result<SystemLoss> {
    match format {
        ScenarioFormat::Csv => parse_csv(text),
        ScenarioFormat::Json => parse_json(text),
    }
}

pub fn read_scenarios(path: &Path) -> Result<SystemLoss> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_err(None, format!("{}: {e}", path.display())))?;
    parse_scenarios(&text, ScenarioFormat::detect(path, &text))
}
