//! Pass/fail reports produced by the randomized property checkers.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::scenario::{ScenarioSpace, SystemLoss};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Skipped => "skipped",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    /// Short label such as `S2b` or `dual-gap`.
    pub name: String,
    pub description: String,
    pub status: CheckStatus,
    /// Sampled or scanned evidence rather than an exact statement.
    pub evidence_only: bool,
    /// Smallest observed slack; negative values mean a violation.
    pub worst_margin: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub counterexample: Option<String>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CheckReport {
    pub checks: Vec<CheckOutcome>,
}

impl CheckReport {
    pub fn push(&mut self, outcome: CheckOutcome) {
        self.checks.push(outcome);
    }

    pub fn extend(&mut self, other: CheckReport) {
        self.checks.extend(other.checks);
    }

    pub fn get(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn status(&self, name: &str) -> Option<CheckStatus> {
        self.get(name).map(|c| c.status)
    }

    pub fn passed(&self, name: &str) -> bool {
        self.status(name) == Some(CheckStatus::Pass)
    }

    pub fn failed(&self, name: &str) -> bool {
        self.status(name) == Some(CheckStatus::Fail)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }
}

/// Accumulates margins for one property and keeps the first violation.
pub(crate) struct Tracker {
    name: String,
    description: String,
    tolerance: f64,
    evidence_only: bool,
    worst: f64,
    samples: usize,
    skipped: usize,
    counterexample: Option<String>,
    note: Option<String>,
}

impl Tracker {
    pub(crate) fn new(name: &str, description: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            description: description.to_string(),
            tolerance,
            evidence_only: true,
            worst: f64::INFINITY,
            samples: 0,
            skipped: 0,
            counterexample: None,
            note: None,
        }
    }

    pub(crate) fn exact(mut self) -> Self {
        self.evidence_only = false;
        self
    }

    /// Records a sample whose property reads `margin ≥ -tolerance·scale`.
    pub(crate) fn record(&mut self, margin: f64, scale: f64, witness: impl FnOnce() -> String) {
        self.samples += 1;
        let normalized = margin / scale.max(1.0);
        let normalized = if normalized.is_nan() { f64::NEG_INFINITY } else { normalized };
        if normalized < self.worst {
            self.worst = normalized;
        }
        if normalized < -self.tolerance && self.counterexample.is_none() {
            self.counterexample = Some(witness());
        }
    }

    pub(crate) fn skip(&mut self) {
        self.skipped += 1;
    }

    pub(crate) fn note(&mut self, note: impl Into<String>) {
        self.note = Some(note.into());
    }

    pub(crate) fn finish(self) -> CheckOutcome {
        let status = if self.counterexample.is_some() {
            CheckStatus::Fail
        } else if self.samples == 0 {
            CheckStatus::Skipped
        } else {
            CheckStatus::Pass
        };
        let note = match (self.note, self.skipped) {
            (n, 0) => n,
            (Some(n), s) => Some(format!("{n}; {s} samples skipped")),
            (None, s) => Some(format!("{s} samples skipped")),
        };
        CheckOutcome {
            name: self.name,
            description: self.description,
            status,
            evidence_only: self.evidence_only,
            worst_margin: if self.samples == 0 { 0.0 } else { self.worst },
            tolerance: self.tolerance,
            samples: self.samples,
            counterexample: self.counterexample,
            note,
        }
    }
}

pub(crate) fn random_space<R: Rng>(rng: &mut R, k: usize) -> Arc<ScenarioSpace> {
    let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = w.iter().sum();
    ScenarioSpace::normalized(w.iter().map(|v| v / total).collect(), 1e-9)
        .expect("positive weights always normalize")
}

pub(crate) fn random_vector<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

pub(crate) fn random_system<R: Rng>(rng: &mut R, space: &Arc<ScenarioSpace>, n: usize, scale: f64) -> SystemLoss {
    let rows = (0..n).map(|_| random_vector(rng, space.len(), scale)).collect();
    SystemLoss::new(space.clone(), rows).expect("dimensions match by construction")
}

pub(crate) fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}
