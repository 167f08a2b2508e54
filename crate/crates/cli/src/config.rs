//! Run configuration, read from a TOML file.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sysrisk_core::allocation::AllocationMethod;
use sysrisk_core::numerics::QuadratureConfig;
use sysrisk_core::{AggregationRule, ComposedRiskMeasure, GroupStructure, InjectCapitalProblem, SingleFirmRiskMeasure};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Scenario file, relative to the config file.
    pub scenarios: Option<PathBuf>,
    pub seed: Option<u64>,
    pub format: Option<OutputFormat>,
    pub measure: Option<MeasureSpec>,
    pub inject: Option<InjectSpec>,
    #[serde(default)]
    pub allocation: AllocationSpec,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub rho0: Rho0Spec,
    pub rule: RuleSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Rho0Spec {
    Entropic { theta: f64 },
    MeanShift { b: f64 },
    /// Acceptance set `{Z : E[Z] ≤ level}`.
    ExpectedLoss { level: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RuleSpec {
    Sum,
    SumShift { c: f64 },
    Loss,
    LossThreshold { b: f64 },
    /// `critical` lists 1-based firm numbers.
    Critical { critical: Vec<usize>, gamma: f64 },
    ExpUtility { alphas: Vec<f64> },
    Contagion { pi: Vec<Vec<f64>>, gamma: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectSpec {
    pub alphas: Vec<f64>,
    pub b: f64,
    /// Group sizes in firm order; one group when absent.
    pub groups: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationSpec {
    pub method: Option<String>,
    /// Risk aversions apportioning the penalty in `dual-penalized`.
    pub alphas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    pub samples: usize,
    /// Names of the checks that decide the exit code; a default set
    /// derived from the measure is used when absent.
    pub require: Option<Vec<String>>,
    pub oracle: bool,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self { samples: 200, require: None, oracle: true }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub dual_gap: f64,
    pub oracle: f64,
    pub identification: f64,
    pub full_allocation: f64,
    pub compare: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { dual_gap: 1e-8, oracle: 1e-3, identification: 1e-10, full_allocation: 1e-6, compare: 1e-10 }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
            let msg = e.message().to_string();
            CliError::Parse(match line {
                Some(l) => format!("config line {l}: {msg}"),
                None => format!("config: {msg}"),
            })
        })?;
        cfg.quadrature.validate()?;
        if cfg.verify.samples == 0 {
            return Err(CliError::Parse("verify.samples must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(s) = cfg.scenarios.take() {
            let base = path.parent().unwrap_or(Path::new(""));
            cfg.scenarios = Some(base.join(s));
        }
        Ok(cfg)
    }

    pub fn allocation_method(&self) -> CliResult<Option<AllocationMethod>> {
        self.allocation.method.as_deref().map(|m| m.parse().map_err(CliError::from)).transpose()
    }
}

impl MeasureSpec {
    pub fn build(&self) -> CliResult<ComposedRiskMeasure> {
        let rho0 = match self.rho0 {
            Rho0Spec::Entropic { theta } => SingleFirmRiskMeasure::entropic(theta)?,
            Rho0Spec::MeanShift { b } => SingleFirmRiskMeasure::mean_shift(b)?,
            Rho0Spec::ExpectedLoss { level } => {
                if !level.is_finite() {
                    return Err(CliError::Parse(format!("expected-loss level must be finite, got {level}")));
                }
                SingleFirmRiskMeasure::AcceptanceSet(sysrisk_core::single_firm::AcceptanceSet::expected_loss_at_most(level))
            }
        };
        let rule = match &self.rule {
            RuleSpec::Sum => AggregationRule::Sum,
            RuleSpec::SumShift { c } => AggregationRule::SumShift { c: *c },
            RuleSpec::Loss => AggregationRule::Loss,
            RuleSpec::LossThreshold { b } => AggregationRule::loss_threshold(*b)?,
            RuleSpec::Critical { critical, gamma } => {
                if critical.contains(&0) {
                    return Err(CliError::Parse("critical firms are numbered from 1".into()));
                }
                AggregationRule::critical(critical.iter().map(|i| i - 1).collect(), *gamma)?
            }
            RuleSpec::ExpUtility { alphas } => AggregationRule::exp_utility(alphas.clone())?,
            RuleSpec::Contagion { pi, gamma } => AggregationRule::contagion(pi.clone(), *gamma)?,
        };
        Ok(ComposedRiskMeasure::new(rho0, rule)?)
    }
}

impl InjectSpec {
    pub fn build(&self) -> CliResult<InjectCapitalProblem> {
        let n = self.alphas.len();
        let groups = match &self.groups {
            None => GroupStructure::single(n)?,
            Some(sizes) => {
                if sizes.contains(&0) {
                    return Err(CliError::Parse("group sizes must be positive".into()));
                }
                let bounds = sizes
                    .iter()
                    .scan(0, |acc, s| {
                        *acc += s;
                        Some(*acc)
                    })
                    .collect();
                GroupStructure::new(bounds, n)?
            }
        };
        Ok(InjectCapitalProblem::new(self.alphas.clone(), self.b, groups)?)
    }
}
