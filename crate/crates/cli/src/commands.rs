//! The four commands. Each returns a serializable report together with the
//! exit code it implies; errors map to their own exit codes.

use serde::Serialize;
use sysrisk_core::allocation::{
    allocate_aumann_shapley, allocate_aumann_shapley_alt, allocate_aumann_shapley_chain, allocate_inject_optimal,
    car_dual, car_dual_penalized, full_allocation_check, AllocationMethod, AllocationReport,
};
use sysrisk_core::composed::{dual_gap, dual_solution, subgradient_check, verify_dual_feasibility};
use sysrisk_core::inject::{
    dual_density, evaluate_closed_form, evaluate_numerical_oracle, expected_loss, optimal_allocation, penalty,
    verify_inject_properties, ORACLE_MAX_FIRMS, ORACLE_MAX_SCENARIOS,
};
use sysrisk_core::single_firm::{self, check_single_firm_axioms};
use sysrisk_core::{
    aggregation::check_ar_axioms, composed::check_systemic_axioms, AggregationRule, CheckOutcome, CheckReport,
    CheckStatus, ComposedRiskMeasure, InjectCapitalProblem, SingleFirmRiskMeasure, SystemLoss, SystemicRisk,
};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;

/// The measure a command runs on.
pub enum Measure {
    Composed(ComposedRiskMeasure),
    Inject(InjectCapitalProblem),
}

impl Measure {
    pub fn describe(&self) -> String {
        match self {
            Self::Composed(m) => m.describe(),
            Self::Inject(p) => p.describe(),
        }
    }

    pub fn formula(&self) -> &'static str {
        match self {
            Self::Composed(_) => "ρ0(Λ(X̄)) evaluated scenario by scenario",
            Self::Inject(_) => "Σ_j [(1/θ_j) ln E exp(θ_j S_j) − ln(θB)/θ_j] over groups j",
        }
    }

    pub fn evaluate(&self, x: &SystemLoss) -> CliResult<f64> {
        Ok(match self {
            Self::Composed(m) => m.evaluate(x)?,
            Self::Inject(p) => evaluate_closed_form(p, x)?,
        })
    }

    fn check_dim(&self, x: &SystemLoss) -> CliResult<()> {
        let n = match self {
            Self::Composed(m) => m.n_firms(),
            Self::Inject(p) => Some(p.n_firms()),
        };
        match n {
            Some(n) if n != x.n_firms() => Err(CliError::Incompatible(format!(
                "the measure is configured for {n} firms but the scenario file has {}",
                x.n_firms()
            ))),
            _ => Ok(()),
        }
    }
}

/// Picks the single measure a `risk`, `allocate` or `verify` run uses.
pub fn single_measure(cfg: &RunConfig) -> CliResult<Measure> {
    match (&cfg.measure, &cfg.inject) {
        (Some(m), None) => Ok(Measure::Composed(m.build()?)),
        (None, Some(p)) => Ok(Measure::Inject(p.build()?)),
        (Some(_), Some(_)) => Err(CliError::Parse(
            "configure exactly one of [measure] and [inject] (both are only allowed for `compare`)".into(),
        )),
        (None, None) => Err(CliError::Parse("no [measure] or [inject] section in the config".into())),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RiskReport {
    pub measure: String,
    pub formula: String,
    pub value: f64,
    pub firms: usize,
    pub scenarios: usize,
}

pub fn cmd_risk(cfg: &RunConfig, x: &SystemLoss) -> CliResult<RiskReport> {
    let m = single_measure(cfg)?;
    m.check_dim(x)?;
    Ok(RiskReport {
        measure: m.describe(),
        formula: m.formula().into(),
        value: m.evaluate(x)?,
        firms: x.n_firms(),
        scenarios: x.n_scenarios(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InjectDetail {
    /// `Y_i` per scenario, one row per scenario.
    pub allocation: Vec<Vec<f64>>,
    /// Deterministic group totals `d_j`.
    pub group_sums: Vec<f64>,
    /// `E[Σ l_i(X_i − Y_i)]`, equal to `B` at the optimum.
    pub expected_loss: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AllocateReport {
    pub measure: String,
    #[serde(flatten)]
    pub report: AllocationReport,
    pub full_allocation: bool,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inject: Option<InjectDetail>,
}

fn incompatible(method: AllocationMethod, why: &str) -> CliError {
    CliError::Incompatible(format!("allocation method `{method}` {why}"))
}

fn entropic_theta(m: &ComposedRiskMeasure) -> Option<f64> {
    match m.rho0 {
        SingleFirmRiskMeasure::Entropic { theta } => Some(theta),
        _ => None,
    }
}

/// Risk aversions for the penalty split; equal shares when not configured.
fn penalty_alphas(cfg: &RunConfig, theta: f64, n: usize) -> Vec<f64> {
    cfg.allocation.alphas.clone().unwrap_or_else(|| vec![n as f64 * theta; n])
}

pub fn cmd_allocate(cfg: &RunConfig, x: &SystemLoss, method: Option<AllocationMethod>) -> CliResult<AllocateReport> {
    let m = single_measure(cfg)?;
    m.check_dim(x)?;
    let method = match method.or(cfg.allocation_method()?) {
        Some(method) => method,
        None => return Err(CliError::Parse("no allocation method given ([allocation] method or --method)".into())),
    };
    let quad = &cfg.quadrature;
    let mut inject = None;
    let report = match (&m, method) {
        (Measure::Composed(rho), AllocationMethod::Dual) => car_dual(rho, x, &dual_solution(rho, x)?)?,
        (Measure::Inject(p), AllocationMethod::Dual) => {
            let xi = dual_density(p, x)?;
            let per_firm = x.rows().iter().zip(&xi).map(|(r, d)| r.dot(d.as_rv())).collect::<Result<Vec<_>, _>>()?;
            let diagonal = per_firm.iter().sum();
            AllocationReport::new(method, per_firm, evaluate_closed_form(p, x)?, diagonal)
        }
        (Measure::Composed(rho), AllocationMethod::DualPenalized) => {
            let theta = entropic_theta(rho).ok_or_else(|| incompatible(method, "needs an entropic ρ0"))?;
            car_dual_penalized(rho, x, &penalty_alphas(cfg, theta, x.n_firms()))?
        }
        (Measure::Inject(p), AllocationMethod::DualPenalized) => {
            if p.groups().n_groups() != 1 {
                return Err(incompatible(method, "needs a single group"));
            }
            let ses = ComposedRiskMeasure::entropic_sum_shift(p.theta(), p.log_theta_b() / p.theta())?;
            let mut r = car_dual_penalized(&ses, x, p.alphas())?;
            r.method = method;
            r
        }
        (Measure::Composed(rho), AllocationMethod::AumannShapley) => allocate_aumann_shapley(rho, x, quad)?,
        (Measure::Inject(p), AllocationMethod::AumannShapley) => allocate_aumann_shapley(p, x, quad)?,
        (Measure::Composed(rho), AllocationMethod::AumannShapleyChain) => allocate_aumann_shapley_chain(rho, x, quad)?,
        (Measure::Composed(rho), AllocationMethod::AumannShapleyAlt) => allocate_aumann_shapley_alt(rho, x, quad)?,
        (Measure::Inject(_), AllocationMethod::AumannShapleyChain | AllocationMethod::AumannShapleyAlt) => {
            return Err(incompatible(method, "needs a [measure] of the form ρ0 ∘ Λ"))
        }
        (Measure::Inject(p), AllocationMethod::InjectOptimal) => {
            let y = optimal_allocation(p, x)?;
            let group_sums = sysrisk_core::inject::group_allocation(p, x)?;
            inject = Some(InjectDetail {
                allocation: (0..y.n_scenarios()).map(|k| y.scenario(k)).collect(),
                group_sums,
                expected_loss: expected_loss(&p.losses(), x, &y)?,
            });
            allocate_inject_optimal(p, x)?
        }
        (Measure::Composed(_), AllocationMethod::InjectOptimal) => {
            return Err(incompatible(method, "needs an [inject] measure"))
        }
    };
    let tol = cfg.tolerances.full_allocation;
    Ok(AllocateReport {
        measure: m.describe(),
        full_allocation: full_allocation_check(&report, tol),
        tolerance: tol,
        report,
        inject,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub required: bool,
    #[serde(flatten)]
    pub outcome: CheckOutcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub measure: String,
    pub seed: u64,
    pub samples: usize,
    pub passed: bool,
    pub checks: Vec<CheckLine>,
}

impl VerifyReport {
    pub fn exit_code(&self) -> u8 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

/// A scalar comparison `|gap| ≤ tol` as a check outcome.
fn scalar_check(name: &str, description: &str, gap: f64, tol: f64, note: String) -> CheckOutcome {
    let ok = gap.abs() <= tol;
    CheckOutcome {
        name: name.into(),
        description: description.into(),
        status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        evidence_only: false,
        worst_margin: -gap.abs(),
        tolerance: tol,
        samples: 1,
        counterexample: if ok { None } else { Some(note.clone()) },
        note: Some(note),
    }
}

fn skipped(name: &str, description: &str, note: String) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        description: description.into(),
        status: CheckStatus::Skipped,
        evidence_only: false,
        worst_margin: 0.0,
        tolerance: 0.0,
        samples: 0,
        counterexample: None,
        note: Some(note),
    }
}

fn default_required_composed(rho: &ComposedRiskMeasure) -> Vec<&'static str> {
    let mut req = vec![
        "A1", "A2", "A5", "R1", "R2", "R4", "R6", "S1", "S2a", "S2b", "S4", "S6", "dual-gap", "nonnegativity",
        "normalization", "penalty-bound", "subgradient",
    ];
    if rho.rule.is_positively_homogeneous() {
        req.extend(["A4", "rule-cone"]);
    }
    if rho.rho0.is_positively_homogeneous() {
        req.extend(["R3", "R5", "rho0-cone"]);
    }
    if rho.is_positively_homogeneous() {
        req.extend(["S3", "mass-bound"]);
    }
    req
}

fn default_required_inject(p: &InjectCapitalProblem) -> Vec<&'static str> {
    let mut req = vec!["S1", "S2a", "S2b", "S4", "continuity", "dual-gap", "acceptance", "oracle", "identification"];
    let natural: f64 = p.alphas().iter().map(|a| 1.0 / a).sum();
    if (p.threshold() - natural).abs() <= 1e-12 * natural {
        req.extend(["S6", "R(0)=0"]);
    }
    req
}

fn verify_composed(rho: &ComposedRiskMeasure, x: &SystemLoss, cfg: &RunConfig, seed: u64) -> CliResult<CheckReport> {
    let samples = cfg.verify.samples;
    let n = x.n_firms();
    let mut report = CheckReport::default();
    report.extend(check_ar_axioms(&rho.rule, n, samples, seed)?);
    report.extend(check_single_firm_axioms(&rho.rho0, samples, seed)?);
    report.extend(check_systemic_axioms(rho, n, samples, seed)?);
    let desc = "ρ(X̄) = ⟨X̄, Ξ⟩_n − penalty at the optimal dual pair";
    match dual_solution(rho, x) {
        Ok(sol) => {
            let gap = dual_gap(rho, x, &sol)?;
            report.push(scalar_check("dual-gap", desc, gap, cfg.tolerances.dual_gap, format!("gap {gap:e}")));
            report.extend(verify_dual_feasibility(rho, &sol, samples, seed)?);
            report.extend(subgradient_check(rho, x, &sol.big_xi, samples, seed)?);
        }
        Err(e @ (sysrisk_core::Error::Unsupported(_) | sysrisk_core::Error::NotDifferentiable(_))) => {
            report.push(skipped("dual-gap", desc, format!("no dual solution: {e}")));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(report)
}

fn verify_inject(p: &InjectCapitalProblem, x: &SystemLoss, cfg: &RunConfig, seed: u64) -> CliResult<CheckReport> {
    let tol = &cfg.tolerances;
    let mut report = verify_inject_properties(p, cfg.verify.samples, seed)?;
    let value = evaluate_closed_form(p, x)?;

    let xi = dual_density(p, x)?;
    let pairing: f64 = x.rows().iter().zip(&xi).map(|(r, d)| r.dot(d.as_rv())).sum::<Result<f64, _>>()?;
    let gap = value - (pairing - penalty(p, &xi)?);
    report.push(scalar_check(
        "dual-gap",
        "R(X̄) = Σ_i ⟨X_i, Ξ_i⟩ − penalty",
        gap,
        tol.dual_gap,
        format!("gap {gap:e}"),
    ));

    let y = optimal_allocation(p, x)?;
    let loss = expected_loss(&p.losses(), x, &y)?;
    report.push(scalar_check(
        "acceptance",
        "E[Σ l_i(X_i − Y_i)] = B at the optimal allocation",
        loss - p.threshold(),
        tol.dual_gap,
        format!("expected loss {loss}, B = {}", p.threshold()),
    ));

    let oracle_desc = "grid oracle agrees with the closed form";
    if !cfg.verify.oracle {
        report.push(skipped("oracle", oracle_desc, "disabled in the config".into()));
    } else if x.n_firms() > ORACLE_MAX_FIRMS || x.n_scenarios() > ORACLE_MAX_SCENARIOS {
        report.push(skipped(
            "oracle",
            oracle_desc,
            format!("oracle limited to {ORACLE_MAX_FIRMS} firms and {ORACLE_MAX_SCENARIOS} scenarios"),
        ));
    } else {
        let o = evaluate_numerical_oracle(p, x)?;
        report.push(scalar_check(
            "oracle",
            oracle_desc,
            o.value - value,
            tol.oracle,
            format!("oracle {} vs closed form {value}", o.value),
        ));
    }

    let ident_desc = "one group: R(X̄) = ρ0(ΣX) − ln(θB)/θ with entropic ρ0";
    if p.groups().n_groups() == 1 {
        let theta = p.theta();
        let ses = single_firm::evaluate(&SingleFirmRiskMeasure::entropic(theta)?, &x.firm_sum())? - p.log_theta_b() / theta;
        report.push(scalar_check(
            "identification",
            ident_desc,
            value - ses,
            tol.identification,
            format!("R = {value}, shifted entropic sum = {ses}"),
        ));
    } else {
        report.push(skipped("identification", ident_desc, "several groups".into()));
    }
    Ok(report)
}

pub fn cmd_verify(cfg: &RunConfig, x: &SystemLoss, seed: u64) -> CliResult<VerifyReport> {
    let m = single_measure(cfg)?;
    m.check_dim(x)?;
    let (report, defaults) = match &m {
        Measure::Composed(rho) => (verify_composed(rho, x, cfg, seed)?, default_required_composed(rho)),
        Measure::Inject(p) => (verify_inject(p, x, cfg, seed)?, default_required_inject(p)),
    };
    let required: Vec<String> = match &cfg.verify.require {
        Some(names) => {
            if let Some(unknown) = names.iter().find(|n| report.get(n).is_none()) {
                return Err(CliError::Parse(format!("verify.require names unknown check `{unknown}`")));
            }
            names.clone()
        }
        None => defaults.into_iter().map(String::from).collect(),
    };
    let checks: Vec<CheckLine> = report
        .checks
        .into_iter()
        .map(|outcome| CheckLine { required: required.contains(&outcome.name), outcome })
        .collect();
    let passed = checks.iter().all(|c| !c.required || c.outcome.status != CheckStatus::Fail);
    Ok(VerifyReport { measure: m.describe(), seed, samples: cfg.verify.samples, passed, checks })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub composed: String,
    pub inject: String,
    pub composed_value: f64,
    pub inject_value: f64,
    pub difference: f64,
    pub tolerance: f64,
    pub agree: bool,
    /// Aumann-Shapley shares of both measures, when both are differentiable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allocations: Option<[Vec<f64>; 2]>,
}

impl CompareReport {
    pub fn exit_code(&self) -> u8 {
        if self.agree {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

pub fn cmd_compare(cfg: &RunConfig, x: &SystemLoss) -> CliResult<CompareReport> {
    let (Some(ms), Some(is)) = (&cfg.measure, &cfg.inject) else {
        return Err(CliError::Parse("`compare` needs both a [measure] and an [inject] section".into()));
    };
    let rho = Measure::Composed(ms.build()?);
    let p = Measure::Inject(is.build()?);
    rho.check_dim(x)?;
    p.check_dim(x)?;
    let a = rho.evaluate(x)?;
    let b = p.evaluate(x)?;
    let allocations = match (&rho, &p) {
        (Measure::Composed(r), Measure::Inject(q)) if !matches!(r.rule, AggregationRule::Contagion { .. }) => {
            let ra = allocate_aumann_shapley(r, x, &cfg.quadrature);
            let qa = allocate_aumann_shapley(q, x, &cfg.quadrature);
            match (ra, qa) {
                (Ok(ra), Ok(qa)) => Some([ra.per_firm, qa.per_firm]),
                _ => None,
            }
        }
        _ => None,
    };
    let tol = cfg.tolerances.compare;
    Ok(CompareReport {
        composed: rho.describe(),
        inject: p.describe(),
        composed_value: a,
        inject_value: b,
        difference: a - b,
        tolerance: tol,
        agree: (a - b).abs() <= tol,
        allocations,
    })
}
