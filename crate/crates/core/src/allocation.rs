//! Systemic capital allocation rules: dual-based, penalized dual,
//! scenario-dependent, and Aumann-Shapley in three variants.

use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::aggregation::{aggregate_random, gateaux_aggregate, AggregationRule, DerivativeSide};
use crate::composed::{ComposedRiskMeasure, DifferentiableRisk, DualSolution, SystemicRisk};
use crate::error::{Error, Result};
use crate::inject::{self, InjectCapitalProblem};
use crate::numerics::{integrate_unit_interval, QuadratureConfig};
use crate::scenario::SystemLoss;
use crate::single_firm::{self, entropic, theta_from_alphas, SingleFirmRiskMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AllocationMethod {
    #[serde(rename = "dual")]
    Dual,
    #[serde(rename = "dual-penalized")]
    DualPenalized,
    #[serde(rename = "aumann-shapley")]
    AumannShapley,
    #[serde(rename = "as-chain")]
    AumannShapleyChain,
    #[serde(rename = "as-alt")]
    AumannShapleyAlt,
    #[serde(rename = "inject-optimal")]
    InjectOptimal,
}

impl AllocationMethod {
    pub const ALL: [AllocationMethod; 6] = [
        Self::Dual,
        Self::DualPenalized,
        Self::AumannShapley,
        Self::AumannShapleyChain,
        Self::AumannShapleyAlt,
        Self::InjectOptimal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Dual => "dual",
            Self::DualPenalized => "dual-penalized",
            Self::AumannShapley => "aumann-shapley",
            Self::AumannShapleyChain => "as-chain",
            Self::AumannShapleyAlt => "as-alt",
            Self::InjectOptimal => "inject-optimal",
        }
    }
}

impl fmt::Display for AllocationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AllocationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown allocation method `{s}`")))
    }
}

/// Per-firm capital `CS(e_i X_i; X̄)` together with the risk it allocates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationReport {
    pub method: AllocationMethod,
    pub per_firm: Vec<f64>,
    pub total: f64,
    pub risk: f64,
    /// `|Σ_i CS(e_i X_i; X̄) − ρ(X̄)|`.
    pub full_allocation_gap: f64,
    /// `CS(X̄; X̄)`.
    pub diagonal: f64,
    /// `|CS(X̄; X̄) − ρ(X̄)|`.
    pub diagonal_gap: f64,
    /// `|CS(X̄; X̄) − Σ_i CS(e_i X_i; X̄)|`.
    pub additivity_gap: f64,
}

impl AllocationReport {
    pub fn new(method: AllocationMethod, per_firm: Vec<f64>, risk: f64, diagonal: f64) -> Self {
        let total: f64 = per_firm.iter().sum();
        Self {
            method,
            total,
            risk,
            full_allocation_gap: (total - risk).abs(),
            diagonal,
            diagonal_gap: (diagonal - risk).abs(),
            additivity_gap: (diagonal - total).abs(),
            per_firm,
        }
    }
}

/// `true` when the per-firm capital adds up to the risk within `tol`.
pub fn full_allocation_check(report: &AllocationReport, tol: f64) -> bool {
    report.full_allocation_gap <= tol
}

/// `CS(e_i X_i; X̄) = ⟨X_i, Ξ_i⟩`.
pub fn car_dual<R: SystemicRisk + ?Sized>(rho: &R, x: &SystemLoss, sol: &DualSolution) -> Result<AllocationReport> {
    if x.n_firms() != sol.n_firms() {
        return Err(Error::DimensionMismatch { expected: x.n_firms(), got: sol.n_firms() });
    }
    let per_firm = x.rows().iter().zip(&sol.big_xi).map(|(r, c)| r.dot(c)).collect::<Result<Vec<_>>>()?;
    let diagonal = sol.pairing(x)?;
    Ok(AllocationReport::new(AllocationMethod::Dual, per_firm, rho.evaluate(x)?, diagonal))
}

fn entropic_sum_parameters(rho: &ComposedRiskMeasure) -> Result<(f64, f64)> {
    let theta = match rho.rho0 {
        SingleFirmRiskMeasure::Entropic { theta } => theta,
        _ => return Err(Error::Unsupported("penalized dual allocation needs an entropic ρ0".into())),
    };
    let c = match rho.rule {
        AggregationRule::Sum => 0.0,
        AggregationRule::SumShift { c } => c,
        _ => return Err(Error::Unsupported("penalized dual allocation needs the sum or shifted-sum rule".into())),
    };
    Ok((theta, c))
}

/// Penalty shares `γ_i = θ/α_i`.
pub fn penalty_shares(alphas: &[f64]) -> Result<Vec<f64>> {
    let theta = theta_from_alphas(alphas)?;
    Ok(alphas.iter().map(|a| theta / a).collect())
}

/// `CS(e_i X_i; X̄) = ⟨X_i, ξ⟩ − (θ/α_i) α(ξ, Ξ)` for the entropic measure
/// of the (shifted) sum, whose `θ` must equal `1/Σ(1/α_i)`.
pub fn car_dual_penalized(
    rho: &ComposedRiskMeasure,
    x: &SystemLoss,
    alphas: &[f64],
) -> Result<AllocationReport> {
    let (theta, c) = entropic_sum_parameters(rho)?;
    if alphas.len() != x.n_firms() {
        return Err(Error::DimensionMismatch { expected: x.n_firms(), got: alphas.len() });
    }
    let gamma = penalty_shares(alphas)?;
    let implied = theta_from_alphas(alphas)?;
    if (implied - theta).abs() > 1e-12 * theta {
        return Err(Error::InvalidParameter(format!(
            "risk aversions imply θ = {implied}, but the measure uses θ = {theta}"
        )));
    }
    let sol = crate::composed::dual_solution_entropic_sum(theta, c, x)?;
    let per_firm = x
        .rows()
        .iter()
        .zip(&gamma)
        .map(|(r, g)| Ok(r.dot(&sol.xi)? - g * sol.penalty))
        .collect::<Result<Vec<_>>>()?;
    let diagonal = sol.pairing(x)? - sol.penalty;
    Ok(AllocationReport::new(AllocationMethod::DualPenalized, per_firm, rho.evaluate(x)?, diagonal))
}

/// Scenario-dependent allocation
/// `Y_i = X_i − (θ/α_i) ΣX + (1/α_i) ln E[exp(θ ΣX)] − (θ/α_i) c`, which sums
/// to `ρ0(ΣX) − c` in every scenario.
pub fn scenario_allocation(theta: f64, c: f64, alphas: &[f64], x: &SystemLoss) -> Result<SystemLoss> {
    if alphas.len() != x.n_firms() {
        return Err(Error::DimensionMismatch { expected: x.n_firms(), got: alphas.len() });
    }
    let implied = theta_from_alphas(alphas)?;
    if (implied - theta).abs() > 1e-12 * theta {
        return Err(Error::InvalidParameter(format!(
            "risk aversions imply θ = {implied}, but θ = {theta} was given"
        )));
    }
    let s = x.firm_sum();
    let log_e = theta * entropic(&s, theta);
    let rows = x
        .rows()
        .iter()
        .zip(alphas)
        .map(|(r, a)| r.zip_with(&s, |xi, si| xi - theta / a * si + log_e / a - theta / a * c))
        .collect::<Result<Vec<_>>>()?;
    SystemLoss::from_rows(x.space().clone(), rows)
}

/// Runs the quadrature for an integrand that may fail, returning the first
/// failure instead of a meaningless number.
fn integrate_fallible(cfg: &QuadratureConfig, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    cfg.validate()?;
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let value = integrate_unit_interval(
        |g| match f(g) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        cfg,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    value
}

/// `CS^AS(Ȳ; X̄) = ∫₀¹ δρ(γX̄, Ȳ) dγ`.
pub fn aumann_shapley<R: DifferentiableRisk + ?Sized>(
    rho: &R,
    x: &SystemLoss,
    y: &SystemLoss,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    integrate_fallible(cfg, |g| rho.gateaux(&x.scale(g), y))
}

/// `∫₀¹ ⟨∇ρ0(Λ(γX̄)), δΛ(γX̄, Ȳ)⟩ dγ`.
pub fn aumann_shapley_chain(
    rho0: &SingleFirmRiskMeasure,
    rule: &AggregationRule,
    x: &SystemLoss,
    y: &SystemLoss,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    integrate_fallible(cfg, |g| {
        let path = x.scale(g);
        let xi = single_firm::gradient_density(rho0, &aggregate_random(rule, &path)?)?;
        gateaux_aggregate(rule, &path, y, DerivativeSide::TwoSided)?.dot(xi.as_rv())
    })
}

/// `∫₀¹ ⟨∇ρ0(γΛ(X̄)), Λ(Ȳ)⟩ dγ`.
pub fn aumann_shapley_alt(
    rho0: &SingleFirmRiskMeasure,
    rule: &AggregationRule,
    x: &SystemLoss,
    y: &SystemLoss,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let lx = aggregate_random(rule, x)?;
    let ly = aggregate_random(rule, y)?;
    integrate_fallible(cfg, |g| ly.dot(single_firm::gradient_density(rho0, &lx.map(|v| g * v))?.as_rv()))
}

fn per_firm_with(x: &SystemLoss, mut f: impl FnMut(&SystemLoss) -> Result<f64>) -> Result<Vec<f64>> {
    (0..x.n_firms()).map(|i| f(&x.unit_component(i))).collect()
}

/// Aumann-Shapley allocation of a differentiable measure.
pub fn allocate_aumann_shapley<R: DifferentiableRisk + ?Sized>(
    rho: &R,
    x: &SystemLoss,
    cfg: &QuadratureConfig,
) -> Result<AllocationReport> {
    let per_firm = per_firm_with(x, |e| aumann_shapley(rho, x, e, cfg))?;
    let diagonal = aumann_shapley(rho, x, x, cfg)?;
    Ok(AllocationReport::new(AllocationMethod::AumannShapley, per_firm, rho.evaluate(x)?, diagonal))
}

/// Aumann-Shapley allocation through the chain rule of `ρ0 ∘ Λ`.
pub fn allocate_aumann_shapley_chain(
    rho: &ComposedRiskMeasure,
    x: &SystemLoss,
    cfg: &QuadratureConfig,
) -> Result<AllocationReport> {
    let per_firm = per_firm_with(x, |e| aumann_shapley_chain(&rho.rho0, &rho.rule, x, e, cfg))?;
    let diagonal = aumann_shapley_chain(&rho.rho0, &rho.rule, x, x, cfg)?;
    Ok(AllocationReport::new(AllocationMethod::AumannShapleyChain, per_firm, rho.evaluate(x)?, diagonal))
}

/// Alternative Aumann-Shapley allocation along `γΛ(X̄)`.
pub fn allocate_aumann_shapley_alt(
    rho: &ComposedRiskMeasure,
    x: &SystemLoss,
    cfg: &QuadratureConfig,
) -> Result<AllocationReport> {
    let per_firm = per_firm_with(x, |e| aumann_shapley_alt(&rho.rho0, &rho.rule, x, e, cfg))?;
    let diagonal = aumann_shapley_alt(&rho.rho0, &rho.rule, x, x, cfg)?;
    Ok(AllocationReport::new(AllocationMethod::AumannShapleyAlt, per_firm, rho.evaluate(x)?, diagonal))
}

/// Dual valuation `E[Y_i Ξ_i]` of the optimal inject-capital allocation.
pub fn allocate_inject_optimal(p: &InjectCapitalProblem, x: &SystemLoss) -> Result<AllocationReport> {
    let per_firm = inject::systemic_capital_allocation_dual(p, x)?;
    let risk = inject::evaluate_closed_form(p, x)?;
    let diagonal = per_firm.iter().sum();
    Ok(AllocationReport::new(AllocationMethod::InjectOptimal, per_firm, risk, diagonal))
}

/// `(e^z − 1)/z`, with its Taylor series near zero.
pub fn exprel(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 + z / 2.0 + z * z / 6.0
    } else {
        z.exp_m1() / z
    }
}

/// Closed-form chain-rule Aumann-Shapley value for the exponential-utility
/// rule under the mean-shift measure: `Σ_i E[Y_i (e^{α_i X_i} − 1)/(α_i X_i)]`.
pub fn exp_utility_as_closed_form(alphas: &[f64], x: &SystemLoss, y: &SystemLoss) -> Result<f64> {
    if alphas.len() != x.n_firms() || y.n_firms() != x.n_firms() {
        return Err(Error::DimensionMismatch { expected: x.n_firms(), got: alphas.len() });
    }
    alphas
        .iter()
        .enumerate()
        .map(|(i, a)| y.row(i).zip_with(x.row(i), |yi, xi| yi * exprel(a * xi)).map(|r| r.expectation()))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::{random_space, random_system};
    use crate::composed::dual_solution;
    use crate::scenario::ScenarioSpace;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn space(p: &[f64]) -> Arc<ScenarioSpace> {
        ScenarioSpace::new(p.to_vec()).unwrap()
    }

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn exp_utility_measure(alphas: &[f64]) -> ComposedRiskMeasure {
        let b: f64 = alphas.iter().map(|a| 1.0 / a).sum();
        ComposedRiskMeasure::new(
            SingleFirmRiskMeasure::mean_shift(b).unwrap(),
            AggregationRule::exp_utility(alphas.to_vec()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn method_names_round_trip() {
        for m in AllocationMethod::ALL {
            assert_eq!(m.as_str().parse::<AllocationMethod>().unwrap(), m);
        }
        assert!("shapley".parse::<AllocationMethod>().is_err());
    }

    #[test]
    fn car_dual_examples() {
        let lin = ComposedRiskMeasure::new(SingleFirmRiskMeasure::mean_shift(0.0).unwrap(), AggregationRule::Sum).unwrap();
        let x = SystemLoss::new(space(&[0.25, 0.75]), vec![vec![1.0, 3.0], vec![-2.0, 2.0]]).unwrap();
        let sol = dual_solution(&lin, &x).unwrap();
        let r = car_dual(&lin, &x, &sol).unwrap();
        assert_abs_diff_eq!(r.per_firm[0], 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.per_firm[1], 1.0, epsilon = 1e-15);
        assert!(r.full_allocation_gap <= 1e-12);

        let same = SystemLoss::new(space(&[0.5, 0.5]), vec![vec![0.2, 1.0], vec![0.2, 1.0]]).unwrap();
        let ses = ComposedRiskMeasure::entropic_sum(1.0).unwrap();
        let sol = dual_solution(&ses, &same).unwrap();
        let r = car_dual(&ses, &same, &sol).unwrap();
        assert_eq!(r.per_firm[0], r.per_firm[1]);
        assert_abs_diff_eq!(r.full_allocation_gap, sol.penalty, epsilon = 1e-12);
        assert!(r.full_allocation_gap > 1e-3);
    }

    #[test]
    fn car_dual_is_bilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let ses = ComposedRiskMeasure::entropic_sum(0.8).unwrap();
        let sp = random_space(&mut rng, 4);
        let x = random_system(&mut rng, &sp, 2, 2.0);
        let sol = dual_solution(&ses, &x).unwrap();
        let base = car_dual(&ses, &x, &sol).unwrap();
        let scaled = car_dual(&ses, &x.scale(3.0), &sol).unwrap();
        let other = random_system(&mut rng, &sp, 2, 2.0);
        let summed = car_dual(&ses, &x.axpy(1.0, &other).unwrap(), &sol).unwrap();
        let part = car_dual(&ses, &other, &sol).unwrap();
        for i in 0..2 {
            assert!((scaled.per_firm[i] - 3.0 * base.per_firm[i]).abs() <= 1e-12);
            assert!((summed.per_firm[i] - base.per_firm[i] - part.per_firm[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn penalized_examples() {
        assert_eq!(penalty_shares(&[1.0, 1.0]).unwrap(), vec![0.5, 0.5]);
        let ses = ComposedRiskMeasure::entropic_sum(0.5).unwrap();
        let det = SystemLoss::constant(space(&[0.3, 0.7]), &[1.5, -0.5]).unwrap();
        let r = car_dual_penalized(&ses, &det, &[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(r.per_firm[0], 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(r.per_firm[1], -0.5, epsilon = 1e-14);
        assert!(r.full_allocation_gap <= 1e-14);
        assert!(car_dual_penalized(&ses, &det, &[1.0, 2.0]).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let n = rng.gen_range(1..=4);
            let alphas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..3.0)).collect();
            let theta = theta_from_alphas(&alphas).unwrap();
            let rho = ComposedRiskMeasure::entropic_sum_shift(theta, rng.gen_range(-1.0..1.0)).unwrap();
            let sp = random_space(&mut rng, 5);
            let x = random_system(&mut rng, &sp, n, 2.0);
            let r = car_dual_penalized(&rho, &x, &alphas).unwrap();
            assert!(full_allocation_check(&r, 1e-10), "{}", r.full_allocation_gap);
        }
    }

    #[test]
    fn scenario_allocation_matches_inject_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..50 {
            let n = rng.gen_range(1..=4);
            let alphas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..3.0)).collect();
            let b = rng.gen_range(0.2..4.0);
            let p = InjectCapitalProblem::single_group(alphas.clone(), b).unwrap();
            let theta = p.theta();
            let c = p.log_theta_b() / theta;
            let sp = random_space(&mut rng, 4);
            let x = random_system(&mut rng, &sp, n, 2.0);
            let y = scenario_allocation(theta, c, &alphas, &x).unwrap();
            let opt = inject::optimal_allocation(&p, &x).unwrap();
            for (a, o) in y.to_flat().iter().zip(opt.to_flat()) {
                assert!((a - o).abs() <= 1e-10);
            }
            let ses = entropic(&x.firm_sum(), theta);
            for v in y.firm_sum().values() {
                assert!((v - (ses - c)).abs() <= 1e-10);
            }
        }
        let det = SystemLoss::constant(space(&[0.5, 0.5]), &[1.0, 2.0]).unwrap();
        let y = scenario_allocation(0.5, 0.0, &[1.0, 1.0], &det).unwrap();
        assert!(y.is_deterministic());
        assert_abs_diff_eq!(y.firm_sum().values()[0], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn aumann_shapley_examples() {
        let ses = ComposedRiskMeasure::entropic_sum(1.0).unwrap();
        let det = SystemLoss::constant(space(&[0.4, 0.6]), &[1.3, -0.4]).unwrap();
        let v = aumann_shapley(&ses, &det, &det.unit_component(0), &cfg()).unwrap();
        assert_abs_diff_eq!(v, 1.3, epsilon = 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let sp = random_space(&mut rng, 4);
        let x = random_system(&mut rng, &sp, 3, 2.0);
        let r = allocate_aumann_shapley(&ses, &x, &cfg()).unwrap();
        assert!(r.diagonal_gap <= 1e-6, "{}", r.diagonal_gap);
        assert!(full_allocation_check(&r, 1e-6));
    }

    #[test]
    fn entropic_sum_and_inject_share_aumann_shapley() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        for _ in 0..50 {
            let n = rng.gen_range(1..=3);
            let alphas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..3.0)).collect();
            let b: f64 = alphas.iter().map(|a| 1.0 / a).sum();
            let p = InjectCapitalProblem::single_group(alphas, b).unwrap();
            let ses = ComposedRiskMeasure::entropic_sum(p.theta()).unwrap();
            let sp = random_space(&mut rng, 3);
            let x = random_system(&mut rng, &sp, n, 1.5);
            let y = random_system(&mut rng, &sp, n, 1.5);
            let a = aumann_shapley(&ses, &x, &y, &cfg()).unwrap();
            let b = aumann_shapley(&p, &x, &y, &cfg()).unwrap();
            assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn chain_rule_examples() {
        let alphas = [0.7, 1.6];
        let rho = exp_utility_measure(&alphas);
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let sp = random_space(&mut rng, 3);
        let x = random_system(&mut rng, &sp, 2, 1.5);
        for i in 0..2 {
            let e = x.unit_component(i);
            let chain = aumann_shapley_chain(&rho.rho0, &rho.rule, &x, &e, &cfg()).unwrap();
            let closed = x.row(i).map(|v| (alphas[i] * v).exp_m1() / alphas[i]).expectation();
            assert!((chain - closed).abs() <= 1e-8, "{chain} vs {closed}");
            assert!((closed - rho.evaluate(&e).unwrap()).abs() <= 1e-12);
            assert!((exp_utility_as_closed_form(&alphas, &x, &e).unwrap() - closed).abs() <= 1e-12);
        }
        let r = allocate_aumann_shapley_chain(&rho, &x, &cfg()).unwrap();
        assert!(full_allocation_check(&r, 1e-6));

        let one = exp_utility_measure(&[1.0]);
        let det = SystemLoss::constant(space(&[1.0]), &[2f64.ln()]).unwrap();
        let v = aumann_shapley_chain(&one.rho0, &one.rule, &det, &det, &cfg()).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-8);

        let ses = ComposedRiskMeasure::entropic_sum(0.9).unwrap();
        let y = random_system(&mut rng, &sp, 2, 1.0);
        let chain = aumann_shapley_chain(&ses.rho0, &ses.rule, &x, &y, &cfg()).unwrap();
        let direct = aumann_shapley(&ses, &x, &y, &cfg()).unwrap();
        assert!((chain - direct).abs() <= 1e-12);
    }

    #[test]
    fn chain_rule_rejects_loss_rule() {
        let sel = ComposedRiskMeasure::entropic_loss(1.0).unwrap();
        let x = SystemLoss::new(space(&[0.5, 0.5]), vec![vec![1.0, 0.0], vec![-1.0, 2.0]]).unwrap();
        let err = aumann_shapley_chain(&sel.rho0, &sel.rule, &x, &x, &cfg());
        assert!(matches!(err, Err(Error::NotDifferentiable(_))));
        assert!(matches!(aumann_shapley(&sel, &x, &x, &cfg()), Err(Error::NotDifferentiable(_))));
        let alt = aumann_shapley_alt(&sel.rho0, &sel.rule, &x, &x, &cfg()).unwrap();
        assert!(alt.is_finite());
    }

    #[test]
    fn alternative_examples() {
        let alphas = [0.5, 1.0, 2.0];
        let b: f64 = alphas.iter().map(|a| 1.0 / a).sum();
        let rho = exp_utility_measure(&alphas);
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let sp = random_space(&mut rng, 4);
        let x = random_system(&mut rng, &sp, 3, 1.0);
        let v = aumann_shapley_alt(&rho.rho0, &rho.rule, &x, &x, &cfg()).unwrap();
        assert!((v - (rho.evaluate(&x).unwrap() + b)).abs() <= 1e-10);
        let r = allocate_aumann_shapley_alt(&rho, &x, &cfg()).unwrap();
        assert!((r.diagonal_gap - b).abs() <= 1e-10);
        assert!(!full_allocation_check(&r, 1e-6));

        let ses = ComposedRiskMeasure::entropic_sum(1.2).unwrap();
        let v = aumann_shapley_alt(&ses.rho0, &ses.rule, &x, &x, &cfg()).unwrap();
        assert!((v - ses.evaluate(&x).unwrap()).abs() <= 1e-6);
    }

    #[test]
    fn inject_optimal_report_allocates_fully() {
        let p = InjectCapitalProblem::new(
            vec![1.0, 2.0, 0.5],
            1.3,
            crate::scenario::GroupStructure::new(vec![1, 3], 3).unwrap(),
        )
        .unwrap();
        let x = random_system(&mut ChaCha8Rng::seed_from_u64(48), &space(&[0.2, 0.5, 0.3]), 3, 2.0);
        let r = allocate_inject_optimal(&p, &x).unwrap();
        assert!(full_allocation_check(&r, 1e-10));
    }

    #[test]
    fn exprel_series_and_direct_agree() {
        assert_eq!(exprel(0.0), 1.0);
        for z in [1e-9, -1e-9, 5e-9] {
            assert!((exprel(z) - (1.0 + z / 2.0)).abs() < 1e-15);
        }
        assert!((exprel(1e-7) - 1.00000005).abs() < 1e-14);
        assert!((exprel(1.0) - (std::f64::consts::E - 1.0)).abs() < 1e-15);
        let x = SystemLoss::new(space(&[0.5, 0.5]), vec![vec![0.0, 1e-12]]).unwrap();
        let v = exp_utility_as_closed_form(&[2.0], &x, &x).unwrap();
        assert!(v.is_finite() && v.abs() < 1e-11);
    }
}
