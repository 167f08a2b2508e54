//! "First aggregate" systemic risk measures `ρ = ρ0 ∘ Λ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aggregation::{
    aggregate_point, aggregate_random, gateaux_aggregate, gateaux_point, surjectivity_scan_named, AggregationRule,
    DerivativeSide,
};
use crate::axioms::{fmt_vec, random_space, random_system, random_vector, CheckReport, Tracker};
use crate::error::{Error, Result};
use crate::numerics::{bisect_root, fd_step};
use crate::scenario::{relative_entropy, Density, RandomVariable, ScenarioSpace, SystemLoss};
use crate::single_firm::{self, SingleFirmRiskMeasure};

/// Anything that maps a system of losses to a scalar capital requirement.
pub trait SystemicRisk {
    /// Number of firms the measure is tied to, if any.
    fn n_firms(&self) -> Option<usize> {
        None
    }

    fn evaluate(&self, x: &SystemLoss) -> Result<f64>;

    /// `ρ(x̄)` for a deterministic loss vector.
    fn evaluate_point(&self, x: &[f64]) -> Result<f64> {
        self.evaluate(&SystemLoss::point(x)?)
    }
}

#[derive(Debug, Clone)]
pub struct ComposedRiskMeasure {
    pub rho0: SingleFirmRiskMeasure,
    pub rule: AggregationRule,
}

impl ComposedRiskMeasure {
    pub fn new(rho0: SingleFirmRiskMeasure, rule: AggregationRule) -> Result<Self> {
        rho0.validate()?;
        rule.validate()?;
        Ok(Self { rho0, rule })
    }

    /// Entropic measure of the summed losses.
    pub fn entropic_sum(theta: f64) -> Result<Self> {
        Self::new(SingleFirmRiskMeasure::entropic(theta)?, AggregationRule::Sum)
    }

    /// Entropic measure of the summed losses shifted by `c`.
    pub fn entropic_sum_shift(theta: f64, c: f64) -> Result<Self> {
        Self::new(SingleFirmRiskMeasure::entropic(theta)?, AggregationRule::SumShift { c })
    }

    /// Entropic measure of the summed positive parts.
    pub fn entropic_loss(theta: f64) -> Result<Self> {
        Self::new(SingleFirmRiskMeasure::entropic(theta)?, AggregationRule::Loss)
    }

    pub fn is_positively_homogeneous(&self) -> bool {
        self.rho0.is_positively_homogeneous() && self.rule.is_positively_homogeneous()
    }

    pub fn describe(&self) -> String {
        format!("ρ0 ∘ Λ with ρ0 = {} and Λ = {}", self.rho0.describe(), self.rule.describe())
    }
}

impl SystemicRisk for ComposedRiskMeasure {
    fn n_firms(&self) -> Option<usize> {
        self.rule.fixed_dim()
    }

    fn evaluate(&self, x: &SystemLoss) -> Result<f64> {
        evaluate(self, x)
    }

    fn evaluate_point(&self, x: &[f64]) -> Result<f64> {
        let v = aggregate_point(&self.rule, x)?;
        single_firm::evaluate(&self.rho0, &RandomVariable::constant(ScenarioSpace::degenerate(), v))
    }
}

/// `ρ(X̄) = ρ0(Λ(X̄))`.
pub fn evaluate(rho: &ComposedRiskMeasure, x: &SystemLoss) -> Result<f64> {
    single_firm::evaluate(&rho.rho0, &aggregate_random(&rho.rule, x)?)
}

/// `(m, Y)` lies in the epigraph of `ρ0`.
pub fn in_rho0_acceptance(rho0: &SingleFirmRiskMeasure, m: f64, y: &RandomVariable) -> Result<bool> {
    Ok(m >= single_firm::evaluate(rho0, y)?)
}

/// `(Y, X̄)` satisfies `Y ≥ Λ(X̄)` scenario-wise.
pub fn in_rule_acceptance(rule: &AggregationRule, y: &RandomVariable, x: &SystemLoss) -> Result<bool> {
    let agg = aggregate_random(rule, x)?;
    Ok(y.values().iter().zip(agg.values()).all(|(a, b)| a >= b))
}

/// `inf{m | (m, Y) ∈ A_ρ0, (Y, X̄) ∈ A_Λ}` over a finite set of candidate
/// `Y`: `Λ(X̄)` itself, scenario-wise bumps up and down by `j·h` for
/// `j ≤ grid`, and uniform shifts. Candidates outside `A_Λ` are rejected.
pub fn primal_evaluate(rho: &ComposedRiskMeasure, x: &SystemLoss, grid: usize) -> Result<f64> {
    if grid == 0 {
        return Err(Error::InvalidParameter("primal grid must be ≥ 1".into()));
    }
    let base = aggregate_random(&rho.rule, x)?;
    let h = 0.5 * (1.0 + base.sup_norm()) / grid as f64;
    let k = base.len();
    let mut best = f64::INFINITY;
    let mut consider = |y: RandomVariable| -> Result<()> {
        if !in_rule_acceptance(&rho.rule, &y, x)? {
            return Ok(());
        }
        let m = single_firm::evaluate(&rho.rho0, &y)?;
        if in_rho0_acceptance(&rho.rho0, m, &y)? {
            best = best.min(m);
        }
        Ok(())
    };
    consider(base.clone())?;
    for j in 1..=grid as i64 {
        for sign in [-1.0, 1.0] {
            let step = sign * j as f64 * h;
            consider(base.map(|v| v + step))?;
            for scenario in 0..k {
                let mut values = base.values().to_vec();
                values[scenario] += step;
                consider(RandomVariable::new(base.space().clone(), values)?)?;
            }
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::NumericalBreakdown("no primal candidate is acceptable".into()))
    }
}

/// Candidate dual pair `(ξ, Ξ)` with its penalty. Components are stored
/// unvalidated so that infeasible candidates can be inspected.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub xi: RandomVariable,
    pub big_xi: Vec<RandomVariable>,
    pub penalty: f64,
}

impl DualSolution {
    pub fn new(xi: RandomVariable, big_xi: Vec<RandomVariable>, penalty: f64) -> Result<Self> {
        if big_xi.is_empty() {
            return Err(Error::InvalidParameter("Ξ needs at least one firm".into()));
        }
        if big_xi.iter().any(|c| !c.same_space(&xi)) {
            return Err(Error::MismatchedSpace);
        }
        Ok(Self { xi, big_xi, penalty })
    }

    pub fn n_firms(&self) -> usize {
        self.big_xi.len()
    }

    /// `⟨X̄, Ξ⟩_n = Σ_i E[X_i Ξ_i]`.
    pub fn pairing(&self, x: &SystemLoss) -> Result<f64> {
        if x.n_firms() != self.n_firms() {
            return Err(Error::DimensionMismatch { expected: self.n_firms(), got: x.n_firms() });
        }
        x.rows().iter().zip(&self.big_xi).map(|(r, c)| r.dot(c)).sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.xi.values().iter().chain(self.big_xi.iter().flat_map(|c| c.values())).all(|v| *v >= 0.0)
    }
}

/// Penalty of `(ξ, Ξ)` for `ρ0 ∘ (Σ − c)` with entropic or mean-shift `ρ0`;
/// `+∞` unless every `Ξ_i` equals `ξ` and `ξ` lies in the domain of `ρ0*`.
pub fn sum_rule_penalty(rho: &ComposedRiskMeasure, xi: &RandomVariable, big_xi: &[RandomVariable]) -> Result<f64> {
    let c = match rho.rule {
        AggregationRule::Sum => 0.0,
        AggregationRule::SumShift { c } => c,
        _ => return Err(Error::Unsupported("closed-form penalty needs the sum or shifted-sum rule".into())),
    };
    let matches = big_xi
        .iter()
        .all(|col| col.values().iter().zip(xi.values()).all(|(a, b)| (a - b).abs() <= 1e-12));
    if !matches {
        return Ok(f64::INFINITY);
    }
    Ok(single_firm::conjugate(&rho.rho0, xi)? + c)
}

/// Optimal dual pair for the entropic measure of `Σ X_i − c`:
/// `ξ = exp(θ ΣX_i) / E[exp(θ ΣX_i)]`, `Ξ = 1_n ξ`, penalty
/// `(1/θ) E[ξ ln ξ] + c`.
pub fn dual_solution_entropic_sum(theta: f64, c: f64, x: &SystemLoss) -> Result<DualSolution> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParameter(format!("θ must be > 0, got {theta}")));
    }
    let xi = Density::exponential_tilt(&x.firm_sum(), theta)?;
    let penalty = relative_entropy(&xi) / theta + c;
    let xi = xi.into_rv();
    DualSolution::new(xi.clone(), vec![xi; x.n_firms()], penalty)
}

/// Closed-form optimal dual pair for entropic or mean-shift `ρ0` composed
/// with the sum or shifted-sum rule.
pub fn dual_solution(rho: &ComposedRiskMeasure, x: &SystemLoss) -> Result<DualSolution> {
    let c = match rho.rule {
        AggregationRule::Sum => 0.0,
        AggregationRule::SumShift { c } => c,
        _ => return Err(Error::Unsupported("closed-form dual needs the sum or shifted-sum rule".into())),
    };
    match rho.rho0 {
        SingleFirmRiskMeasure::Entropic { theta } => dual_solution_entropic_sum(theta, c, x),
        SingleFirmRiskMeasure::MeanShift { b } => {
            let one = RandomVariable::constant(x.space().clone(), 1.0);
            DualSolution::new(one.clone(), vec![one; x.n_firms()], b + c)
        }
        SingleFirmRiskMeasure::AcceptanceSet(_) => {
            Err(Error::Unsupported("closed-form dual needs an entropic or mean-shift ρ0".into()))
        }
    }
}

/// `ρ(X̄) − (⟨X̄, Ξ⟩_n − penalty)`; nonnegative for feasible pairs.
pub fn dual_gap(rho: &ComposedRiskMeasure, x: &SystemLoss, sol: &DualSolution) -> Result<f64> {
    if !sol.xi.space().probabilities().eq(x.space().probabilities()) {
        return Err(Error::MismatchedSpace);
    }
    Ok(evaluate(rho, x)? - (sol.pairing(x)? - sol.penalty))
}

const FEASIBILITY_TOL: f64 = 1e-9;

/// Sampled evidence that `(ξ, Ξ)` is dual feasible with the stated
/// penalty: sign and normalization constraints, the Fenchel-type bound
/// `⟨Y, ξ⟩ − m + ⟨Z̄, Ξ⟩_n − ⟨V, ξ⟩ ≤ penalty` over epigraph samples
/// `m ≥ ρ0(Y)` and `V ≥ Λ(Z̄)`, and the cone inequalities of the positively
/// homogeneous parts.
pub fn verify_dual_feasibility(
    rho: &ComposedRiskMeasure,
    sol: &DualSolution,
    samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    rho.rule.check_dim(sol.n_firms())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = sol.xi.space().clone();
    let n = sol.n_firms();
    let mut report = CheckReport::default();

    let mut nonneg = Tracker::new("nonnegativity", "ξ ≥ 0 and Ξ_i ≥ 0", 0.0).exact();
    let lowest = sol
        .xi
        .values()
        .iter()
        .chain(sol.big_xi.iter().flat_map(|c| c.values()))
        .fold(f64::INFINITY, |m, v| m.min(*v));
    nonneg.record(lowest, 1.0, || format!("smallest entry {lowest}"));
    report.push(nonneg.finish());

    let mut norm = Tracker::new("normalization", "⟨1, ξ⟩ = 1", 1e-10).exact();
    let mass = sol.xi.expectation();
    norm.record(-(mass - 1.0).abs(), 1.0, || format!("⟨1, ξ⟩ = {mass}"));
    report.push(norm.finish());

    let mut bound = Tracker::new("penalty-bound", "sampled epigraph pairs stay below the penalty", FEASIBILITY_TOL);
    let mut rho0_cone = Tracker::new("rho0-cone", "m − ⟨Y, ξ⟩ ≥ 0 on the epigraph of ρ0", FEASIBILITY_TOL);
    let mut rule_cone = Tracker::new("rule-cone", "⟨Y, ξ⟩ − ⟨Z̄, Ξ⟩_n ≥ 0 whenever Y ≥ Λ(Z̄)", FEASIBILITY_TOL);
    if !sol.penalty.is_finite() {
        bound.note("penalty is not finite");
    }
    for _ in 0..samples.max(1) {
        let scale = rng.gen_range(0.1..4.0);
        let z = random_system(&mut rng, &space, n, scale);
        let agg = aggregate_random(&rho.rule, &z)?;
        let slack: Vec<f64> = (0..space.len()).map(|_| rng.gen_range(0.0..0.5)).collect();
        let v = RandomVariable::new(space.clone(), agg.values().iter().zip(&slack).map(|(a, b)| a + b).collect())?;
        let y = RandomVariable::new(space.clone(), random_vector(&mut rng, space.len(), scale))?;
        let m = single_firm::evaluate(&rho.rho0, &y)? + rng.gen_range(0.0..0.5);

        let y_xi = y.dot(&sol.xi)?;
        let v_xi = v.dot(&sol.xi)?;
        let z_big = sol.pairing(&z)?;
        let lhs = y_xi - m + z_big - v_xi;
        bound.record(sol.penalty - lhs, lhs.abs(), || {
            format!("Z̄ = {}, Y = {}: {lhs} > penalty {}", fmt_vec(&z.to_flat()), fmt_vec(y.values()), sol.penalty)
        });
        if rho.rho0.is_positively_homogeneous() {
            rho0_cone.record(m - y_xi, m.abs(), || format!("Y = {}, m = {m}", fmt_vec(y.values())));
        }
        if rho.rule.is_positively_homogeneous() {
            rule_cone.record(v_xi - z_big, v_xi.abs(), || format!("Z̄ = {}", fmt_vec(&z.to_flat())));
        }
    }
    report.push(bound.finish());
    if rho.rho0.is_positively_homogeneous() {
        report.push(rho0_cone.finish());
    }
    if rho.rule.is_positively_homogeneous() {
        report.push(rule_cone.finish());
    }
    if rho.is_positively_homogeneous() {
        let mut total = Tracker::new("mass-bound", "⟨1_n, Ξ⟩_n ≤ n", 1e-10).exact();
        let mass: f64 = sol.big_xi.iter().map(|c| c.expectation()).sum();
        total.record(n as f64 - mass, n as f64, || format!("⟨1_n, Ξ⟩_n = {mass} > {n}"));
        report.push(total.finish());
    }
    Ok(report)
}

/// Right directional derivative `δ₊ρ(X̄, V̄)`: chain rule through the
/// gradient of `ρ0` when it exists, finite differences otherwise.
pub fn directional_derivative(rho: &ComposedRiskMeasure, x: &SystemLoss, v: &SystemLoss) -> Result<f64> {
    if rho.rho0.is_differentiable() {
        let xi = single_firm::gradient_density(&rho.rho0, &aggregate_random(&rho.rule, x)?)?;
        let inner = gateaux_aggregate(&rho.rule, x, v, DerivativeSide::Right)?;
        return inner.dot(xi.as_rv());
    }
    let h = fd_step(x.sup_norm());
    Ok((evaluate(rho, &x.axpy(h, v)?)? - evaluate(rho, x)?) / h)
}

/// Two-sided Gâteaux derivative `δρ(X̄, V̄)`; fails at kinks.
pub fn gateaux_derivative(rho: &ComposedRiskMeasure, x: &SystemLoss, v: &SystemLoss) -> Result<f64> {
    if rho.rho0.is_differentiable() {
        let xi = single_firm::gradient_density(&rho.rho0, &aggregate_random(&rho.rule, x)?)?;
        let inner = gateaux_aggregate(&rho.rule, x, v, DerivativeSide::TwoSided)?;
        return inner.dot(xi.as_rv());
    }
    let h = fd_step(x.sup_norm());
    let base = evaluate(rho, x)?;
    let right = (evaluate(rho, &x.axpy(h, v)?)? - base) / h;
    let left = (base - evaluate(rho, &x.axpy(-h, v)?)?) / h;
    if (right - left).abs() > 1e-4 * (1.0 + right.abs()) {
        return Err(Error::NotDifferentiable(format!("one-sided derivatives {left} and {right} differ")));
    }
    Ok(0.5 * (left + right))
}

/// Measures with a two-sided directional derivative.
pub trait DifferentiableRisk: SystemicRisk {
    fn gateaux(&self, x: &SystemLoss, v: &SystemLoss) -> Result<f64>;
}

impl DifferentiableRisk for ComposedRiskMeasure {
    fn gateaux(&self, x: &SystemLoss, v: &SystemLoss) -> Result<f64> {
        gateaux_derivative(self, x, v)
    }
}

/// Gradient `Ξ` with `Ξ_i = ∇ρ0(Λ(X̄)) · ∂_iΛ(X̄)`; fails at kinks of `Λ`.
pub fn gradient(rho: &ComposedRiskMeasure, x: &SystemLoss) -> Result<Vec<RandomVariable>> {
    let xi = single_firm::gradient_density(&rho.rho0, &aggregate_random(&rho.rule, x)?)?;
    let n = x.n_firms();
    (0..n)
        .map(|i| {
            let mut unit = vec![0.0; n];
            unit[i] = 1.0;
            let values = (0..x.n_scenarios())
                .map(|k| Ok(xi.values()[k] * gateaux_point(&rho.rule, &x.scenario(k), &unit, DerivativeSide::TwoSided)?))
                .collect::<Result<Vec<_>>>()?;
            RandomVariable::new(x.space().clone(), values)
        })
        .collect()
}

/// Sampled check of `⟨Ū − X̄, Ξ⟩_n ≤ ρ(Ū) − ρ(X̄)`. Samples mix random
/// perturbations with constant shifts and rescalings of `X̄`.
pub fn subgradient_check<R: SystemicRisk + ?Sized>(
    rho: &R,
    x: &SystemLoss,
    big_xi: &[RandomVariable],
    samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    if big_xi.len() != x.n_firms() {
        return Err(Error::DimensionMismatch { expected: x.n_firms(), got: big_xi.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = rho.evaluate(x)?;
    let mut t = Tracker::new("subgradient", "⟨Ū − X̄, Ξ⟩_n ≤ ρ(Ū) − ρ(X̄)", FEASIBILITY_TOL);
    for s in 0..samples.max(1) {
        let u = match s % 3 {
            0 => {
                let scale = rng.gen_range(0.01..2.0);
                let noise = random_system(&mut rng, x.space(), x.n_firms(), scale);
                x.axpy(1.0, &noise)?
            }
            1 => {
                let shift = rng.gen_range(-2.0..2.0);
                x.map(|v| v + shift)
            }
            _ => x.scale(rng.gen_range(0.0..2.0)),
        };
        let d = u.zip_with(x, |a, b| a - b)?;
        let inner: f64 = d.rows().iter().zip(big_xi).map(|(r, c)| r.dot(c)).sum::<Result<f64>>()?;
        let ru = rho.evaluate(&u)?;
        t.record(ru - base - inner, ru.abs().max(base.abs()), || {
            format!("Ū = {}: ρ(Ū) − ρ(X̄) = {} < ⟨Ū − X̄, Ξ⟩ = {inner}", fmt_vec(&u.to_flat()), ru - base)
        });
    }
    let mut report = CheckReport::default();
    report.push(t.finish());
    Ok(report)
}

const AXIOM_TOL: f64 = 1e-9;

/// `z` with `ρ(z·1_n) = target`, by bisection along the diagonal.
fn diagonal_preimage<R: SystemicRisk + ?Sized>(rho: &R, n: usize, target: f64) -> Option<f64> {
    let g = |z: f64| rho.evaluate_point(&vec![z; n]).map(|v| v - target).unwrap_or(f64::NAN);
    let z = bisect_root(g, (-target.abs() - 1.0, target.abs() + 1.0)).ok()?;
    let hit = g(z);
    (hit.abs() <= 1e-8 * (1.0 + target.abs())).then_some(z)
}

/// Randomized check of monotonicity (S1), outcome convexity (S2a), risk
/// convexity (S2b), positive homogeneity (S3), preference consistency (S4),
/// surjectivity (S5, diagonal scan) and normalization (S6). The premises of
/// S2b and S4 are met exactly by building the comparison system on the
/// diagonal, scenario by scenario.
pub fn check_systemic_axioms<R: SystemicRisk + ?Sized>(
    rho: &R,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    if let Some(expected) = rho.n_firms() {
        if expected != n {
            return Err(Error::DimensionMismatch { expected, got: n });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s1 = Tracker::new("S1", "monotonicity", AXIOM_TOL);
    let mut s2a = Tracker::new("S2a", "outcome convexity", AXIOM_TOL);
    let mut s2b = Tracker::new("S2b", "risk convexity", AXIOM_TOL);
    let mut s3 = Tracker::new("S3", "positive homogeneity", AXIOM_TOL);
    let mut s4 = Tracker::new("S4", "preference consistency", AXIOM_TOL);

    for _ in 0..samples.max(1) {
        let k = rng.gen_range(2..=5);
        let space = random_space(&mut rng, k);
        let x = random_system(&mut rng, &space, n, 2.0);
        let rx = rho.evaluate(&x)?;

        let bump = random_system(&mut rng, &space, n, 1.0).map(f64::abs);
        let up = x.axpy(1.0, &bump)?;
        let ru = rho.evaluate(&up)?;
        s1.record(ru - rx, ru.abs().max(rx.abs()), || {
            format!("X̄ = {}, Ȳ = {}: ρ(X̄) = {rx} > ρ(Ȳ) = {ru}", fmt_vec(&x.to_flat()), fmt_vec(&up.to_flat()))
        });

        let y = random_system(&mut rng, &space, n, 2.0);
        let ry = rho.evaluate(&y)?;
        let a: f64 = rng.gen_range(0.0..1.0);
        let mix = x.zip_with(&y, |p, q| a * p + (1.0 - a) * q)?;
        let rm = rho.evaluate(&mix)?;
        let bound = a * rx + (1.0 - a) * ry;
        s2a.record(bound - rm, bound.abs().max(rm.abs()), || {
            format!("X̄ = {}, Ȳ = {}, α = {a}: ρ(mix) = {rm} > {bound}", fmt_vec(&x.to_flat()), fmt_vec(&y.to_flat()))
        });

        let mut diag = Vec::with_capacity(k);
        for w in 0..k {
            let target = a * rho.evaluate_point(&x.scenario(w))? + (1.0 - a) * rho.evaluate_point(&y.scenario(w))?;
            match diagonal_preimage(rho, n, target) {
                Some(z) => diag.push(z),
                None => break,
            }
        }
        if diag.len() == k {
            let z = SystemLoss::new(space.clone(), vec![diag; n])?;
            let rz = rho.evaluate(&z)?;
            s2b.record(bound - rz, bound.abs().max(rz.abs()), || {
                format!("X̄ = {}, Ȳ = {}, α = {a}: ρ(Z̄) = {rz} > {bound}", fmt_vec(&x.to_flat()), fmt_vec(&y.to_flat()))
            });
        } else {
            s2b.skip();
        }

        let c: f64 = rng.gen_range(0.0..3.0);
        let rc = rho.evaluate(&x.scale(c))?;
        s3.record(-(rc - c * rx).abs(), rc.abs().max(rx.abs()), || {
            format!("X̄ = {}, α = {c}: ρ(αX̄) = {rc} ≠ αρ(X̄) = {}", fmt_vec(&x.to_flat()), c * rx)
        });

        let mut lower = Vec::with_capacity(k);
        for w in 0..k {
            let target = rho.evaluate_point(&x.scenario(w))? - rng.gen_range(0.0..1.0);
            match diagonal_preimage(rho, n, target) {
                Some(z) => lower.push(z),
                None => break,
            }
        }
        if lower.len() == k {
            let yl = SystemLoss::new(space.clone(), vec![lower; n])?;
            let rl = rho.evaluate(&yl)?;
            s4.record(rx - rl, rx.abs().max(rl.abs()), || {
                format!("X̄ = {}, Ȳ = {}: ρ(X̄) = {rx} < ρ(Ȳ) = {rl}", fmt_vec(&x.to_flat()), fmt_vec(&yl.to_flat()))
            });
        } else {
            s4.skip();
        }
    }
    let mut report = CheckReport::default();
    report.push(s1.finish());
    report.push(s2a.finish());
    report.push(s2b.finish());
    report.push(s3.finish());
    report.push(s4.finish());
    let (real, nonneg) = surjectivity_scan_named("S5", |a| rho.evaluate_point(&vec![a; n]))?;
    report.push(real);
    report.push(nonneg);
    let mut s6 = Tracker::new("S6", "normalization: ρ(1_n) = n", 1e-10).exact();
    let r1 = rho.evaluate_point(&vec![1.0; n])?;
    s6.record(-(r1 - n as f64).abs(), n as f64, || format!("ρ(1_n) = {r1} ≠ {n}"));
    report.push(s6.finish());
    Ok(report)
}
