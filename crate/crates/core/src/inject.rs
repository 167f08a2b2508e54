//! "First inject capital" measures: the least total capital, allocated with
//! deterministic group totals, that brings the expected sum of firm losses
//! down to a threshold `B`. Closed forms cover exponential losses
//! `l_i(x) = (1/α_i) exp(α_i x)`; a brute-force oracle covers the rest.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::axioms::{fmt_vec, random_space, random_system, CheckOutcome, CheckReport, CheckStatus, Tracker};
use crate::composed::{check_systemic_axioms, DifferentiableRisk, SystemicRisk};
use crate::error::{Error, Result};
use crate::numerics::{bisect_root, coordinate_grid_minimize, grid_minimize};
use crate::scenario::{relative_entropy, Density, GroupStructure, RandomVariable, SystemLoss};
use crate::single_firm::{entropic, theta_from_alphas};

/// Increasing, strictly convex loss function of a single firm.
pub trait LossFunction: Send + Sync {
    fn value(&self, x: f64) -> f64;

    /// `d` with `E[l(Z − d)] = target`, or `None` if no such `d` exists.
    fn solve_shift(&self, z: &RandomVariable, target: f64) -> Option<f64> {
        let g = |d: f64| z.space().probabilities().iter().zip(z.values()).map(|(p, v)| p * self.value(v - d)).sum::<f64>() - target;
        let d = bisect_root(g, (z.min() - 1.0, z.max() + 1.0)).ok()?;
        (g(d).abs() <= 1e-9 * (1.0 + target.abs())).then_some(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialLoss {
    pub alpha: f64,
}

impl LossFunction for ExponentialLoss {
    fn value(&self, x: f64) -> f64 {
        (self.alpha * x).exp() / self.alpha
    }

    fn solve_shift(&self, z: &RandomVariable, target: f64) -> Option<f64> {
        if !(target > 0.0) {
            return None;
        }
        Some(entropic(z, self.alpha) - (self.alpha * target).ln() / self.alpha)
    }
}

/// Conjugate `l*(y) = (y/α)(ln y − 1)` of the exponential loss.
pub fn exp_conjugate(alpha: f64, y: f64) -> f64 {
    if y == 0.0 {
        0.0
    } else {
        y * (y.ln() - 1.0) / alpha
    }
}

/// Derivative `(l*)'(y) = ln(y)/α` of the exponential conjugate.
pub fn exp_conjugate_derivative(alpha: f64, y: f64) -> f64 {
    y.ln() / alpha
}

#[derive(Debug, Clone, PartialEq)]
pub struct InjectCapitalProblem {
    alphas: Vec<f64>,
    b: f64,
    groups: GroupStructure,
}

impl InjectCapitalProblem {
    pub fn new(alphas: Vec<f64>, b: f64, groups: GroupStructure) -> Result<Self> {
        theta_from_alphas(&alphas)?;
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("threshold B must be > 0, got {b}")));
        }
        if groups.n_firms() != alphas.len() {
            return Err(Error::BadGroupStructure(format!(
                "groups cover {} firms but {} risk aversions were given",
                groups.n_firms(),
                alphas.len()
            )));
        }
        Ok(Self { alphas, b, groups })
    }

    /// All firms in one group.
    pub fn single_group(alphas: Vec<f64>, b: f64) -> Result<Self> {
        let g = GroupStructure::single(alphas.len())?;
        Self::new(alphas, b, g)
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn threshold(&self) -> f64 {
        self.b
    }

    pub fn groups(&self) -> &GroupStructure {
        &self.groups
    }

    pub fn n_firms(&self) -> usize {
        self.alphas.len()
    }

    /// `θ = 1 / Σ_i (1/α_i)` over all firms.
    pub fn theta(&self) -> f64 {
        1.0 / self.alphas.iter().map(|a| 1.0 / a).sum::<f64>()
    }

    /// `ln(θB)`.
    pub fn log_theta_b(&self) -> f64 {
        (self.theta() * self.b).ln()
    }

    pub fn losses(&self) -> Vec<ExponentialLoss> {
        self.alphas.iter().map(|&alpha| ExponentialLoss { alpha }).collect()
    }

    fn check(&self, x: &SystemLoss) -> Result<()> {
        if x.n_firms() != self.n_firms() {
            return Err(Error::DimensionMismatch { expected: self.n_firms(), got: x.n_firms() });
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        format!(
            "inject capital with exponential losses, α = {:?}, B = {}, group boundaries {:?}",
            self.alphas,
            self.b,
            self.groups.boundaries()
        )
    }
}

/// `θ_j = 1 / Σ_{i∈I_j} (1/α_i)`.
pub fn theta_group(p: &InjectCapitalProblem, j: usize) -> Result<f64> {
    if j >= p.groups.n_groups() {
        return Err(Error::BadGroupStructure(format!("group {j} of {}", p.groups.n_groups())));
    }
    theta_from_alphas(&p.alphas[p.groups.group(j)])
}

/// Group allocations `d_j = (1/θ_j) ln E[exp(θ_j S_j)] − ln(θB)/θ_j`.
pub fn group_allocation(p: &InjectCapitalProblem, x: &SystemLoss) -> Result<Vec<f64>> {
    p.check(x)?;
    let ltb = p.log_theta_b();
    (0..p.groups.n_groups())
        .map(|j| {
            let tj = theta_group(p, j)?;
            Ok(entropic(&x.sum_over(p.groups.group(j)), tj) - ltb / tj)
        })
        .collect()
}

/// `R(X̄) = Σ_j d_j`.
pub fn evaluate_closed_form(p: &InjectCapitalProblem, x: &SystemLoss) -> Result<f64> {
    Ok(group_allocation(p, x)?.iter().sum())
}

/// Per-firm densities: firm `l ∈ I_j` receives `exp(θ_j S_j) / E[exp(θ_j S_j)]`.
pub fn dual_density(p: &InjectCapitalProblem, x: &SystemLoss) -> Result<Vec<Density>> {
    p.check(x)?;
    let mut out = Vec::with_capacity(p.n_firms());
    for j in 0..p.groups.n_groups() {
        let range = p.groups.group(j);
        let d = Density::exponential_tilt(&x.sum_over(range.clone()), theta_group(p, j)?)?;
        out.extend(std::iter::repeat_n(d, range.len()));
    }
    Ok(out)
}

/// `Σ_i (1/α_i)(E[Ξ_i ln Ξ_i] + ln(θB))`.
pub fn penalty(p: &InjectCapitalProblem, xi: &[Density]) -> Result<f64> {
    if xi.len() != p.n_firms() {
        return Err(Error::DimensionMismatch { expected: p.n_firms(), got: xi.len() });
    }
    let ltb = p.log_theta_b();
    Ok(p.alphas.iter().zip(xi).map(|(a, d)| (relative_entropy(d) + ltb) / a).sum())
}

/// The multiplier `λ* = θB`.
pub fn lambda_star(p: &InjectCapitalProblem) -> f64 {
    p.theta() * p.b
}

/// `B + Σ_i E[l_i*(λΞ_i)] − λ Σ_i E[Ξ_i (l_i*)'(λΞ_i)]`, whose root is `λ*`.
pub fn lambda_equation(p: &InjectCapitalProblem, xi: &[Density], lambda: f64) -> f64 {
    let mut total = p.b;
    for (a, d) in p.alphas.iter().zip(xi) {
        for (prob, &v) in d.as_rv().space().probabilities().iter().zip(d.values()) {
            let y = lambda * v;
            let slope = if v == 0.0 { 0.0 } else { v * exp_conjugate_derivative(*a, y) };
            total += prob * (exp_conjugate(*a, y) - lambda * slope);
        }
    }
    total
}

/// `λ*` found by bisection on the scalar equation, in log-scale.
pub fn lambda_star_bisect(p: &InjectCapitalProblem, xi: &[Density]) -> Result<f64> {
    let u = bisect_root(|u| lambda_equation(p, xi, u.exp()), (-1.0, 1.0))?;
    Ok(u.exp())
}

/// Optimal allocation
/// `Y_i = X_i − (θ_j/α_i) S_j + (1/α_i) ln E[exp(θ_j S_j)] − ln(θB)/α_i`.
pub fn optimal_allocation(p: &InjectCapitalProblem, x: &SystemLoss) -> Result<SystemLoss> {
    p.check(x)?;
    let ltb = p.log_theta_b();
    let mut rows = Vec::with_capacity(p.n_firms());
    for j in 0..p.groups.n_groups() {
        let range = p.groups.group(j);
        let tj = theta_group(p, j)?;
        let s = x.sum_over(range.clone());
        let log_e = tj * entropic(&s, tj);
        for i in range {
            let a = p.alphas[i];
            let row = x.row(i).zip_with(&s, |xi, si| xi - tj / a * si + log_e / a - ltb / a)?;
            rows.push(row);
        }
    }
    SystemLoss::from_rows(x.space().clone(), rows)
}

/// Optimal allocation in the form `Y_i = X_i − (l_i*)'(λ* Ξ_i)`.
pub fn optimal_allocation_conjugate(p: &InjectCapitalProblem, x: &SystemLoss) -> Result<SystemLoss> {
    let xi = dual_density(p, x)?;
    let lambda = lambda_star(p);
    let rows = (0..p.n_firms())
        .map(|i| {
            let a = p.alphas[i];
            x.row(i).zip_with(xi[i].as_rv(), |v, d| v - exp_conjugate_derivative(a, lambda * d))
        })
        .collect::<Result<Vec<_>>>()?;
    SystemLoss::from_rows(x.space().clone(), rows)
}

/// `E[Σ_i l_i(X_i − Y_i)]`.
pub fn expected_loss(losses: &[impl LossFunction], x: &SystemLoss, y: &SystemLoss) -> Result<f64> {
    if x.n_firms() != losses.len() || y.n_firms() != losses.len() {
        return Err(Error::DimensionMismatch { expected: losses.len(), got: x.n_firms().min(y.n_firms()) });
    }
    let probs = x.space().probabilities();
    let mut total = 0.0;
    for (i, l) in losses.iter().enumerate() {
        for (k, p) in probs.iter().enumerate() {
            total += p * l.value(x.row(i).values()[k] - y.row(i).values()[k]);
        }
    }
    Ok(total)
}

/// Dual valuation of the optimal allocation, `(E[Y_i Ξ_i])_i`.
pub fn systemic_capital_allocation_dual(p: &InjectCapitalProblem, x: &SystemLoss) -> Result<Vec<f64>> {
    let y = optimal_allocation(p, x)?;
    let xi = dual_density(p, x)?;
    y.rows().iter().zip(&xi).map(|(r, d)| r.dot(d.as_rv())).collect()
}

/// Group `j` as a stand-alone one-group problem with `B_j = (θ/θ_j) B`.
pub fn group_subproblem(p: &InjectCapitalProblem, j: usize) -> Result<InjectCapitalProblem> {
    let tj = theta_group(p, j)?;
    InjectCapitalProblem::single_group(p.alphas[p.groups.group(j)].to_vec(), p.theta() / tj * p.b)
}

/// `δR(X̄, V̄) = Σ_i E[V_i Ξ_i^X̄]`.
pub fn directional_derivative(p: &InjectCapitalProblem, x: &SystemLoss, v: &SystemLoss) -> Result<f64> {
    p.check(v)?;
    let xi = dual_density(p, x)?;
    v.rows().iter().zip(&xi).map(|(r, d)| r.dot(d.as_rv())).sum()
}

impl SystemicRisk for InjectCapitalProblem {
    fn n_firms(&self) -> Option<usize> {
        Some(self.alphas.len())
    }

    fn evaluate(&self, x: &SystemLoss) -> Result<f64> {
        evaluate_closed_form(self, x)
    }
}

impl DifferentiableRisk for InjectCapitalProblem {
    fn gateaux(&self, x: &SystemLoss, v: &SystemLoss) -> Result<f64> {
        directional_derivative(self, x, v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub allocation: SystemLoss,
    /// `E[Σ l_i(X_i − Y_i)]` at the returned allocation.
    pub expected_loss: f64,
    pub evaluations: usize,
}

/// Largest problem the brute-force oracle accepts.
pub const ORACLE_MAX_FIRMS: usize = 3;
pub const ORACLE_MAX_SCENARIOS: usize = 3;

/// Brute-force `R(X̄)` for the exponential losses of `p`.
pub fn evaluate_numerical_oracle(p: &InjectCapitalProblem, x: &SystemLoss) -> Result<OracleResult> {
    p.check(x)?;
    numerical_oracle(&p.losses(), p.b, &p.groups, x)
}

/// Brute-force `inf{Σ_i E[Y_i] | Ȳ has deterministic group sums,
/// E[Σ l_i(X_i − Y_i)] ≤ B}` for arbitrary loss functions.
///
/// Parameters are the group totals `d_1, …, d_{h−1}` and, per group and
/// scenario, the allocations of all but the group's last firm; the last
/// firm takes the rest of its group total. The last group total is solved
/// from the binding acceptance constraint.
#[allow(clippy::needless_range_loop)]
pub fn numerical_oracle<L: LossFunction>(
    losses: &[L],
    b: f64,
    groups: &GroupStructure,
    x: &SystemLoss,
) -> Result<OracleResult> {
    let n = x.n_firms();
    let k = x.n_scenarios();
    if n != losses.len() || n != groups.n_firms() {
        return Err(Error::DimensionMismatch { expected: losses.len(), got: n });
    }
    if n > ORACLE_MAX_FIRMS || k > ORACLE_MAX_SCENARIOS {
        return Err(Error::ScaleTooLarge(format!(
            "oracle handles at most {ORACLE_MAX_FIRMS} firms and {ORACLE_MAX_SCENARIOS} scenarios, got {n}×{k}"
        )));
    }
    let h = groups.n_groups();
    let ranges: Vec<_> = groups.groups().collect();
    let space = x.space().clone();

    // Offsets of the free per-scenario splits of each group.
    let mut split_offset = Vec::with_capacity(h);
    let mut dim = h - 1;
    for r in &ranges {
        split_offset.push(dim);
        dim += (r.len() - 1) * k;
    }

    let last = ranges[h - 1].clone();
    let last_firm = last.end - 1;
    let build = |params: &[f64]| -> Option<(Vec<Vec<f64>>, f64)> {
        let mut y = vec![vec![0.0; k]; n];
        let mut totals = params[..h - 1].to_vec();
        for (j, r) in ranges.iter().enumerate() {
            for (slot, i) in r.clone().take(r.len() - 1).enumerate() {
                for w in 0..k {
                    y[i][w] = params[split_offset[j] + slot * k + w];
                }
            }
            if j + 1 < h {
                let rest = r.end - 1;
                for w in 0..k {
                    let used: f64 = r.clone().take(r.len() - 1).map(|i| y[i][w]).sum();
                    y[rest][w] = totals[j] - used;
                }
            }
        }
        // Losses of everything except the last firm fix the budget left for it.
        let probs = space.probabilities();
        let mut spent = 0.0;
        for i in 0..n {
            if i == last_firm {
                continue;
            }
            for w in 0..k {
                spent += probs[w] * losses[i].value(x.row(i).values()[w] - y[i][w]);
            }
        }
        let others: Vec<f64> = (0..k).map(|w| last.clone().take(last.len() - 1).map(|i| y[i][w]).sum()).collect();
        let z = RandomVariable::new(
            space.clone(),
            (0..k).map(|w| x.row(last_firm).values()[w] + others[w]).collect(),
        )
        .ok()?;
        let d = losses[last_firm].solve_shift(&z, b - spent)?;
        for w in 0..k {
            y[last_firm][w] = d - others[w];
        }
        totals.push(d);
        Some((y, totals.iter().sum()))
    };
    let objective = |params: &[f64]| build(params).map_or(f64::INFINITY, |(_, v)| v);

    let scale = 1.0 + x.sup_norm();
    let mut centre = Vec::with_capacity(dim);
    for r in ranges.iter().take(h - 1) {
        centre.push(r.clone().map(|i| x.row(i).expectation()).sum::<f64>());
    }
    for r in &ranges {
        for i in r.clone().take(r.len() - 1) {
            centre.extend_from_slice(x.row(i).values());
        }
    }

    let mut width = 4.0 * scale + 4.0;
    let mut evaluations = 0;
    for _ in 0..6 {
        let bounds: Vec<(f64, f64)> = centre.iter().map(|c| (c - width, c + width)).collect();
        let result = match dim {
            0..=2 => grid_minimize(objective, &bounds, 101, 5),
            3 => grid_minimize(objective, &bounds, 41, 6),
            _ => coordinate_grid_minimize(objective, &bounds, &centre, 41, 6, 400, 1e-13),
        };
        evaluations += result.evaluations;
        let on_edge = result
            .argmin
            .iter()
            .zip(&bounds)
            .any(|(v, (lo, hi))| (v - lo).abs() < 1e-3 * width || (hi - v).abs() < 1e-3 * width);
        if result.value.is_finite() && !on_edge {
            let (rows, value) = build(&result.argmin).expect("finite objective implies a feasible build");
            let allocation = SystemLoss::new(space.clone(), rows)?;
            let expected_loss = expected_loss(losses, x, &allocation)?;
            return Ok(OracleResult { value, allocation, expected_loss, evaluations });
        }
        if result.value.is_finite() {
            centre = result.argmin;
        }
        width *= 2.0;
    }
    Err(Error::NoConvergence { nodes: evaluations, gap: f64::NAN })
}

const PROPERTY_TOL: f64 = 1e-9;

/// Systemic axioms of `R` plus continuity evidence and, when
/// `B = Σ(1/α_i)`, the normalization `R(0) = 0`.
pub fn verify_inject_properties(p: &InjectCapitalProblem, samples: usize, seed: u64) -> Result<CheckReport> {
    let mut report = check_systemic_axioms(p, p.n_firms(), samples, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = p.n_firms();

    let mut cont = Tracker::new("continuity", "|R(X̄ + V̄) − R(X̄)| ≤ Σ_i sup|V_i|", PROPERTY_TOL);
    for _ in 0..samples.max(1) {
        let k = rng.gen_range(2..=5);
        let space = random_space(&mut rng, k);
        let x = random_system(&mut rng, &space, n, 2.0);
        let eps = 10f64.powf(rng.gen_range(-6.0..0.0));
        let v = random_system(&mut rng, &space, n, eps);
        let bound: f64 = v.rows().iter().map(|r| r.sup_norm()).sum();
        let diff = (evaluate_closed_form(p, &x.axpy(1.0, &v)?)? - evaluate_closed_form(p, &x)?).abs();
        cont.record(bound - diff, 1.0, || format!("X̄ = {}, shift size {bound}: change {diff}", fmt_vec(&x.to_flat())));
    }
    report.push(cont.finish());

    let natural: f64 = p.alphas.iter().map(|a| 1.0 / a).sum();
    if (p.b - natural).abs() <= 1e-12 * natural {
        let mut zero = Tracker::new("R(0)=0", "B = Σ 1/α_i gives R(0) = 0", 1e-10).exact();
        let r0 = evaluate_closed_form(p, &SystemLoss::point(&vec![0.0; n])?)?;
        zero.record(-r0.abs(), 1.0, || format!("R(0) = {r0}"));
        report.push(zero.finish());
    } else {
        report.push(CheckOutcome {
            name: "R(0)=0".into(),
            description: "B = Σ 1/α_i gives R(0) = 0".into(),
            status: CheckStatus::Skipped,
            evidence_only: false,
            worst_margin: 0.0,
            tolerance: 1e-10,
            samples: 0,
            counterexample: None,
            note: Some(format!("B = {} differs from Σ 1/α_i = {natural}", p.b)),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composed::{evaluate as evaluate_composed, ComposedRiskMeasure};
    use crate::numerics::{directional_derivative_fd, Side};
    use crate::scenario::{group_sums, ScenarioSpace};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn space(p: &[f64]) -> Arc<ScenarioSpace> {
        ScenarioSpace::new(p.to_vec()).unwrap()
    }

    fn toy() -> SystemLoss {
        SystemLoss::new(space(&[0.5, 0.5]), vec![vec![0.0, 0.0], vec![0.0, 3f64.ln()]]).unwrap()
    }

    fn random_problem<R: Rng>(rng: &mut R, n: usize) -> InjectCapitalProblem {
        let alphas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..3.0)).collect();
        let mut cuts: Vec<usize> = (1..n).filter(|_| rng.gen_bool(0.5)).collect();
        cuts.push(n);
        let g = GroupStructure::new(cuts, n).unwrap();
        InjectCapitalProblem::new(alphas, rng.gen_range(0.2..4.0), g).unwrap()
    }

    #[test]
    fn theta_group_examples() {
        let p = InjectCapitalProblem::single_group(vec![1.0, 1.0], 2.0).unwrap();
        assert_eq!(theta_group(&p, 0).unwrap(), 0.5);
        let p = InjectCapitalProblem::new(vec![1.0, 1.0], 2.0, GroupStructure::singletons(2).unwrap()).unwrap();
        assert_eq!((theta_group(&p, 0).unwrap(), theta_group(&p, 1).unwrap()), (1.0, 1.0));
        let p = InjectCapitalProblem::new(vec![1.0, 2.0, 3.0], 1.0, GroupStructure::new(vec![2, 3], 3).unwrap()).unwrap();
        assert_abs_diff_eq!(theta_group(&p, 0).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(theta_group(&p, 1).unwrap(), 3.0, epsilon = 1e-15);
        assert!(theta_group(&p, 2).is_err());
    }

    #[test]
    fn validation() {
        assert!(InjectCapitalProblem::single_group(vec![1.0], 0.0).is_err());
        assert!(InjectCapitalProblem::single_group(vec![1.0, -1.0], 1.0).is_err());
        assert!(InjectCapitalProblem::new(vec![1.0], 1.0, GroupStructure::single(2).unwrap()).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let p = InjectCapitalProblem::single_group(vec![1.0, 1.0], 2.0).unwrap();
        let det = SystemLoss::constant(space(&[0.5, 0.5]), &[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(evaluate_closed_form(&p, &det).unwrap(), 2.0, epsilon = 1e-14);

        let expected = 2.0 * (0.5 * (1.0 + 3f64.sqrt())).ln();
        assert_abs_diff_eq!(evaluate_closed_form(&p, &toy()).unwrap(), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(expected, 0.623810, epsilon = 1e-6);

        let q = InjectCapitalProblem::new(vec![1.0, 1.0], 2.0, GroupStructure::singletons(2).unwrap()).unwrap();
        assert_abs_diff_eq!(evaluate_closed_form(&q, &det).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn oracle_matches_closed_form_on_examples() {
        let p = InjectCapitalProblem::single_group(vec![1.0, 1.0], 2.0).unwrap();
        let det = SystemLoss::constant(space(&[0.5, 0.5]), &[1.0, 1.0]).unwrap();
        for x in [det.clone(), toy()] {
            let o = evaluate_numerical_oracle(&p, &x).unwrap();
            assert!((o.value - evaluate_closed_form(&p, &x).unwrap()).abs() <= 1e-3, "{}", o.value);
            assert!((o.expected_loss - 2.0).abs() <= 1e-3);
        }
        let q = InjectCapitalProblem::new(vec![1.0, 1.0], 2.0, GroupStructure::singletons(2).unwrap()).unwrap();
        let o = evaluate_numerical_oracle(&q, &det).unwrap();
        assert!((o.value - 2.0).abs() <= 1e-3, "{}", o.value);
    }

    #[test]
    fn oracle_matches_closed_form_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..6 {
            let n = rng.gen_range(1..=3);
            let k = rng.gen_range(1..=3);
            let p = random_problem(&mut rng, n);
            let sp = random_space(&mut rng, k);
            let x = random_system(&mut rng, &sp, n, 1.0);
            let o = evaluate_numerical_oracle(&p, &x).unwrap();
            let cf = evaluate_closed_form(&p, &x).unwrap();
            assert!((o.value - cf).abs() <= 1e-3, "{p:?} {x:?}: oracle {} vs {cf}", o.value);
            assert!((o.expected_loss - p.threshold()).abs() <= 1e-3);
            for gs in group_sums(&o.allocation, p.groups()).unwrap() {
                assert!(gs.deterministic);
            }
        }
    }

    #[test]
    fn oracle_rejects_large_problems() {
        let p = InjectCapitalProblem::single_group(vec![1.0; 4], 1.0).unwrap();
        let x = SystemLoss::constant(space(&[1.0]), &[0.0; 4]).unwrap();
        assert!(matches!(evaluate_numerical_oracle(&p, &x), Err(Error::ScaleTooLarge(_))));
    }

    #[test]
    fn lambda_examples() {
        let p = InjectCapitalProblem::single_group(vec![1.0, 1.0], 2.0).unwrap();
        assert_eq!(lambda_star(&p), 1.0);
        let q = InjectCapitalProblem::single_group(vec![2.0, 2.0], 1.0).unwrap();
        assert_eq!(lambda_star(&q), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..20 {
            let p = random_problem(&mut rng, 3);
            let sp = random_space(&mut rng, 4);
            let x = random_system(&mut rng, &sp, 3, 2.0);
            let xi = dual_density(&p, &x).unwrap();
            let l = lambda_star_bisect(&p, &xi).unwrap();
            assert!((l - lambda_star(&p)).abs() <= 1e-8 * lambda_star(&p).max(1.0));
        }
    }

    #[test]
    fn dual_density_examples() {
        let p = InjectCapitalProblem::single_group(vec![1.0, 1.0], 2.0).unwrap();
        let det = SystemLoss::constant(space(&[0.5, 0.5]), &[1.0, 1.0]).unwrap();
        assert!(dual_density(&p, &det).unwrap().iter().all(|d| d.values().iter().all(|v| (v - 1.0).abs() < 1e-15)));
        let xi = dual_density(&p, &toy()).unwrap();
        let s3 = 3f64.sqrt();
        for d in &xi {
            assert_abs_diff_eq!(d.values()[0], 2.0 / (1.0 + s3), epsilon = 1e-14);
            assert_abs_diff_eq!(d.values()[1], 2.0 * s3 / (1.0 + s3), epsilon = 1e-14);
        }
        let q = InjectCapitalProblem::new(vec![1.0, 1.0, 2.0], 1.0, GroupStructure::new(vec![1, 3], 3).unwrap()).unwrap();
        let x = SystemLoss::new(space(&[0.5, 0.5]), vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, -0.5]]).unwrap();
        let xi = dual_density(&q, &x).unwrap();
        assert_eq!(xi[1], xi[2]);
        assert_ne!(xi[0], xi[1]);
    }

    #[test]
    fn penalty_examples() {
        let p = InjectCapitalProblem::single_group(vec![1.0, 1.0], 2.0).unwrap();
        let one = Density::one(space(&[0.5, 0.5]));
        assert_abs_diff_eq!(penalty(&p, &[one.clone(), one.clone()]).unwrap(), 0.0, epsilon = 1e-15);
        let e = InjectCapitalProblem::single_group(vec![1.0, 1.0], 2.0 * std::f64::consts::E).unwrap();
        assert_abs_diff_eq!(penalty(&e, &[one.clone(), one]).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn strong_duality() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..100 {
            let n = rng.gen_range(1..=4);
            let p = random_problem(&mut rng, n);
            let k = rng.gen_range(1..=8);
            let sp = random_space(&mut rng, k);
            let x = random_system(&mut rng, &sp, n, 2.0);
            let xi = dual_density(&p, &x).unwrap();
            let pairing: f64 = x.rows().iter().zip(&xi).map(|(r, d)| r.dot(d.as_rv()).unwrap()).sum();
            let dual = pairing - penalty(&p, &xi).unwrap();
            assert!((dual - evaluate_closed_form(&p, &x).unwrap()).abs() <= 1e-8);
        }
    }

    #[test]
    fn identification_with_shifted_entropic_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..100 {
            let n = rng.gen_range(1..=4);
            let alphas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..3.0)).collect();
            let p = InjectCapitalProblem::single_group(alphas, rng.gen_range(0.2..4.0)).unwrap();
            let sp = random_space(&mut rng, 5);
            let x = random_system(&mut rng, &sp, n, 2.0);
            let theta = p.theta();
            let ses = ComposedRiskMeasure::entropic_sum(theta).unwrap();
            let expected = evaluate_composed(&ses, &x).unwrap() - p.log_theta_b() / theta;
            assert!((evaluate_closed_form(&p, &x).unwrap() - expected).abs() <= 1e-12);
        }
    }

    #[test]
    fn allocation_examples() {
        let p = InjectCapitalProblem::single_group(vec![1.0, 1.0], 2.0).unwrap();
        let det = SystemLoss::constant(space(&[0.5, 0.5]), &[1.0, 1.0]).unwrap();
        let y = optimal_allocation(&p, &det).unwrap();
        for r in y.rows() {
            assert!(r.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
        }

        let q = InjectCapitalProblem::new(vec![1.0, 2.0], 3.0, GroupStructure::singletons(2).unwrap()).unwrap();
        let x = SystemLoss::new(space(&[0.3, 0.7]), vec![vec![0.0, 1.0], vec![2.0, -1.0]]).unwrap();
        let y = optimal_allocation(&q, &x).unwrap();
        for i in 0..2 {
            let a = q.alphas()[i];
            let expected = entropic(x.row(i), a) - q.log_theta_b() / a;
            assert!(y.row(i).values().iter().all(|v| (v - expected).abs() < 1e-12));
        }
    }

    #[test]
    fn allocation_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for _ in 0..100 {
            let n = rng.gen_range(1..=4);
            let p = random_problem(&mut rng, n);
            let k = rng.gen_range(1..=6);
            let sp = random_space(&mut rng, k);
            let x = random_system(&mut rng, &sp, n, 2.0);
            let y = optimal_allocation(&p, &x).unwrap();
            let y2 = optimal_allocation_conjugate(&p, &x).unwrap();
            for (a, b) in y.to_flat().iter().zip(y2.to_flat()) {
                assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
            }
            let acc = expected_loss(&p.losses(), &x, &y).unwrap();
            assert!((acc - p.threshold()).abs() <= 1e-8 * p.threshold().max(1.0));
            let d = group_allocation(&p, &x).unwrap();
            for (gs, dj) in group_sums(&y, p.groups()).unwrap().iter().zip(&d) {
                assert!(gs.deterministic);
                assert!((gs.sum.expectation() - dj).abs() <= 1e-10 * (1.0 + dj.abs()));
            }
            assert!((d.iter().sum::<f64>() - evaluate_closed_form(&p, &x).unwrap()).abs() <= 1e-10);
        }
    }

    #[test]
    fn group_allocation_examples() {
        let p = InjectCapitalProblem::single_group(vec![1.0, 2.0], 0.7).unwrap();
        let x = toy();
        assert_abs_diff_eq!(group_allocation(&p, &x).unwrap()[0], evaluate_closed_form(&p, &x).unwrap(), epsilon = 1e-15);
        let q = InjectCapitalProblem::new(vec![1.0, 2.0], 0.7, GroupStructure::new(vec![1, 2], 2).unwrap()).unwrap();
        let det = SystemLoss::constant(space(&[0.5, 0.5]), &[1.5, -0.5]).unwrap();
        let d = group_allocation(&q, &det).unwrap();
        assert_abs_diff_eq!(d[0], 1.5 - q.log_theta_b() / 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d[1], -0.5 - q.log_theta_b() / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn decomposition_into_groups() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        for _ in 0..50 {
            let n = rng.gen_range(2..=5);
            let p = random_problem(&mut rng, n);
            let sp = random_space(&mut rng, 4);
            let x = random_system(&mut rng, &sp, n, 2.0);
            let mut total = 0.0;
            for j in 0..p.groups().n_groups() {
                let sub = group_subproblem(&p, j).unwrap();
                total += evaluate_closed_form(&sub, &x.restrict(p.groups().group(j))).unwrap();
            }
            assert!((total - evaluate_closed_form(&p, &x).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn property_examples() {
        let p = InjectCapitalProblem::single_group(vec![1.0, 2.0], 1.5).unwrap();
        let report = verify_inject_properties(&p, 100, 7).unwrap();
        for a in ["S1", "S2a", "S2b", "S4", "continuity", "R(0)=0"] {
            assert!(report.passed(a), "{a}: {:?}", report.get(a));
        }
        assert!(report.failed("S3"));
        let q = InjectCapitalProblem::single_group(vec![1.0, 2.0], 1.0).unwrap();
        assert_eq!(verify_inject_properties(&q, 10, 7).unwrap().status("R(0)=0"), Some(CheckStatus::Skipped));
    }

    #[test]
    fn dual_capital_allocation_examples() {
        let p = InjectCapitalProblem::single_group(vec![1.0, 1.0], 3.0).unwrap();
        let det = SystemLoss::constant(space(&[0.5, 0.5]), &[1.0, 2.0]).unwrap();
        let cs = systemic_capital_allocation_dual(&p, &det).unwrap();
        let y = optimal_allocation(&p, &det).unwrap();
        assert_abs_diff_eq!(cs[0], y.row(0).values()[0], epsilon = 1e-14);
        assert_abs_diff_eq!(cs[1], y.row(1).values()[0], epsilon = 1e-14);

        let x = random_system(&mut ChaCha8Rng::seed_from_u64(1), &space(&[0.2, 0.3, 0.5]), 2, 2.0);
        let cs = systemic_capital_allocation_dual(&p, &x).unwrap();
        assert_abs_diff_eq!(cs.iter().sum::<f64>(), evaluate_closed_form(&p, &x).unwrap(), epsilon = 1e-12);

        let same = SystemLoss::new(space(&[0.5, 0.5]), vec![vec![0.3, 1.0], vec![0.3, 1.0]]).unwrap();
        let cs = systemic_capital_allocation_dual(&p, &same).unwrap();
        assert_abs_diff_eq!(cs[0], cs[1], epsilon = 1e-14);
    }

    #[test]
    fn derivative_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..10 {
            let p = random_problem(&mut rng, 3);
            let sp = random_space(&mut rng, 3);
            let x = random_system(&mut rng, &sp, 3, 1.5);
            let v = random_system(&mut rng, &sp, 3, 1.0);
            let fd = directional_derivative_fd(
                |q| evaluate_closed_form(&p, &SystemLoss::from_flat(sp.clone(), 3, q).unwrap()).unwrap(),
                &x.to_flat(),
                &v.to_flat(),
                Side::Central,
            );
            assert!((directional_derivative(&p, &x, &v).unwrap() - fd).abs() <= 1e-5);
        }
    }
}
