//! Aggregation rules `Λ: ℝⁿ → ℝ` that compress firm losses into one
//! systemic loss, evaluated pointwise and scenario by scenario.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::axioms::{fmt_vec, random_vector, CheckOutcome, CheckReport, CheckStatus, Tracker};
use crate::error::{Error, Result};
use crate::numerics::{self, LinearProgram};
use crate::scenario::{RandomVariable, SystemLoss};

/// Distance to a kink below which a point is treated as sitting on it.
pub const KINK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum AggregationRule {
    /// `Σ x_i`
    Sum,
    /// `Σ x_i − c`
    SumShift { c: f64 },
    /// `Σ x_i⁺`
    Loss,
    /// `Σ (x_i − b)⁺`, `b ≥ 0`
    LossThreshold { b: f64 },
    /// `exp(γ Σ_{i∈A} x_i⁺) − 1 + Σ_{i∉A} x_i⁺`; indices are zero-based.
    Critical { critical: Vec<usize>, gamma: f64 },
    /// `Σ (1/α_i) exp(α_i x_i)`
    ExpUtility { alphas: Vec<f64> },
    /// Contagion rule: `min Σ (y_i + γ b_i)` over `y, b ≥ 0` with
    /// `b_i + y_i ≥ x_i + Σ_j Π_ji y_j`, where `Π_ij` is the share of firm
    /// i's liabilities held by firm j.
    Contagion { pi: Vec<Vec<f64>>, gamma: f64 },
}

/// Which directional derivative to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeSide {
    TwoSided,
    Right,
}

impl AggregationRule {
    pub fn loss_threshold(b: f64) -> Result<Self> {
        let r = Self::LossThreshold { b };
        r.validate()?;
        Ok(r)
    }

    pub fn critical(critical: Vec<usize>, gamma: f64) -> Result<Self> {
        let r = Self::Critical { critical, gamma };
        r.validate()?;
        Ok(r)
    }

    pub fn exp_utility(alphas: Vec<f64>) -> Result<Self> {
        let r = Self::ExpUtility { alphas };
        r.validate()?;
        Ok(r)
    }

    pub fn contagion(pi: Vec<Vec<f64>>, gamma: f64) -> Result<Self> {
        let r = Self::Contagion { pi, gamma };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self {
            Self::Sum | Self::Loss => Ok(()),
            Self::SumShift { c } if !c.is_finite() => bad(format!("shift c must be finite, got {c}")),
            Self::SumShift { .. } => Ok(()),
            Self::LossThreshold { b } if !(*b >= 0.0 && b.is_finite()) => {
                bad(format!("threshold b must be ≥ 0, got {b}"))
            }
            Self::LossThreshold { .. } => Ok(()),
            Self::Critical { critical, gamma } => {
                if !(*gamma > 0.0 && gamma.is_finite()) {
                    return bad(format!("critical γ must be > 0, got {gamma}"));
                }
                if critical.is_empty() {
                    return bad("critical set must be nonempty".into());
                }
                Ok(())
            }
            Self::ExpUtility { alphas } => {
                if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
                    return bad(format!("risk aversions must be > 0, got {alphas:?}"));
                }
                Ok(())
            }
            Self::Contagion { pi, gamma } => {
                if !(*gamma > 1.0 && gamma.is_finite()) {
                    return bad(format!("contagion γ must be > 1, got {gamma}"));
                }
                let n = pi.len();
                if n == 0 {
                    return bad("liability matrix is empty".into());
                }
                for (i, row) in pi.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::DimensionMismatch { expected: n, got: row.len() });
                    }
                    if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                        return bad(format!("row {i} of Π has entries outside [0, 1]"));
                    }
                    let s: f64 = row.iter().sum();
                    if s > 1.0 + 1e-12 {
                        return bad(format!("row {i} of Π sums to {s} > 1"));
                    }
                }
                Ok(())
            }
        }
    }

    /// Number of firms the rule is tied to, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            Self::ExpUtility { alphas } => Some(alphas.len()),
            Self::Contagion { pi, .. } => Some(pi.len()),
            _ => None,
        }
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if let Some(expected) = self.fixed_dim() {
            if expected != n {
                return Err(Error::DimensionMismatch { expected, got: n });
            }
        }
        if let Self::Critical { critical, .. } = self {
            if let Some(&i) = critical.iter().find(|&&i| i >= n) {
                return Err(Error::DimensionMismatch { expected: n, got: i + 1 });
            }
        }
        Ok(())
    }

    pub fn is_positively_homogeneous(&self) -> bool {
        match self {
            Self::Sum | Self::Loss | Self::Contagion { .. } => true,
            Self::SumShift { c } => *c == 0.0,
            Self::LossThreshold { b } => *b == 0.0,
            Self::Critical { .. } | Self::ExpUtility { .. } => false,
        }
    }

    /// Linear in the firm losses, so directional derivatives are additive.
    pub fn is_additive(&self) -> bool {
        matches!(self, Self::Sum) || matches!(self, Self::SumShift { c } if *c == 0.0)
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Sum => "sum: Σ x_i".into(),
            Self::SumShift { c } => format!("shifted sum: Σ x_i − {c}"),
            Self::Loss => "losses only: Σ x_i⁺".into(),
            Self::LossThreshold { b } => format!("losses beyond threshold: Σ (x_i − {b})⁺"),
            Self::Critical { critical, gamma } => {
                let set: Vec<String> = critical.iter().map(|i| (i + 1).to_string()).collect();
                format!("critical nodes {{{}}}: exp({gamma} Σ_A x_i⁺) − 1 + Σ_rest x_i⁺", set.join(","))
            }
            Self::ExpUtility { alphas } => format!("exponential utility: Σ (1/α_i) exp(α_i x_i), α = {alphas:?}"),
            Self::Contagion { gamma, .. } => format!("contagion LP with γ = {gamma}"),
        }
    }
}

fn positive_part_right(x: f64, v: f64) -> f64 {
    if x.abs() <= KINK_TOL {
        v.max(0.0)
    } else if x > 0.0 {
        v
    } else {
        0.0
    }
}

fn contagion_lp(pi: &[Vec<f64>], gamma: f64, x: &[f64]) -> Result<LinearProgram> {
    let n = pi.len();
    let mut objective = vec![1.0; n];
    objective.extend(std::iter::repeat_n(gamma, n));
    let constraints = (0..n)
        .map(|i| {
            let mut row = vec![0.0; 2 * n];
            for (j, pj) in pi.iter().enumerate() {
                row[j] -= pj[i];
            }
            row[i] += 1.0;
            row[n + i] = 1.0;
            row
        })
        .collect();
    LinearProgram::new(objective, constraints, x.to_vec(), vec![true; 2 * n])
}

/// `Λ(x̄)` at a deterministic point.
pub fn aggregate_point(rule: &AggregationRule, x: &[f64]) -> Result<f64> {
    rule.check_dim(x.len())?;
    Ok(match rule {
        AggregationRule::Sum => x.iter().sum(),
        AggregationRule::SumShift { c } => x.iter().sum::<f64>() - c,
        AggregationRule::Loss => x.iter().map(|v| v.max(0.0)).sum(),
        AggregationRule::LossThreshold { b } => x.iter().map(|v| (v - b).max(0.0)).sum(),
        AggregationRule::Critical { critical, gamma } => {
            let (mut inner, mut rest) = (0.0, 0.0);
            for (i, v) in x.iter().enumerate() {
                if critical.contains(&i) {
                    inner += v.max(0.0);
                } else {
                    rest += v.max(0.0);
                }
            }
            (gamma * inner).exp_m1() + rest
        }
        AggregationRule::ExpUtility { alphas } => {
            alphas.iter().zip(x).map(|(a, v)| (a * v).exp() / a).sum()
        }
        AggregationRule::Contagion { pi, gamma } => numerics::solve_lp(&contagion_lp(pi, *gamma, x)?)?.value,
    })
}

/// Scenario-wise `Λ ∘ X̄`.
pub fn aggregate_random(rule: &AggregationRule, x: &SystemLoss) -> Result<RandomVariable> {
    rule.check_dim(x.n_firms())?;
    let values = (0..x.n_scenarios())
        .map(|k| aggregate_point(rule, &x.scenario(k)))
        .collect::<Result<Vec<_>>>()?;
    RandomVariable::new(x.space().clone(), values)
}

/// `f_Λ(a) = Λ(a·1_n)`.
pub fn f_lambda(rule: &AggregationRule, n: usize, a: f64) -> Result<f64> {
    aggregate_point(rule, &vec![a; n])
}

fn right_derivative_point(rule: &AggregationRule, x: &[f64], v: &[f64]) -> Result<f64> {
    Ok(match rule {
        AggregationRule::Sum | AggregationRule::SumShift { .. } => v.iter().sum(),
        AggregationRule::Loss => x.iter().zip(v).map(|(&xi, &vi)| positive_part_right(xi, vi)).sum(),
        AggregationRule::LossThreshold { b } => {
            x.iter().zip(v).map(|(&xi, &vi)| positive_part_right(xi - b, vi)).sum()
        }
        AggregationRule::Critical { critical, gamma } => {
            let (mut inner, mut d_inner, mut d_rest) = (0.0, 0.0, 0.0);
            for (i, (&xi, &vi)) in x.iter().zip(v).enumerate() {
                if critical.contains(&i) {
                    inner += xi.max(0.0);
                    d_inner += positive_part_right(xi, vi);
                } else {
                    d_rest += positive_part_right(xi, vi);
                }
            }
            gamma * (gamma * inner).exp() * d_inner + d_rest
        }
        AggregationRule::ExpUtility { alphas } => {
            alphas.iter().zip(x).zip(v).map(|((a, xi), vi)| (a * xi).exp() * vi).sum()
        }
        AggregationRule::Contagion { .. } => {
            let scale = x.iter().fold(0.0f64, |m, t| m.max(t.abs()));
            let h = numerics::fd_step(scale);
            let shifted: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
            (aggregate_point(rule, &shifted)? - aggregate_point(rule, x)?) / h
        }
    })
}

/// Directional derivative of `Λ` at the point `x` along `v`.
pub fn gateaux_point(rule: &AggregationRule, x: &[f64], v: &[f64], side: DerivativeSide) -> Result<f64> {
    rule.check_dim(x.len())?;
    if v.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: v.len() });
    }
    let right = right_derivative_point(rule, x, v)?;
    if side == DerivativeSide::Right {
        return Ok(right);
    }
    let neg: Vec<f64> = v.iter().map(|t| -t).collect();
    let left = -right_derivative_point(rule, x, &neg)?;
    if (left - right).abs() > KINK_TOL {
        return Err(Error::NotDifferentiable(format!(
            "Λ has a kink at {}: left {left}, right {right}",
            fmt_vec(x)
        )));
    }
    Ok(right)
}

/// Scenario-wise directional derivative `δΛ(X̄, V̄)`.
pub fn gateaux_aggregate(
    rule: &AggregationRule,
    x: &SystemLoss,
    v: &SystemLoss,
    side: DerivativeSide,
) -> Result<RandomVariable> {
    if !x.space().probabilities().eq(v.space().probabilities()) {
        return Err(Error::MismatchedSpace);
    }
    if x.n_firms() != v.n_firms() {
        return Err(Error::DimensionMismatch { expected: x.n_firms(), got: v.n_firms() });
    }
    let values = (0..x.n_scenarios())
        .map(|k| gateaux_point(rule, &x.scenario(k), &v.scenario(k), side))
        .collect::<Result<Vec<_>>>()?;
    RandomVariable::new(x.space().clone(), values)
}

const AXIOM_TOL: f64 = 1e-10;

/// Randomized check of the aggregation rule properties: monotonicity (A1),
/// convexity (A2), surjectivity onto ℝ or ℝ₊ (A3, scan evidence along the
/// diagonal), positive homogeneity (A4) and normalization (A5).
pub fn check_ar_axioms(rule: &AggregationRule, n: usize, samples: usize, seed: u64) -> Result<CheckReport> {
    rule.check_dim(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eval = |x: &[f64]| aggregate_point(rule, x);

    let mut a1 = Tracker::new("A1", "monotonicity: x ≥ y ⇒ Λ(x) ≥ Λ(y)", AXIOM_TOL);
    let mut a2 = Tracker::new("A2", "convexity", AXIOM_TOL);
    let mut a4 = Tracker::new("A4", "positive homogeneity", 1e-9);
    for _ in 0..samples.max(1) {
        let x = random_vector(&mut rng, n, 3.0);
        let y: Vec<f64> = x.iter().map(|v| v - rng.gen_range(0.0..2.0)).collect();
        let (lx, ly) = (eval(&x)?, eval(&y)?);
        a1.record(lx - ly, lx.abs().max(ly.abs()), || {
            format!("x = {}, y = {}: Λ(x) = {lx}, Λ(y) = {ly}", fmt_vec(&x), fmt_vec(&y))
        });

        let z = random_vector(&mut rng, n, 3.0);
        let w: f64 = rng.gen_range(0.0..1.0);
        let mix: Vec<f64> = x.iter().zip(&z).map(|(a, b)| w * a + (1.0 - w) * b).collect();
        let (lz, lm) = (eval(&z)?, eval(&mix)?);
        let bound = w * lx + (1.0 - w) * lz;
        a2.record(bound - lm, bound.abs(), || {
            format!("x = {}, y = {}, α = {w}: Λ(mix) = {lm} > {bound}", fmt_vec(&x), fmt_vec(&z))
        });

        let a: f64 = rng.gen_range(0.0..3.0);
        let scaled: Vec<f64> = x.iter().map(|v| a * v).collect();
        let ls = eval(&scaled)?;
        a4.record(-(ls - a * lx).abs(), ls.abs().max(1.0), || {
            format!("x = {}, a = {a}: Λ(a x) = {ls} ≠ a Λ(x) = {}", fmt_vec(&x), a * lx)
        });
    }

    let mut report = CheckReport::default();
    report.push(a1.finish());
    report.push(a2.finish());
    let (real, nonneg) = surjectivity_scan(|a| f_lambda(rule, n, a))?;
    report.push(real);
    report.push(nonneg);
    report.push(a4.finish());

    let mut a5 = Tracker::new("A5", "normalization: Λ(1_n) = n", 1e-12).exact();
    let l1 = f_lambda(rule, n, 1.0)?;
    a5.record(-(l1 - n as f64).abs(), n as f64, || format!("Λ(1_n) = {l1} ≠ {n}"));
    report.push(a5.finish());
    Ok(report)
}

/// Scans `f` over a diagonal grid and reports whether its range looks like
/// ℝ (`{name}[R]`) and like ℝ₊ (`{name}[R+]`).
pub(crate) fn surjectivity_scan_named(
    name: &str,
    f: impl Fn(f64) -> Result<f64>,
) -> Result<(CheckOutcome, CheckOutcome)> {
    const LIMIT: f64 = 100.0;
    const POINTS: usize = 2001;
    const REACH: f64 = 10.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..POINTS {
        let a = -LIMIT + 2.0 * LIMIT * k as f64 / (POINTS - 1) as f64;
        let v = f(a)?;
        if v.is_nan() {
            continue;
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let summary = format!("scanned range [{lo:.6e}, {hi:.6e}] on the diagonal a·1_n, |a| ≤ {LIMIT}");
    let build = |label: &str, desc: &str, ok: bool| CheckOutcome {
        name: format!("{name}[{label}]"),
        description: desc.to_string(),
        status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        evidence_only: true,
        worst_margin: 0.0,
        tolerance: 0.0,
        samples: POINTS,
        counterexample: if ok { None } else { Some(summary.clone()) },
        note: Some(summary.clone()),
    };
    let is_real = lo <= -REACH && hi >= REACH;
    let is_nonneg = (-1e-9..=1e-6).contains(&lo) && hi >= REACH;
    Ok((
        build("R", "surjectivity onto ℝ (scan evidence)", is_real),
        build("R+", "surjectivity onto ℝ₊ (scan evidence)", is_nonneg),
    ))
}

fn surjectivity_scan(f: impl Fn(f64) -> Result<f64>) -> Result<(CheckOutcome, CheckOutcome)> {
    surjectivity_scan_named("A3", f)
}
