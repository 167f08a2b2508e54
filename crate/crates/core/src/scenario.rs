//! Finite probability spaces and the random objects that live on them.
//!
//! Every quantity in the engine is a finite sum over scenarios: a
//! [`ScenarioSpace`] carries K strictly positive weights, a
//! [`RandomVariable`] carries one value per scenario and a [`SystemLoss`]
//! stacks one row per firm on a shared space.

use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Tolerance on the total mass of a scenario space.
pub const PROBABILITY_SUM_TOL: f64 = 1e-12;
/// Tolerance on `E[xi] = 1` for densities.
pub const DENSITY_MASS_TOL: f64 = 1e-10;
/// Scenario-wise variance below which a group sum counts as deterministic.
pub const DETERMINISTIC_VARIANCE: f64 = 1e-18;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpace {
    probabilities: Vec<f64>,
}

impl ScenarioSpace {
    /// Builds a space from weights that must already sum to one.
    pub fn new(probabilities: Vec<f64>) -> Result<Arc<Self>> {
        if probabilities.is_empty() {
            return Err(Error::InvalidSpace("at least one scenario required".into()));
        }
        if let Some((k, p)) = probabilities
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && **p > 0.0))
        {
            return Err(Error::InvalidSpace(format!(
                "probability of scenario {k} must be strictly positive, got {p}"
            )));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
            return Err(Error::InvalidSpace(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Arc::new(Self { probabilities }))
    }

    /// Accepts weights summing to one within `tol` and rescales them exactly.
    pub fn normalized(probabilities: Vec<f64>, tol: f64) -> Result<Arc<Self>> {
        let total: f64 = probabilities.iter().sum();
        if !total.is_finite() || (total - 1.0).abs() > tol {
            return Err(Error::InvalidSpace(format!(
                "probabilities sum to {total}, outside 1 ± {tol}"
            )));
        }
        Self::new(probabilities.into_iter().map(|p| p / total).collect())
    }

    pub fn uniform(k: usize) -> Result<Arc<Self>> {
        if k == 0 {
            return Err(Error::InvalidSpace("at least one scenario required".into()));
        }
        Self::new(vec![1.0 / k as f64; k])
    }

    /// Single-atom space, used to evaluate measures at deterministic points.
    pub fn degenerate() -> Arc<Self> {
        Arc::new(Self {
            probabilities: vec![1.0],
        })
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || self.probabilities == other.probabilities
    }
}

#[derive(Debug, Clone)]
pub struct RandomVariable {
    space: Arc<ScenarioSpace>,
    values: Vec<f64>,
}

impl PartialEq for RandomVariable {
    fn eq(&self, other: &Self) -> bool {
        self.space.same_as(&other.space) && self.values == other.values
    }
}

impl RandomVariable {
    pub fn new(space: Arc<ScenarioSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                got: values.len(),
            });
        }
        Ok(Self { space, values })
    }

    pub fn constant(space: Arc<ScenarioSpace>, c: f64) -> Self {
        let values = vec![c; space.len()];
        Self { space, values }
    }

    pub fn space(&self) -> &Arc<ScenarioSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_space(&self, other: &RandomVariable) -> bool {
        self.space.same_as(&other.space)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            space: self.space.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &RandomVariable, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.same_space(other) {
            return Err(Error::MismatchedSpace);
        }
        Ok(Self {
            space: self.space.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn expectation(&self) -> f64 {
        self.space
            .probabilities
            .iter()
            .zip(&self.values)
            .map(|(p, x)| p * x)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.expectation();
        self.space
            .probabilities
            .iter()
            .zip(&self.values)
            .map(|(p, x)| p * (x - mean) * (x - mean))
            .sum()
    }

    /// `E[self * other]`, the bilinear pairing between losses and densities.
    pub fn dot(&self, other: &RandomVariable) -> Result<f64> {
        if !self.same_space(other) {
            return Err(Error::MismatchedSpace);
        }
        Ok(self
            .space
            .probabilities
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(p, (x, y))| p * x * y)
            .sum())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_deterministic(&self) -> bool {
        self.variance() < DETERMINISTIC_VARIANCE
    }
}

/// `E[x]` under the space's probabilities.
pub fn expectation(x: &RandomVariable) -> f64 {
    x.expectation()
}

/// `E[x xi]`; linear in `x`.
pub fn pairing(x: &RandomVariable, xi: &Density) -> Result<f64> {
    x.dot(xi.as_rv())
}

/// `E[xi ln xi]`, the relative entropy of the measure with density `xi`.
pub fn relative_entropy(xi: &Density) -> f64 {
    let rv = xi.as_rv();
    rv.space
        .probabilities
        .iter()
        .zip(&rv.values)
        .map(|(p, &x)| if x > 0.0 { p * x * x.ln() } else { 0.0 })
        .sum()
}

/// Nonnegative random variable with unit expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct Density(RandomVariable);

impl Density {
    pub fn new(rv: RandomVariable) -> Result<Self> {
        if let Some(v) = rv.values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidDensity(format!("negative or non-finite value {v}")));
        }
        let mass = rv.expectation();
        if (mass - 1.0).abs() > DENSITY_MASS_TOL {
            return Err(Error::InvalidDensity(format!("expectation {mass}, expected 1")));
        }
        Ok(Self(rv))
    }

    /// The density of `P` itself.
    pub fn one(space: Arc<ScenarioSpace>) -> Self {
        Self(RandomVariable::constant(space, 1.0))
    }

    /// Normalizes nonnegative weights `w` into `w / E[w]`.
    pub fn from_weights(w: RandomVariable) -> Result<Self> {
        let mass = w.expectation();
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidDensity(format!("cannot normalize mass {mass}")));
        }
        Self::new(w.map(|v| v / mass))
    }

    /// `exp(theta s) / E[exp(theta s)]`, computed with a max shift.
    pub fn exponential_tilt(s: &RandomVariable, theta: f64) -> Result<Self> {
        let top = s.max() * theta;
        let shift = if theta >= 0.0 { top } else { s.min() * theta };
        Self::from_weights(s.map(|v| (theta * v - shift).exp()))
    }

    pub fn as_rv(&self) -> &RandomVariable {
        &self.0
    }

    pub fn into_rv(self) -> RandomVariable {
        self.0
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }
}

/// Losses of `n` firms on a common scenario space; row `i` is firm `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemLoss {
    space: Arc<ScenarioSpace>,
    rows: Vec<RandomVariable>,
}

impl SystemLoss {
    pub fn new(space: Arc<ScenarioSpace>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let rows = rows
            .into_iter()
            .map(|r| RandomVariable::new(space.clone(), r))
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(space, rows)
    }

    pub fn from_rows(space: Arc<ScenarioSpace>, rows: Vec<RandomVariable>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParameter("a system needs at least one firm".into()));
        }
        if rows.iter().any(|r| !r.space.same_as(&space)) {
            return Err(Error::MismatchedSpace);
        }
        Ok(Self { space, rows })
    }

    /// Deterministic system `x̄` on `space`.
    pub fn constant(space: Arc<ScenarioSpace>, x: &[f64]) -> Result<Self> {
        let rows = x
            .iter()
            .map(|&c| RandomVariable::constant(space.clone(), c))
            .collect();
        Self::from_rows(space, rows)
    }

    /// Deterministic system on the single-atom space.
    pub fn point(x: &[f64]) -> Result<Self> {
        Self::constant(ScenarioSpace::degenerate(), x)
    }

    pub fn zeros_like(&self) -> Self {
        self.map(|_| 0.0)
    }

    pub fn space(&self) -> &Arc<ScenarioSpace> {
        &self.space
    }

    pub fn n_firms(&self) -> usize {
        self.rows.len()
    }

    pub fn n_scenarios(&self) -> usize {
        self.space.len()
    }

    pub fn rows(&self) -> &[RandomVariable] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &RandomVariable {
        &self.rows[i]
    }

    /// Firm losses in scenario `k`.
    pub fn scenario(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.values[k]).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            space: self.space.clone(),
            rows: self.rows.iter().map(|r| r.map(&f)).collect(),
        }
    }

    pub fn zip_with(&self, other: &SystemLoss, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.n_firms() != other.n_firms() {
            return Err(Error::DimensionMismatch {
                expected: self.n_firms(),
                got: other.n_firms(),
            });
        }
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.zip_with(b, &f))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            space: self.space.clone(),
            rows,
        })
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    /// `self + t * dir`.
    pub fn axpy(&self, t: f64, dir: &SystemLoss) -> Result<Self> {
        self.zip_with(dir, |x, u| x + t * u)
    }

    /// `e_i X_i`: the system that keeps firm `i` and zeroes the others.
    pub fn unit_component(&self, i: usize) -> Self {
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(j, r)| if j == i { r.clone() } else { r.map(|_| 0.0) })
            .collect();
        Self {
            space: self.space.clone(),
            rows,
        }
    }

    /// Scenario-wise `Σ_i X_i`.
    pub fn firm_sum(&self) -> RandomVariable {
        self.sum_over(0..self.n_firms())
    }

    pub fn sum_over(&self, firms: Range<usize>) -> RandomVariable {
        let mut values = vec![0.0; self.n_scenarios()];
        for r in &self.rows[firms] {
            for (acc, v) in values.iter_mut().zip(&r.values) {
                *acc += v;
            }
        }
        RandomVariable {
            space: self.space.clone(),
            values,
        }
    }

    /// Sub-system made of the firms in `firms`.
    pub fn restrict(&self, firms: Range<usize>) -> Self {
        Self {
            space: self.space.clone(),
            rows: self.rows[firms].to_vec(),
        }
    }

    /// Row-major flattening, firm by firm.
    pub fn to_flat(&self) -> Vec<f64> {
        self.rows.iter().flat_map(|r| r.values.iter().copied()).collect()
    }

    pub fn from_flat(space: Arc<ScenarioSpace>, n: usize, flat: &[f64]) -> Result<Self> {
        let k = space.len();
        if flat.len() != n * k {
            return Err(Error::DimensionMismatch {
                expected: n * k,
                got: flat.len(),
            });
        }
        Self::new(space, flat.chunks(k).map(|c| c.to_vec()).collect())
    }

    pub fn sup_norm(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.sup_norm()))
    }

    pub fn is_deterministic(&self) -> bool {
        self.rows.iter().all(|r| r.is_deterministic())
    }

    /// Componentwise `self >= other` in every scenario.
    pub fn dominates(&self, other: &SystemLoss) -> bool {
        self.to_flat()
            .iter()
            .zip(other.to_flat())
            .all(|(a, b)| *a >= b)
    }
}

/// Partition of firms `0..n` into consecutive groups, given by the
/// cumulative upper boundaries `n_1 < n_2 < … < n_h = n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupStructure {
    boundaries: Vec<usize>,
}

impl GroupStructure {
    pub fn new(boundaries: Vec<usize>, n: usize) -> Result<Self> {
        match boundaries.first() {
            None => return Err(Error::BadGroupStructure("no groups given".into())),
            Some(&0) => return Err(Error::BadGroupStructure("first boundary must be ≥ 1".into())),
            _ => {}
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadGroupStructure(format!(
                "boundaries {boundaries:?} must be strictly increasing"
            )));
        }
        if boundaries.last() != Some(&n) {
            return Err(Error::BadGroupStructure(format!(
                "last boundary must equal the number of firms {n}"
            )));
        }
        Ok(Self { boundaries })
    }

    /// One group holding every firm.
    pub fn single(n: usize) -> Result<Self> {
        Self::new(vec![n], n)
    }

    /// Every firm in its own group.
    pub fn singletons(n: usize) -> Result<Self> {
        Self::new((1..=n).collect(), n)
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn n_firms(&self) -> usize {
        *self.boundaries.last().unwrap_or(&0)
    }

    pub fn n_groups(&self) -> usize {
        self.boundaries.len()
    }

    /// Zero-based firm range of group `j`.
    pub fn group(&self, j: usize) -> Range<usize> {
        let start = if j == 0 { 0 } else { self.boundaries[j - 1] };
        start..self.boundaries[j]
    }

    pub fn groups(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.n_groups()).map(|j| self.group(j))
    }

    pub fn group_of(&self, firm: usize) -> Option<usize> {
        self.boundaries.iter().position(|&b| firm < b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSum {
    pub sum: RandomVariable,
    pub deterministic: bool,
}

/// Scenario-wise totals of each group.
pub fn group_sums(y: &SystemLoss, g: &GroupStructure) -> Result<Vec<GroupSum>> {
    if g.n_firms() != y.n_firms() {
        return Err(Error::BadGroupStructure(format!(
            "groups cover {} firms but the system has {}",
            g.n_firms(),
            y.n_firms()
        )));
    }
    Ok(g
        .groups()
        .map(|r| {
            let sum = y.sum_over(r);
            let deterministic = sum.is_deterministic();
            GroupSum { sum, deterministic }
        })
        .collect())
}
