//! Single-firm risk measures `ρ0` on scalar random variables.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::axioms::{fmt_vec, random_space, random_vector, CheckReport, Tracker};
use crate::error::{Error, Result};
use crate::numerics::bisect_root;
use crate::scenario::{relative_entropy, Density, RandomVariable};

pub type AcceptancePredicate = Arc<dyn Fn(&RandomVariable) -> bool + Send + Sync>;

/// Acceptance set `A_0` given by a predicate; `ρ(X) = inf{m | X − m ∈ A_0}`.
#[derive(Clone)]
pub struct AcceptanceSet {
    predicate: AcceptancePredicate,
    label: String,
}

impl AcceptanceSet {
    pub fn new(label: impl Into<String>, predicate: impl Fn(&RandomVariable) -> bool + Send + Sync + 'static) -> Self {
        Self {
            predicate: Arc::new(predicate),
            label: label.into(),
        }
    }

    /// `{Z | E[Z] ≤ b}`, which reproduces the mean-shift measure.
    pub fn expected_loss_at_most(b: f64) -> Self {
        Self::new(format!("E[Z] ≤ {b}"), move |z| z.expectation() <= b)
    }

    pub fn accepts(&self, z: &RandomVariable) -> bool {
        (self.predicate)(z)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for AcceptanceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AcceptanceSet").field("label", &self.label).finish()
    }
}

#[derive(Debug, Clone)]
pub enum SingleFirmRiskMeasure {
    /// `(1/θ) ln E[exp(θX)]`
    Entropic { theta: f64 },
    /// `E[X] − b`
    MeanShift { b: f64 },
    AcceptanceSet(AcceptanceSet),
}

impl SingleFirmRiskMeasure {
    pub fn entropic(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!("θ must be > 0, got {theta}")));
        }
        Ok(Self::Entropic { theta })
    }

    pub fn mean_shift(b: f64) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::InvalidParameter(format!("B must be finite, got {b}")));
        }
        Ok(Self::MeanShift { b })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Entropic { theta } => Self::entropic(*theta).map(|_| ()),
            Self::MeanShift { b } => Self::mean_shift(*b).map(|_| ()),
            Self::AcceptanceSet(_) => Ok(()),
        }
    }

    pub fn is_positively_homogeneous(&self) -> bool {
        matches!(self, Self::MeanShift { b } if *b == 0.0)
    }

    pub fn is_differentiable(&self) -> bool {
        !matches!(self, Self::AcceptanceSet(_))
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Entropic { theta } => format!("entropic: (1/{theta}) ln E[exp({theta} X)]"),
            Self::MeanShift { b } => format!("mean shift: E[X] − {b}"),
            Self::AcceptanceSet(a) => format!("acceptance set: inf{{m | X − m ∈ {}}}", a.label()),
        }
    }
}

/// `ρ0(X)`.
pub fn evaluate(rho0: &SingleFirmRiskMeasure, x: &RandomVariable) -> Result<f64> {
    match rho0 {
        SingleFirmRiskMeasure::Entropic { theta } => Ok(entropic(x, *theta)),
        SingleFirmRiskMeasure::MeanShift { b } => Ok(x.expectation() - b),
        SingleFirmRiskMeasure::AcceptanceSet(set) => {
            let sign = |m: f64| if set.accepts(&x.map(|v| v - m)) { 1.0 } else { -1.0 };
            let m = bisect_root(sign, (x.min() - 1.0, x.max() + 1.0))?;
            let probe = 1.0 + m.abs();
            if sign(m + probe) < 0.0 || sign(m + 2.0 * probe) < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "acceptance predicate `{}` is not monotone in the subtracted capital",
                    set.label()
                )));
            }
            Ok(m)
        }
    }
}

/// Log-sum-exp form of the entropic measure.
pub(crate) fn entropic(x: &RandomVariable, theta: f64) -> f64 {
    let top = x.max();
    let sum: f64 = x
        .space()
        .probabilities()
        .iter()
        .zip(x.values())
        .map(|(p, v)| p * (theta * (v - top)).exp())
        .sum();
    top + sum.ln() / theta
}

/// `∇ρ0(X)` as a density.
pub fn gradient_density(rho0: &SingleFirmRiskMeasure, x: &RandomVariable) -> Result<Density> {
    match rho0 {
        SingleFirmRiskMeasure::Entropic { theta } => Density::exponential_tilt(x, *theta),
        SingleFirmRiskMeasure::MeanShift { .. } => Ok(Density::one(x.space().clone())),
        SingleFirmRiskMeasure::AcceptanceSet(_) => Err(Error::Unsupported(
            "gradient density is only available for entropic and mean-shift measures".into(),
        )),
    }
}

/// Penalty `ρ0*(ξ) = sup_Y E[ξY] − ρ0(Y)`; `+∞` outside its domain.
pub fn conjugate(rho0: &SingleFirmRiskMeasure, xi: &RandomVariable) -> Result<f64> {
    let mass = xi.expectation();
    let is_density = xi.values().iter().all(|v| *v >= 0.0) && (mass - 1.0).abs() <= 1e-10;
    match rho0 {
        SingleFirmRiskMeasure::Entropic { theta } => {
            if !is_density {
                return Ok(f64::INFINITY);
            }
            let d = Density::from_weights(xi.clone())?;
            Ok(relative_entropy(&d) / theta)
        }
        SingleFirmRiskMeasure::MeanShift { b } => {
            if xi.values().iter().all(|v| (v - 1.0).abs() <= 1e-10) {
                Ok(*b)
            } else {
                Ok(f64::INFINITY)
            }
        }
        SingleFirmRiskMeasure::AcceptanceSet(_) => Err(Error::Unsupported(
            "conjugate is only available for entropic and mean-shift measures".into(),
        )),
    }
}

/// `θ = 1 / Σ (1/α_i)`.
pub fn theta_from_alphas(alphas: &[f64]) -> Result<f64> {
    if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidParameter(format!("risk aversions must be > 0, got {alphas:?}")));
    }
    Ok(1.0 / alphas.iter().map(|a| 1.0 / a).sum::<f64>())
}

/// Scalar set on which constancy `ρ0(m) = m` is required.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstancySet {
    Real,
    NonNegative,
}

impl ConstancySet {
    pub fn grid(self) -> Vec<f64> {
        let lo = match self {
            ConstancySet::Real => -50.0,
            ConstancySet::NonNegative => 0.0,
        };
        (0..=200).map(|k| lo + (50.0 - lo) * k as f64 / 200.0).collect()
    }
}

const AXIOM_TOL: f64 = 1e-9;

pub fn check_single_firm_axioms(rho0: &SingleFirmRiskMeasure, samples: usize, seed: u64) -> Result<CheckReport> {
    check_single_firm_axioms_on(rho0, samples, seed, ConstancySet::Real)
}

/// Randomized check of monotonicity (R1), convexity (R2), positive
/// homogeneity (R3), translation (R4), subadditivity (R5) and constancy on
/// `constancy` (R6).
pub fn check_single_firm_axioms_on(
    rho0: &SingleFirmRiskMeasure,
    samples: usize,
    seed: u64,
    constancy: ConstancySet,
) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r1 = Tracker::new("R1", "monotonicity: X ≤ Y ⇒ ρ0(X) ≤ ρ0(Y)", AXIOM_TOL);
    let mut r2 = Tracker::new("R2", "convexity", AXIOM_TOL);
    let mut r3 = Tracker::new("R3", "positive homogeneity", AXIOM_TOL);
    let mut r4 = Tracker::new("R4", "translation: ρ0(X + m) = ρ0(X) + m", AXIOM_TOL);
    let mut r5 = Tracker::new("R5", "subadditivity", AXIOM_TOL);
    for s in 0..samples.max(1) {
        let k = rng.gen_range(2..=5);
        let space = random_space(&mut rng, k);
        let x = RandomVariable::new(space.clone(), random_vector(&mut rng, k, 3.0))?;
        let bump = RandomVariable::new(space.clone(), (0..k).map(|_| rng.gen_range(0.0..2.0)).collect())?;
        let y = x.zip_with(&bump, |a, b| a + b)?;
        let (rx, ry) = (evaluate(rho0, &x)?, evaluate(rho0, &y)?);
        r1.record(ry - rx, rx.abs().max(ry.abs()), || {
            format!("X = {}, Y = {}: ρ0(X) = {rx} > ρ0(Y) = {ry}", fmt_vec(x.values()), fmt_vec(y.values()))
        });

        let z = RandomVariable::new(space.clone(), random_vector(&mut rng, k, 3.0))?;
        let rz = evaluate(rho0, &z)?;
        let w: f64 = rng.gen_range(0.0..1.0);
        let mix = x.zip_with(&z, |a, b| w * a + (1.0 - w) * b)?;
        let rm = evaluate(rho0, &mix)?;
        let bound = w * rx + (1.0 - w) * rz;
        r2.record(bound - rm, bound.abs(), || {
            format!("X = {}, Y = {}, λ = {w}: ρ0(mix) = {rm} > {bound}", fmt_vec(x.values()), fmt_vec(z.values()))
        });

        let a: f64 = rng.gen_range(0.0..3.0);
        let ra = evaluate(rho0, &x.map(|v| a * v))?;
        r3.record(-(ra - a * rx).abs(), ra.abs(), || {
            format!("X = {}, a = {a}: ρ0(aX) = {ra} ≠ a ρ0(X) = {}", fmt_vec(x.values()), a * rx)
        });

        let m: f64 = rng.gen_range(-5.0..5.0);
        let rt = evaluate(rho0, &x.map(|v| v + m))?;
        r4.record(-(rt - rx - m).abs(), rt.abs(), || {
            format!("X = {}, m = {m}: ρ0(X + m) = {rt} ≠ {}", fmt_vec(x.values()), rx + m)
        });

        // Alternate independent and comonotone pairs; the latter expose
        // superadditivity of strictly convex measures.
        let other = if s % 2 == 0 {
            z.clone()
        } else {
            let c: f64 = rng.gen_range(0.5..2.0);
            x.map(|v| c * v)
        };
        let ro = evaluate(rho0, &other)?;
        let rs = evaluate(rho0, &x.zip_with(&other, |a, b| a + b)?)?;
        r5.record(rx + ro - rs, rs.abs(), || {
            format!("X = {}, Y = {}: ρ0(X + Y) = {rs} > {}", fmt_vec(x.values()), fmt_vec(other.values()), rx + ro)
        });
    }

    let label = match constancy {
        ConstancySet::Real => "ℝ",
        ConstancySet::NonNegative => "ℝ₊",
    };
    let mut r6 = Tracker::new("R6", &format!("constancy: ρ0(m) = m on {label}"), AXIOM_TOL).exact();
    let space = random_space(&mut rng, 3);
    for m in constancy.grid() {
        let v = evaluate(rho0, &RandomVariable::constant(space.clone(), m))?;
        r6.record(-(v - m).abs(), m.abs(), || format!("ρ0({m}) = {v} ≠ {m}"));
    }

    let mut report = CheckReport::default();
    for t in [r1, r2, r3, r4, r5, r6] {
        report.push(t.finish());
    }
    Ok(report)
}
