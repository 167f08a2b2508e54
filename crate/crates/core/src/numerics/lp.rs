//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Problems are stated as `minimize c·z  s.t.  A z ≥ b`, with a per-variable
//! nonnegativity flag. Free variables are split into positive and negative
//! parts internally.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const CERTIFY_TOL: f64 = 1e-8;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub nonnegative: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub argmin: Vec<f64>,
}

impl LinearProgram {
    pub fn new(
        objective: Vec<f64>,
        constraints: Vec<Vec<f64>>,
        rhs: Vec<f64>,
        nonnegative: Vec<bool>,
    ) -> Result<Self> {
        let n = objective.len();
        if nonnegative.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: nonnegative.len() });
        }
        if rhs.len() != constraints.len() {
            return Err(Error::DimensionMismatch { expected: constraints.len(), got: rhs.len() });
        }
        if let Some(row) = constraints.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: row.len() });
        }
        Ok(Self { objective, constraints, rhs, nonnegative })
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    /// Max violation of `A z ≥ b` and of the sign constraints.
    pub fn infeasibility(&self, z: &[f64]) -> f64 {
        let rows = self.constraints.iter().zip(&self.rhs).map(|(a, b)| {
            let lhs: f64 = a.iter().zip(z).map(|(x, y)| x * y).sum();
            (b - lhs).max(0.0)
        });
        let signs = z
            .iter()
            .zip(&self.nonnegative)
            .map(|(v, nn)| if *nn { (-v).max(0.0) } else { 0.0 });
        rows.chain(signs).fold(0.0, f64::max)
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, e: usize) {
        let p = self.rows[r][e];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rhs[r] /= p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let factor = self.rows[i][e];
            if factor != 0.0 {
                for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                self.rhs[i] -= factor * pivot_rhs;
            }
        }
        self.basis[r] = e;
    }

    /// Runs the simplex on `cost` restricted to columns `< allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<()> {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j]
                    - self
                        .rows
                        .iter()
                        .zip(&self.basis)
                        .map(|(row, &b)| cost[b] * row[j])
                        .sum::<f64>();
                reduced < -PIVOT_TOL
            });
            let Some(e) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[e] > PIVOT_TOL {
                    let ratio = self.rhs[i] / row[e];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else { return Err(Error::Unbounded) };
            self.pivot(r, e);
        }
        Err(Error::NumericalBreakdown("simplex pivot limit reached".into()))
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis.iter().zip(&self.rhs).map(|(&b, v)| cost[b] * v).sum()
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.n_vars();
    let m = lp.constraints.len();

    // column layout: structural parts, then surplus, then artificials
    let mut columns: Vec<(usize, f64)> = Vec::new();
    for (j, nn) in lp.nonnegative.iter().enumerate() {
        columns.push((j, 1.0));
        if !nn {
            columns.push((j, -1.0));
        }
    }
    let nw = columns.len();
    let width = nw + 2 * m;

    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for (i, (a, &b)) in lp.constraints.iter().zip(&lp.rhs).enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; width];
        for (c, &(j, s)) in columns.iter().enumerate() {
            row[c] = sign * s * a[j];
        }
        row[nw + i] = -sign;
        row[nw + m + i] = 1.0;
        rows.push(row);
        rhs.push(sign * b);
    }
    let mut t = Tableau { rows, rhs, basis: (nw + m..nw + 2 * m).collect() };

    let mut phase1 = vec![0.0; width];
    phase1[nw + m..].iter_mut().for_each(|c| *c = 1.0);
    t.optimize(&phase1, width)?;
    let scale = 1.0 + lp.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if t.objective(&phase1) > PIVOT_TOL * scale {
        return Err(Error::Infeasible);
    }

    // drive artificials out of the basis, dropping redundant rows
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= nw + m {
            match (0..nw + m).find(|&j| t.rows[i][j].abs() > PIVOT_TOL) {
                Some(j) => t.pivot(i, j),
                None => {
                    t.rows.remove(i);
                    t.rhs.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    let mut phase2 = vec![0.0; width];
    for (c, &(j, s)) in columns.iter().enumerate() {
        phase2[c] = s * lp.objective[j];
    }
    t.optimize(&phase2, nw + m)?;

    let mut z = vec![0.0; n];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < nw {
            let (j, s) = columns[b];
            z[j] += s * t.rhs[r];
        }
    }
    let value = lp.objective.iter().zip(&z).map(|(c, v)| c * v).sum();
    let violation = lp.infeasibility(&z);
    if violation > CERTIFY_TOL * scale {
        return Err(Error::NumericalBreakdown(format!(
            "simplex solution violates constraints by {violation:e}"
        )));
    }
    Ok(LpSolution { value, argmin: z })
}
