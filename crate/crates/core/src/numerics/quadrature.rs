use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Composite Simpson on `[0, 1]` refined by doubling the number of panels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    pub initial_nodes: usize,
    pub tol: f64,
    pub max_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            initial_nodes: 201,
            tol: 1e-8,
            max_nodes: 3201,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_nodes < 3 || self.initial_nodes.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "initial_nodes must be odd and ≥ 3, got {}",
                self.initial_nodes
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Composite Simpson rule with `nodes` (odd) equally spaced nodes on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, nodes: usize) -> f64 {
    debug_assert!(nodes >= 3 && nodes % 2 == 1);
    let panels = nodes - 1;
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// `∫_0^1 f(γ) dγ`, doubling the panel count until successive estimates
/// differ by less than `cfg.tol`.
pub fn integrate_unit_interval<F: Fn(f64) -> f64>(f: F, cfg: &QuadratureConfig) -> Result<f64> {
    cfg.validate()?;
    let mut nodes = cfg.initial_nodes;
    let mut estimate = simpson(&f, 0.0, 1.0, nodes);
    if !estimate.is_finite() {
        return Err(Error::NoConvergence { nodes, gap: f64::NAN });
    }
    let mut gap: Option<f64> = None;
    loop {
        let next_nodes = 2 * (nodes - 1) + 1;
        if next_nodes > cfg.max_nodes {
            return match gap {
                Some(g) if g > 100.0 * cfg.tol => Err(Error::NoConvergence { nodes, gap: g }),
                _ => Ok(estimate),
            };
        }
        let next = simpson(&f, 0.0, 1.0, next_nodes);
        let g = (next - estimate).abs();
        if !g.is_finite() {
            return Err(Error::NoConvergence { nodes: next_nodes, gap: g });
        }
        nodes = next_nodes;
        estimate = next;
        if g < cfg.tol {
            return Ok(estimate);
        }
        gap = Some(g);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn examples() {
        let cfg = QuadratureConfig::default();
        assert_abs_diff_eq!(integrate_unit_interval(|g| g, &cfg).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(integrate_unit_interval(|g| g * g, &cfg).unwrap(), 1.0 / 3.0, epsilon = 1e-14);
        let e = integrate_unit_interval(f64::exp, &cfg).unwrap();
        assert_abs_diff_eq!(e, std::f64::consts::E - 1.0, epsilon = 1e-8);
    }

    #[test]
    fn exact_for_cubics_at_any_resolution() {
        let p = |x: f64| 3.0 * x.powi(3) - 2.0 * x * x + 0.5 * x - 7.0;
        let exact = 0.75 - 2.0 / 3.0 + 0.25 - 7.0;
        for nodes in [3, 5, 11, 201] {
            assert_abs_diff_eq!(simpson(p, 0.0, 1.0, nodes), exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = QuadratureConfig { initial_nodes: 4, ..Default::default() };
        assert!(integrate_unit_interval(|g| g, &cfg).is_err());
        let cfg = QuadratureConfig { tol: 0.0, ..Default::default() };
        assert!(integrate_unit_interval(|g| g, &cfg).is_err());
    }

    #[test]
    fn reports_no_convergence() {
        // highly oscillatory integrand with a tiny node budget
        let cfg = QuadratureConfig { initial_nodes: 3, tol: 1e-14, max_nodes: 9 };
        let r = integrate_unit_interval(|g| (400.0 * g).sin(), &cfg);
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }
}
