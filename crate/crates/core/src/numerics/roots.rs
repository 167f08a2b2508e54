use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub max_doublings: usize,
}

impl Default for BisectConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            max_doublings: 60,
        }
    }
}

/// Root of a monotone `g` starting from `bracket`, widened by doubling
/// its width on both sides until the endpoint signs differ.
pub fn bisect_root<G: Fn(f64) -> f64>(g: G, bracket: (f64, f64)) -> Result<f64> {
    bisect_root_with(g, bracket, &BisectConfig::default())
}

pub fn bisect_root_with<G: Fn(f64) -> f64>(g: G, bracket: (f64, f64), cfg: &BisectConfig) -> Result<f64> {
    let (mut lo, mut hi) = if bracket.0 <= bracket.1 { bracket } else { (bracket.1, bracket.0) };
    if hi - lo <= 0.0 {
        hi = lo + 1.0;
    }
    let mut glo = g(lo);
    let mut ghi = g(hi);
    let mut doublings = 0;
    while !(glo * ghi <= 0.0) {
        if doublings == cfg.max_doublings || !(glo.is_finite() && ghi.is_finite()) {
            return Err(Error::NoBracket { lo, hi });
        }
        let width = hi - lo;
        lo -= width / 2.0;
        hi += width / 2.0;
        glo = g(lo);
        ghi = g(hi);
        doublings += 1;
    }
    if glo == 0.0 {
        return Ok(lo);
    }
    if ghi == 0.0 {
        return Ok(hi);
    }
    for _ in 0..cfg.max_iter {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 {
            return Ok(mid);
        }
        if (gm < 0.0) == (glo < 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
        if hi - lo < cfg.tol {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
