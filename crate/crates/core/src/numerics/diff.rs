//! Finite-difference directional derivatives.

/// Which difference quotient to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `(F(X+hU) − F(X−hU)) / 2h`
    Central,
    /// `(F(X+hU) − F(X)) / h`, the right derivative used at kinks.
    Forward,
}

/// Step size `1e-5 · max(1, scale)`.
pub fn fd_step(scale: f64) -> f64 {
    1e-5 * scale.abs().max(1.0)
}

/// Derivative at `t = 0` of `g(t) = F(X + tU)`; `scale` is `‖X‖_∞`.
pub fn line_derivative<G: Fn(f64) -> f64>(g: G, scale: f64, side: Side) -> f64 {
    let h = fd_step(scale);
    match side {
        Side::Central => (g(h) - g(-h)) / (2.0 * h),
        Side::Forward => (g(h) - g(0.0)) / h,
    }
}

/// Vector-valued variant of [`line_derivative`].
pub fn line_derivative_vec<G: Fn(f64) -> Vec<f64>>(g: G, scale: f64, side: Side) -> Vec<f64> {
    let h = fd_step(scale);
    let (hi, lo, width) = match side {
        Side::Central => (g(h), g(-h), 2.0 * h),
        Side::Forward => (g(h), g(0.0), h),
    };
    hi.iter().zip(&lo).map(|(a, b)| (a - b) / width).collect()
}

/// Directional derivative of `f` at `x` along `u` for functions on `ℝ^d`.
pub fn directional_derivative_fd<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], u: &[f64], side: Side) -> f64 {
    assert_eq!(x.len(), u.len(), "point and direction must have equal length");
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    line_derivative(
        |t| {
            let shifted: Vec<f64> = x.iter().zip(u).map(|(xi, ui)| xi + t * ui).collect();
            f(&shifted)
        },
        scale,
        side,
    )
}
