//! Brute-force nested grid search, used as an oracle for small problems.

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub value: f64,
    pub argmin: Vec<f64>,
    pub evaluations: usize,
}

const ZOOM: f64 = 10.0;

/// Tensor-grid search over `bounds` with `resolution` points per axis,
/// followed by `refinements` passes that each shrink the box 10× around
/// the incumbent (clipped to the original box). Non-finite values are
/// treated as infeasible.
pub fn grid_minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    bounds: &[(f64, f64)],
    resolution: usize,
    refinements: usize,
) -> GridResult {
    let dim = bounds.len();
    let res = resolution.max(1);
    let mut best = GridResult {
        value: f64::INFINITY,
        argmin: bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect(),
        evaluations: 0,
    };
    if dim == 0 {
        best.value = f(&[]);
        best.evaluations = 1;
        return best;
    }
    let mut boxes: Vec<(f64, f64)> = bounds.to_vec();
    let mut point = vec![0.0; dim];
    let mut index = vec![0usize; dim];
    for pass in 0..=refinements {
        if pass > 0 {
            boxes = boxes
                .iter()
                .zip(bounds)
                .zip(&best.argmin)
                .map(|(((lo, hi), (blo, bhi)), c)| {
                    let half = 0.5 * (hi - lo) / ZOOM;
                    ((c - half).max(*blo), (c + half).min(*bhi))
                })
                .collect();
        }
        index.iter_mut().for_each(|i| *i = 0);
        loop {
            for d in 0..dim {
                let (lo, hi) = boxes[d];
                point[d] = if res == 1 {
                    0.5 * (lo + hi)
                } else {
                    lo + (hi - lo) * index[d] as f64 / (res - 1) as f64
                };
            }
            let v = f(&point);
            best.evaluations += 1;
            if v.is_finite() && v < best.value {
                best.value = v;
                best.argmin.copy_from_slice(&point);
            }
            // odometer increment
            let mut d = 0;
            while d < dim {
                index[d] += 1;
                if index[d] < res {
                    break;
                }
                index[d] = 0;
                d += 1;
            }
            if d == dim {
                break;
            }
        }
    }
    best
}

/// Cyclic coordinate search: each sweep runs a one-dimensional
/// [`grid_minimize`] along every axis over the full box. Stops when a sweep
/// improves the value by less than `tol` or after `max_sweeps`.
pub fn coordinate_grid_minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    bounds: &[(f64, f64)],
    start: &[f64],
    resolution: usize,
    refinements: usize,
    max_sweeps: usize,
    tol: f64,
) -> GridResult {
    let mut x = start.to_vec();
    let mut value = f(&x);
    let mut evaluations = 1;
    for _ in 0..max_sweeps {
        let before = value;
        for d in 0..x.len() {
            let mut trial = x.clone();
            let r = grid_minimize(
                |t| {
                    trial[d] = t[0];
                    f(&trial)
                },
                &bounds[d..=d],
                resolution,
                refinements,
            );
            evaluations += r.evaluations;
            if r.value < value {
                value = r.value;
                x[d] = r.argmin[0];
            }
        }
        if !(before - value > tol) && before.is_finite() {
            break;
        }
    }
    GridResult {
        value,
        argmin: x,
        evaluations,
    }
}
