//! Numerical kernels shared by the risk modules.

mod diff;
mod grid;
mod lp;
mod quadrature;
mod roots;

pub use diff::{directional_derivative_fd, fd_step, line_derivative, line_derivative_vec, Side};
pub use grid::{coordinate_grid_minimize, grid_minimize, GridResult};
pub use lp::{solve_lp, LinearProgram, LpSolution};
pub use quadrature::{integrate_unit_interval, simpson, QuadratureConfig};
pub use roots::{bisect_root, bisect_root_with, BisectConfig};
