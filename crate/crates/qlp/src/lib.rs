//! Linearized lq penalty method for smooth nonconvex minimization under
//! nonlinear equality constraints.
//!
//! The problem class is `min f(x) s.t. F(x) = 0` with `f: R^n -> R` and
//! `F: R^n -> R^m` continuously differentiable. The solver works on the
//! penalty `P(x) = f(x) + (rho/q) ||F(x)||_q^q` with `q in (1, 2]`,
//! which interpolates between an exact-penalty-like regime (`q -> 1`)
//! and the classical quadratic penalty (`q = 2`). Each outer iteration
//! linearizes `f` and `F` in a Gauss-Newton fashion inside the penalty,
//! adds an adaptive quadratic proximal term, and minimizes the resulting
//! strongly convex model with an accelerated gradient method.
//!
//! Crate layout:
//!
//! - [`core`]: sign-power maps, q-norms, the problem-oracle contract,
//!   penalty value/gradient, multiplier recovery, KKT residuals.
//! - [`model`]: the frozen Gauss-Newton linearization.
//! - [`subsolver`]: accelerated gradient descent with backtracking for
//!   the strongly convex inner problems (unconstrained and ball).
//! - [`solver`]: the outer loop with beta backtracking, the theoretical
//!   beta rule, stopping tests, penalty continuation in rho, and trace
//!   diagnostics.
//! - [`criticality`]: the two criticality measures and first-order
//!   certification.
//! - [`problems`]: built-in test-problem families with analytic
//!   derivatives, KKT oracles, and a derivative checker.
//! - [`bench`]: grid runner and CSV/markdown table emission behind the
//!   `qlp-bench` command line tool.

pub mod bench;
pub mod core;
pub mod criticality;
mod error;
pub mod model;
pub mod problems;
pub mod solver;
pub mod subsolver;

pub use crate::core::{
    kkt_residual, multiplier_estimate, penalty_gradient, penalty_value, qnorm_pow, sign_pow,
    sign_pow_vec, EvalCounters, KktResidual, KnownConstants, ProblemOracle,
};
pub use crate::error::{QlpError, Result};
pub use crate::model::LinearizedModel;
pub use crate::subsolver::{
    solve_ball_constrained, solve_unconstrained, FnObjective, InnerSolveResult, InnerStatus,
    SmoothObjective,
};
