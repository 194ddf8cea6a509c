//! Gauss-Newton linearization of the penalty at a frozen anchor, with a
//! quadratic proximal term.
//!
//! The model freezes `f`, `grad f`, `F`, `J_F` at the anchor `x_k` and
//! evaluates
//!
//! ```text
//! f(x_k) + <grad f(x_k), x - x_k>
//!   + (rho/q) * || F(x_k) + J_F(x_k)(x - x_k) ||_q^q
//!   + (beta/2) * || x - x_k ||^2
//! ```
//!
//! which is the subproblem objective of the outer loop, and (with the
//! quadratic term dropped) the inner objective of both criticality
//! measures. It is strongly convex with modulus `beta` and has a Holder
//! continuous gradient with exponent `q - 1`.

use nalgebra::{DMatrix, DVector};

use crate::core::{qnorm_pow_unchecked, spow_vec, ProblemOracle};
use crate::error::{check_domain, QlpError, Result};

/// A frozen linearization of the penalty around one anchor point.
///
/// Immutable after construction; cheap to re-weight via [`LinearizedModel::with_beta`].
#[derive(Clone, Debug)]
pub struct LinearizedModel {
    anchor: DVector<f64>,
    f_anchor: f64,
    grad_anchor: DVector<f64>,
    cons_anchor: DVector<f64>,
    jac_anchor: DMatrix<f64>,
    rho: f64,
    q: f64,
    beta: f64,
}

impl LinearizedModel {
    /// Builds the model by evaluating the oracle once at `anchor`
    /// (one objective, gradient, constraint and Jacobian evaluation).
    pub fn build(p: &ProblemOracle, anchor: DVector<f64>, rho: f64, q: f64, beta: f64) -> Result<Self> {
        let f_anchor = p.objective(&anchor)?;
        let grad_anchor = p.objective_gradient(&anchor)?;
        let cons_anchor = p.constraints(&anchor)?;
        let jac_anchor = p.constraint_jacobian(&anchor)?;
        Self::from_parts(anchor, f_anchor, grad_anchor, cons_anchor, jac_anchor, rho, q, beta)
    }

    /// Assembles a model from already-evaluated oracle quantities.
    ///
    /// The caller is responsible for the cache-coherence invariant: the
    /// supplied values must be the oracle's output at `anchor`.
    pub fn from_parts(
        anchor: DVector<f64>,
        f_anchor: f64,
        grad_anchor: DVector<f64>,
        cons_anchor: DVector<f64>,
        jac_anchor: DMatrix<f64>,
        rho: f64,
        q: f64,
        beta: f64,
    ) -> Result<Self> {
        check_domain("rho", rho, rho > 0.0, "(0, inf)")?;
        check_domain("q", q, q > 1.0 && q <= 2.0, "(1, 2]")?;
        // beta >= beta_floor >= 1 is the solver's contract; the model itself
        // also serves the bare-criticality path which uses a vanishing weight.
        check_domain("beta", beta, beta >= 0.0, "[0, inf)")?;
        let n = anchor.len();
        let m = cons_anchor.len();
        if grad_anchor.len() != n || jac_anchor.nrows() != m || jac_anchor.ncols() != n {
            return Err(QlpError::Dimension {
                context: "model parts",
                expected: n,
                actual: grad_anchor.len(),
            });
        }
        Ok(Self { anchor, f_anchor, grad_anchor, cons_anchor, jac_anchor, rho, q, beta })
    }

    /// Same linearization with a different proximal weight.
    pub fn with_beta(&self, beta: f64) -> Self {
        let mut m = self.clone();
        m.beta = beta;
        m
    }

    pub fn anchor(&self) -> &DVector<f64> {
        &self.anchor
    }

    pub fn f_anchor(&self) -> f64 {
        self.f_anchor
    }

    pub fn grad_anchor(&self) -> &DVector<f64> {
        &self.grad_anchor
    }

    pub fn cons_anchor(&self) -> &DVector<f64> {
        &self.cons_anchor
    }

    pub fn jac_anchor(&self) -> &DMatrix<f64> {
        &self.jac_anchor
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Penalty value at the anchor, `f(x_k) + (rho/q)||F(x_k)||_q^q`.
    ///
    /// Uses the cached quantities, so it is bit-identical to
    /// `penalty_value` at the anchor and costs no oracle calls.
    pub fn penalty_at_anchor(&self) -> f64 {
        self.f_anchor + self.rho / self.q * qnorm_pow_unchecked(&self.cons_anchor, self.q)
    }

    /// Linearized constraints `F(x_k) + J_F(x_k)(x - x_k)`.
    pub fn linearized_constraints(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.cons_anchor + &self.jac_anchor * (x - &self.anchor)
    }

    /// Model value including the quadratic proximal term.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        let dx = x - &self.anchor;
        self.value_of_step(&dx)
    }

    /// Model value without the `(beta/2)||x - x_k||^2` term.
    pub fn value_unregularized(&self, x: &DVector<f64>) -> f64 {
        let dx = x - &self.anchor;
        let lin = &self.cons_anchor + &self.jac_anchor * &dx;
        self.f_anchor + self.grad_anchor.dot(&dx) + self.rho / self.q * qnorm_pow_unchecked(&lin, self.q)
    }

    #[inline]
    fn value_of_step(&self, dx: &DVector<f64>) -> f64 {
        let lin = &self.cons_anchor + &self.jac_anchor * dx;
        self.f_anchor
            + self.grad_anchor.dot(dx)
            + self.rho / self.q * qnorm_pow_unchecked(&lin, self.q)
            + 0.5 * self.beta * dx.norm_squared()
    }

    /// Model gradient
    /// `grad f(x_k) + rho J^T (sign(l) .* |l|^(q-1)) + beta (x - x_k)`
    /// with `l` the linearized constraints. No oracle calls.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let dx = x - &self.anchor;
        let lin = &self.cons_anchor + &self.jac_anchor * &dx;
        let w = spow_vec(&lin, self.q - 1.0) * self.rho;
        &self.grad_anchor + self.jac_anchor.transpose() * w + dx * self.beta
    }

    /// Spectral norm of the frozen Jacobian by power iteration
    /// (100 iterations, 1e-8 relative tolerance). Diagnostic only.
    pub fn jacobian_spectral_norm(&self) -> f64 {
        spectral_norm(&self.jac_anchor)
    }
}

pub(crate) fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    // Power iteration on A^T A with a deterministic start.
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut sigma = 0.0_f64;
    for _ in 0..100 {
        let w = a.transpose() * (a * &v);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm.sqrt();
        let done = (next - sigma).abs() <= 1e-8 * next.max(1.0);
        sigma = next;
        v = w / norm;
        if done {
            break;
        }
    }
    sigma
}
