//! Numeric primitives (sign-power maps, q-norms), the problem-oracle
//! contract, and penalty evaluation.
//!
//! The penalty attached to `min f(x) s.t. F(x) = 0` is
//! `P(x) = f(x) + (rho/q) * sum_i |F_i(x)|^q` with `q in (1, 2]`, and its
//! gradient is `grad f(x) + J_F(x)^T (rho * sign(F(x)) .* |F(x)|^(q-1))`.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_domain, ensure_finite, QlpError, Result};

/// Sign-power map for a valid exponent, no argument checking.
///
/// Returns exactly 0 at t = 0 (the 0^0 ambiguity as the exponent
/// approaches 0 is resolved to 0), and flushes |t| < 1e-300 to 0 so that
/// exponents near 0 cannot produce underflow artifacts.
#[inline]
pub(crate) fn spow(t: f64, a: f64) -> f64 {
    if t == 0.0 || t.abs() < 1e-300 {
        return 0.0;
    }
    if a == 1.0 {
        return t;
    }
    let mag = if a == 0.5 { t.abs().sqrt() } else { t.abs().powf(a) };
    if t > 0.0 {
        mag
    } else {
        -mag
    }
}

/// sign(t) * |t|^nu for nu in (0, 1].
///
/// This is the scalar map whose Holder continuity (with constant 3 and
/// exponent nu) underpins the smoothness of the penalty model.
pub fn sign_pow(t: f64, nu: f64) -> Result<f64> {
    check_domain("nu", nu, nu > 0.0 && nu <= 1.0, "(0, 1]")?;
    ensure_finite(t, "sign_pow argument")?;
    Ok(spow(t, nu))
}

/// Componentwise sign-power map, `a > 0`.
pub fn sign_pow_vec(v: &DVector<f64>, a: f64) -> Result<DVector<f64>> {
    check_domain("a", a, a > 0.0, "(0, inf)")?;
    for &x in v.iter() {
        ensure_finite(x, "sign_pow_vec component")?;
    }
    Ok(DVector::from_iterator(v.len(), v.iter().map(|&x| spow(x, a))))
}

/// Unchecked componentwise sign-power used on hot paths where the
/// exponent was validated at construction time.
#[inline]
pub(crate) fn spow_vec(v: &DVector<f64>, a: f64) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().map(|&x| spow(x, a)))
}

/// `sum_i |v_i|^q` for q in (1, 2]. Note: not divided by q.
pub fn qnorm_pow(v: &DVector<f64>, q: f64) -> Result<f64> {
    check_domain("q", q, q > 1.0 && q <= 2.0, "(1, 2]")?;
    Ok(qnorm_pow_unchecked(v, q))
}

#[inline]
pub(crate) fn qnorm_pow_unchecked(v: &DVector<f64>, q: f64) -> f64 {
    if q == 2.0 {
        v.iter().map(|&x| x * x).sum()
    } else {
        v.iter().map(|&x| x.abs().powf(q)).sum()
    }
}

/// Evaluation counters carried by each oracle instance.
///
/// Outer-iteration complexity claims are about these counts, so every
/// call path that touches the oracle increments them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalCounters {
    pub n_f: u64,
    pub n_grad_f: u64,
    pub n_cons: u64,
    pub n_jac: u64,
    pub n_inner_grad_steps: u64,
}

#[derive(Default)]
struct CounterCells {
    f: Cell<u64>,
    grad_f: Cell<u64>,
    cons: Cell<u64>,
    jac: Cell<u64>,
    inner: Cell<u64>,
}

/// Known smoothness/bound constants of a problem, when available.
///
/// All fields are optional; the theoretical regularization rule needs
/// `lipschitz_grad_f`, `lipschitz_jac` and `objective_lower_bound`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KnownConstants {
    /// Lipschitz constant of grad f on the working set (L_f).
    pub lipschitz_grad_f: Option<f64>,
    /// Lipschitz constant of the constraint Jacobian (L_F).
    pub lipschitz_jac: Option<f64>,
    /// Bound on the spectral norm of the Jacobian (M_F).
    pub bound_jac: Option<f64>,
    /// Bound on the gradient norm of f (M_f).
    pub bound_grad_f: Option<f64>,
    /// A finite lower bound on f over R^n.
    pub objective_lower_bound: Option<f64>,
}

impl KnownConstants {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("lipschitz_grad_f", self.lipschitz_grad_f),
            ("lipschitz_jac", self.lipschitz_jac),
            ("bound_jac", self.bound_jac),
            ("bound_grad_f", self.bound_grad_f),
        ];
        for (name, v) in nonneg {
            if let Some(v) = v {
                check_domain(name, v, v >= 0.0, "[0, inf)")?;
            }
        }
        if let Some(v) = self.objective_lower_bound {
            ensure_finite(v, "objective_lower_bound")?;
        }
        Ok(())
    }
}

type ScalarFn = Box<dyn Fn(&DVector<f64>) -> f64 + Send>;
type VectorFn = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + Send>;
type MatrixFn = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send>;

/// A user-supplied n-dimensional objective/constraint evaluator with
/// analytic first derivatives.
///
/// Evaluations must be deterministic for a fixed point. Jacobians are
/// dense row-major m-by-n. One instance is meant to be used from one
/// thread at a time; distinct instances may run concurrently.
pub struct ProblemOracle {
    n: usize,
    m: usize,
    f: ScalarFn,
    grad_f: VectorFn,
    cons: VectorFn,
    jac: MatrixFn,
    counters: CounterCells,
}

impl ProblemOracle {
    pub fn new(
        n: usize,
        m: usize,
        f: impl Fn(&DVector<f64>) -> f64 + Send + 'static,
        grad_f: impl Fn(&DVector<f64>) -> DVector<f64> + Send + 'static,
        cons: impl Fn(&DVector<f64>) -> DVector<f64> + Send + 'static,
        jac: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + 'static,
    ) -> Result<Self> {
        if n == 0 {
            return Err(QlpError::Construction("decision dimension n must be positive".into()));
        }
        if m == 0 {
            return Err(QlpError::Construction("constraint count m must be positive".into()));
        }
        Ok(Self {
            n,
            m,
            f: Box::new(f),
            grad_f: Box::new(grad_f),
            cons: Box::new(cons),
            jac: Box::new(jac),
            counters: CounterCells::default(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn num_constraints(&self) -> usize {
        self.m
    }

    fn check_dim(&self, x: &DVector<f64>, context: &'static str) -> Result<()> {
        if x.len() == self.n {
            Ok(())
        } else {
            Err(QlpError::Dimension { context, expected: self.n, actual: x.len() })
        }
    }

    /// f(x); counts one objective evaluation.
    pub fn objective(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_dim(x, "objective")?;
        self.counters.f.set(self.counters.f.get() + 1);
        ensure_finite((self.f)(x), "objective value")
    }

    /// grad f(x); counts one gradient evaluation.
    pub fn objective_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x, "objective_gradient")?;
        self.counters.grad_f.set(self.counters.grad_f.get() + 1);
        let g = (self.grad_f)(x);
        if g.len() != self.n {
            return Err(QlpError::Dimension { context: "gradient length", expected: self.n, actual: g.len() });
        }
        for &v in g.iter() {
            ensure_finite(v, "objective gradient component")?;
        }
        Ok(g)
    }

    /// F(x); counts one constraint evaluation.
    pub fn constraints(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x, "constraints")?;
        self.counters.cons.set(self.counters.cons.get() + 1);
        let c = (self.cons)(x);
        if c.len() != self.m {
            return Err(QlpError::Dimension { context: "constraint length", expected: self.m, actual: c.len() });
        }
        for &v in c.iter() {
            ensure_finite(v, "constraint component")?;
        }
        Ok(c)
    }

    /// J_F(x); counts one Jacobian evaluation.
    pub fn constraint_jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(x, "constraint_jacobian")?;
        self.counters.jac.set(self.counters.jac.get() + 1);
        let j = (self.jac)(x);
        if j.nrows() != self.m || j.ncols() != self.n {
            return Err(QlpError::Dimension {
                context: "jacobian shape (rows*cols)",
                expected: self.m * self.n,
                actual: j.nrows() * j.ncols(),
            });
        }
        for &v in j.iter() {
            ensure_finite(v, "jacobian entry")?;
        }
        Ok(j)
    }

    /// Credits gradient steps performed by an inner solver on a model of
    /// this problem (Jacobian-vector product work).
    pub fn add_inner_grad_steps(&self, count: u64) {
        self.counters.inner.set(self.counters.inner.get() + count);
    }

    /// Snapshot of the evaluation counters.
    pub fn counters(&self) -> EvalCounters {
        EvalCounters {
            n_f: self.counters.f.get(),
            n_grad_f: self.counters.grad_f.get(),
            n_cons: self.counters.cons.get(),
            n_jac: self.counters.jac.get(),
            n_inner_grad_steps: self.counters.inner.get(),
        }
    }

    pub fn reset_counters(&self) {
        self.counters.f.set(0);
        self.counters.grad_f.set(0);
        self.counters.cons.set(0);
        self.counters.jac.set(0);
        self.counters.inner.set(0);
    }
}

impl std::fmt::Debug for ProblemOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemOracle")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("counters", &self.counters())
            .finish()
    }
}

fn check_penalty_params(rho: f64, q: f64) -> Result<()> {
    check_domain("rho", rho, rho > 0.0, "(0, inf)")?;
    check_domain("q", q, q > 1.0 && q <= 2.0, "(1, 2]")
}

/// Penalty value `f(x) + (rho/q) * sum |F_i(x)|^q`.
pub fn penalty_value(p: &ProblemOracle, x: &DVector<f64>, rho: f64, q: f64) -> Result<f64> {
    check_penalty_params(rho, q)?;
    let f = p.objective(x)?;
    let c = p.constraints(x)?;
    ensure_finite(f + rho / q * qnorm_pow_unchecked(&c, q), "penalty value")
}

/// Penalty gradient `grad f(x) + J_F(x)^T (rho * sign(F) .* |F|^(q-1))`.
pub fn penalty_gradient(p: &ProblemOracle, x: &DVector<f64>, rho: f64, q: f64) -> Result<DVector<f64>> {
    check_penalty_params(rho, q)?;
    let g = p.objective_gradient(x)?;
    let c = p.constraints(x)?;
    let j = p.constraint_jacobian(x)?;
    let w = spow_vec(&c, q - 1.0) * rho;
    Ok(g + j.transpose() * w)
}

/// Multiplier recovered from a constraint value: `rho * sign(F) .* |F|^(q-1)`.
///
/// At q = 2 this reduces to `rho * F` exactly.
pub fn multiplier_estimate(cons_value: &DVector<f64>, rho: f64, q: f64) -> Result<DVector<f64>> {
    check_penalty_params(rho, q)?;
    Ok(sign_pow_vec(cons_value, q - 1.0)? * rho)
}

/// KKT residual pair at (x, lambda).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KktResidual {
    /// `|| grad f(x) + J_F(x)^T lambda ||` (Euclidean).
    pub stationarity: f64,
    /// `|| F(x) ||` (Euclidean).
    pub feasibility: f64,
}

/// Euclidean KKT residuals of the original constrained problem.
pub fn kkt_residual(p: &ProblemOracle, x: &DVector<f64>, lambda: &DVector<f64>) -> Result<KktResidual> {
    if lambda.len() != p.num_constraints() {
        return Err(QlpError::Dimension {
            context: "kkt multiplier",
            expected: p.num_constraints(),
            actual: lambda.len(),
        });
    }
    let g = p.objective_gradient(x)?;
    let j = p.constraint_jacobian(x)?;
    let c = p.constraints(x)?;
    Ok(KktResidual {
        stationarity: (g + j.transpose() * lambda).norm(),
        feasibility: c.norm(),
    })
}

#[cfg(test)]
pub(crate) fn toy_1d() -> ProblemOracle {
    // f(x) = x^2, F(x) = x - 1
    ProblemOracle::new(
        1,
        1,
        |x: &DVector<f64>| x[0] * x[0],
        |x: &DVector<f64>| DVector::from_vec(vec![2.0 * x[0]]),
        |x: &DVector<f64>| DVector::from_vec(vec![x[0] - 1.0]),
        |_: &DVector<f64>| DMatrix::from_vec(1, 1, vec![1.0]),
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sign_pow_zero_case() {
        assert_eq!(sign_pow(0.0, 0.5).unwrap(), 0.0);
        assert_eq!(sign_pow(-0.0, 0.001).unwrap(), 0.0);
    }

    #[test]
    fn sign_pow_square_root() {
        assert_eq!(sign_pow(4.0, 0.5).unwrap(), 2.0);
        assert_eq!(sign_pow(-0.25, 0.5).unwrap(), -0.5);
    }

    #[test]
    fn sign_pow_domain_errors() {
        assert!(sign_pow(1.0, 0.0).is_err());
        assert!(sign_pow(1.0, 1.5).is_err());
        assert!(sign_pow(1.0, -0.5).is_err());
        assert!(sign_pow(f64::NAN, 0.5).is_err());
        assert!(sign_pow(f64::INFINITY, 0.5).is_err());
    }

    #[test]
    fn sign_pow_underflow_guard() {
        assert_eq!(sign_pow(1e-301, 0.001).unwrap(), 0.0);
        assert_eq!(sign_pow(-1e-310, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn sign_pow_vec_examples() {
        let v = DVector::from_vec(vec![1.0, -1.0]);
        assert_eq!(sign_pow_vec(&v, 1.0).unwrap(), v);

        let v = DVector::from_vec(vec![0.0, 9.0]);
        let out = sign_pow_vec(&v, 0.5).unwrap();
        assert_eq!(out[0], 0.0);
        assert_eq!(out[1], 3.0);

        let v = DVector::from_vec(vec![-0.5]);
        let out = sign_pow_vec(&v, 0.5).unwrap();
        assert_relative_eq!(out[0], -std::f64::consts::FRAC_1_SQRT_2, max_relative = 1e-15);

        assert!(sign_pow_vec(&DVector::from_vec(vec![f64::NAN]), 0.5).is_err());
        assert!(sign_pow_vec(&DVector::from_vec(vec![1.0]), 0.0).is_err());
    }

    #[test]
    fn qnorm_pow_examples() {
        assert_eq!(qnorm_pow(&DVector::from_vec(vec![3.0, 4.0]), 2.0).unwrap(), 25.0);
        assert_eq!(qnorm_pow(&DVector::from_vec(vec![1.0, -1.0]), 1.5).unwrap(), 2.0);
        assert_eq!(qnorm_pow(&DVector::from_vec(vec![0.0, 0.0, 0.0]), 1.3).unwrap(), 0.0);
        assert!(qnorm_pow(&DVector::from_vec(vec![1.0]), 1.0).is_err());
        assert!(qnorm_pow(&DVector::from_vec(vec![1.0]), 2.5).is_err());
    }

    #[test]
    fn penalty_value_examples() {
        let p = toy_1d();
        let x = |v: f64| DVector::from_vec(vec![v]);
        assert_eq!(penalty_value(&p, &x(0.0), 2.0, 2.0).unwrap(), 1.0);
        assert_eq!(penalty_value(&p, &x(1.0), 7.0, 1.5).unwrap(), 1.0);
        assert_eq!(penalty_value(&p, &x(0.0), 3.0, 1.5).unwrap(), 2.0);
        let counters = p.counters();
        assert_eq!(counters.n_f, 3);
        assert_eq!(counters.n_cons, 3);
    }

    #[test]
    fn penalty_gradient_examples() {
        let p = toy_1d();
        let x = |v: f64| DVector::from_vec(vec![v]);
        assert_eq!(penalty_gradient(&p, &x(0.0), 2.0, 2.0).unwrap()[0], -2.0);
        assert_eq!(penalty_gradient(&p, &x(1.0), 5.0, 1.5).unwrap()[0], 2.0);
    }

    #[test]
    fn penalty_gradient_matches_finite_differences() {
        let p = toy_1d();
        let (rho, q) = (4.0, 1.5);
        let x0 = 0.5;
        let h = 1e-7;
        let fd = (penalty_value(&p, &DVector::from_vec(vec![x0 + h]), rho, q).unwrap()
            - penalty_value(&p, &DVector::from_vec(vec![x0 - h]), rho, q).unwrap())
            / (2.0 * h);
        let g = penalty_gradient(&p, &DVector::from_vec(vec![x0]), rho, q).unwrap()[0];
        assert_relative_eq!(g, fd, max_relative = 1e-6);
    }

    #[test]
    fn multiplier_estimate_examples() {
        let z = multiplier_estimate(&DVector::from_vec(vec![0.0, 0.0]), 10.0, 1.5).unwrap();
        assert_eq!(z, DVector::from_vec(vec![0.0, 0.0]));

        let l = multiplier_estimate(&DVector::from_vec(vec![-1.0]), 2.0, 2.0).unwrap();
        assert_eq!(l[0], -2.0);

        let l = multiplier_estimate(&DVector::from_vec(vec![-0.5]), 10.0, 1.5).unwrap();
        assert_relative_eq!(l[0], -7.071067811865475, max_relative = 1e-15);
    }

    #[test]
    fn multiplier_estimate_quadratic_case_is_exact() {
        let f = DVector::from_vec(vec![0.123456, -9.5, 1e-7]);
        let l = multiplier_estimate(&f, 3.75, 2.0).unwrap();
        assert_eq!(l, f * 3.75);
    }

    #[test]
    fn kkt_residual_examples() {
        let p = toy_1d();
        let x = |v: f64| DVector::from_vec(vec![v]);
        let lam = |v: f64| DVector::from_vec(vec![v]);

        let r = kkt_residual(&p, &x(1.0), &lam(-2.0)).unwrap();
        assert_eq!((r.stationarity, r.feasibility), (0.0, 0.0));

        let r = kkt_residual(&p, &x(1.0), &lam(0.0)).unwrap();
        assert_eq!((r.stationarity, r.feasibility), (2.0, 0.0));

        let r = kkt_residual(&p, &x(0.9), &lam(-1.8)).unwrap();
        assert!(r.stationarity.abs() < 1e-15);
        assert_relative_eq!(r.feasibility, 0.1, max_relative = 1e-12);
    }

    #[test]
    fn oracle_rejects_non_finite() {
        let p = ProblemOracle::new(
            1,
            1,
            |_x: &DVector<f64>| f64::NAN,
            |_x: &DVector<f64>| DVector::from_vec(vec![0.0]),
            |_x: &DVector<f64>| DVector::from_vec(vec![0.0]),
            |_x: &DVector<f64>| DMatrix::from_vec(1, 1, vec![0.0]),
        )
        .unwrap();
        assert!(penalty_value(&p, &DVector::from_vec(vec![0.0]), 1.0, 2.0).is_err());
    }

    #[test]
    fn counters_monotone() {
        let p = toy_1d();
        let x = DVector::from_vec(vec![0.3]);
        let before = p.counters();
        let _ = penalty_gradient(&p, &x, 1.0, 2.0).unwrap();
        let after = p.counters();
        assert!(after.n_grad_f > before.n_grad_f);
        assert!(after.n_cons > before.n_cons);
        assert!(after.n_jac > before.n_jac);
        p.add_inner_grad_steps(5);
        assert_eq!(p.counters().n_inner_grad_steps, 5);
    }
}
