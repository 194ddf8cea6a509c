//! Inner solver: accelerated gradient descent with adaptive backtracking
//! for strongly convex objectives whose gradient is Holder continuous
//! with unknown constant and exponent.
//!
//! One code path serves every `q` in (1, 2]: the local smoothness
//! estimate `L` doubles whenever the quadratic upper model fails at the
//! trial point and relaxes by half after each accepted step, so no
//! Holder constant is ever needed. Momentum is restarted whenever the
//! objective increases, which keeps the iterate sequence monotone.

use nalgebra::DVector;

use crate::error::{check_domain, QlpError, Result};
use crate::model::LinearizedModel;

/// Objective interface for the inner solver.
pub trait SmoothObjective {
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    /// Strong convexity modulus (may be vanishingly small for the bare
    /// ball-constrained criticality problem).
    fn convexity_modulus(&self) -> f64;
}

/// The subproblem objective of the outer loop: linearized penalty plus
/// its quadratic proximal term, strongly convex with modulus beta.
impl SmoothObjective for LinearizedModel {
    fn value(&self, x: &DVector<f64>) -> f64 {
        LinearizedModel::value(self, x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        LinearizedModel::gradient(self, x)
    }

    fn convexity_modulus(&self) -> f64 {
        self.beta()
    }
}

/// Closure-backed objective, mostly for tests and diagnostics.
pub struct FnObjective<V, G>
where
    V: Fn(&DVector<f64>) -> f64,
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    pub value_fn: V,
    pub gradient_fn: G,
    pub modulus: f64,
}

impl<V, G> SmoothObjective for FnObjective<V, G>
where
    V: Fn(&DVector<f64>) -> f64,
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    fn value(&self, x: &DVector<f64>) -> f64 {
        (self.value_fn)(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.gradient_fn)(x)
    }

    fn convexity_modulus(&self) -> f64 {
        self.modulus
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerStatus {
    Converged,
    MaxIter,
}

/// Outcome of one inner solve.
#[derive(Clone, Debug)]
pub struct InnerSolveResult {
    pub minimizer: DVector<f64>,
    /// Gradient norm (unconstrained) or scaled projected-gradient
    /// residual (ball) at the returned point.
    pub final_grad_norm: f64,
    pub iterations: usize,
    pub status: InnerStatus,
    /// Number of gradient evaluations spent; the caller credits these to
    /// the owning oracle's inner-step counter.
    pub grad_evals: u64,
}

impl InnerSolveResult {
    pub fn converged(&self) -> bool {
        self.status == InnerStatus::Converged
    }
}

struct Ball<'a> {
    center: &'a DVector<f64>,
    radius: f64,
}

impl Ball<'_> {
    fn project(&self, x: DVector<f64>) -> DVector<f64> {
        let d = &x - self.center;
        let norm = d.norm();
        if norm <= self.radius {
            x
        } else {
            self.center + d * (self.radius / norm)
        }
    }
}

/// Minimizes `obj` over R^n to gradient norm `eps_sub`.
pub fn solve_unconstrained(
    obj: &dyn SmoothObjective,
    x0: DVector<f64>,
    eps_sub: f64,
    max_inner: usize,
) -> Result<InnerSolveResult> {
    check_domain("eps_sub", eps_sub, eps_sub > 0.0, "(0, inf)")?;
    accelerated_descent(obj, None, x0, eps_sub, max_inner)
}

/// Minimizes `obj` over the closed Euclidean ball of the given center
/// and radius. Convergence is declared when the projected-gradient
/// residual `||x - proj(x - g/L)|| * L` drops below `eps_sub`.
pub fn solve_ball_constrained(
    obj: &dyn SmoothObjective,
    center: &DVector<f64>,
    radius: f64,
    x0: DVector<f64>,
    eps_sub: f64,
    max_inner: usize,
) -> Result<InnerSolveResult> {
    check_domain("eps_sub", eps_sub, eps_sub > 0.0, "(0, inf)")?;
    check_domain("radius", radius, radius > 0.0, "(0, inf)")?;
    let dist = (&x0 - center).norm();
    if dist > radius * (1.0 + 1e-9) {
        return Err(QlpError::Domain {
            name: "x0 distance to ball center",
            value: dist,
            range: "within the trust radius",
        });
    }
    let ball = Ball { center, radius };
    let x0 = ball.project(x0);
    accelerated_descent(obj, Some(&ball), x0, eps_sub, max_inner)
}

fn finite_or_nonfinite_err(v: f64, context: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(QlpError::NonFinite { context })
    }
}

fn accelerated_descent(
    obj: &dyn SmoothObjective,
    ball: Option<&Ball<'_>>,
    x0: DVector<f64>,
    eps_sub: f64,
    max_inner: usize,
) -> Result<InnerSolveResult> {
    let mu = obj.convexity_modulus().max(0.0);
    let l_floor = mu.max(1e-12);
    let mut l_est = mu.max(1.0);
    // Highest step-size estimate that was ever rejected. The relaxation
    // step never drops below it, otherwise rounding noise in the value
    // test can admit steps with 1/L above the local curvature, and the
    // gradient map then repels the iterate from the minimizer.
    let mut l_rejected = 0.0_f64;
    let mut accepted_since_decay = 0_u32;
    let mut grad_evals: u64 = 0;

    let residual = |x: &DVector<f64>, g: &DVector<f64>, l: f64| -> f64 {
        match ball {
            None => g.norm(),
            Some(b) => (x - b.project(x - g / l)).norm() * l,
        }
    };

    let mut x = x0;
    let mut fx = finite_or_nonfinite_err(obj.value(&x), "inner objective at start")?;
    let gx = obj.gradient(&x);
    grad_evals += 1;
    if residual(&x, &gx, l_est) <= eps_sub {
        let final_grad_norm = residual(&x, &gx, l_est);
        return Ok(InnerSolveResult {
            minimizer: x,
            final_grad_norm,
            iterations: 0,
            status: InnerStatus::Converged,
            grad_evals,
        });
    }

    let mut y = x.clone();
    let mut prev_step: Option<DVector<f64>> = None;
    let mut theta = 1.0_f64;
    let mut best_residual = f64::INFINITY;
    let mut since_best = 0_u32;
    let mut zero_steps = 0_u32;
    let mut last_residual = f64::INFINITY;

    for it in 1..=max_inner {
        let mut fy = obj.value(&y);
        if !fy.is_finite() {
            // Momentum overshot into overflow territory; restart from x.
            y = x.clone();
            prev_step = None;
            theta = 1.0;
            fy = fx;
        }
        let gy = obj.gradient(&y);
        grad_evals += 1;
        let gy_norm = gy.norm();

        // Gradient restart: momentum pointing against the gradient
        // direction signals overshoot.
        if let Some(step) = &prev_step {
            if gy.dot(step) > 0.0 {
                y = x.clone();
                prev_step = None;
                theta = 1.0;
                continue;
            }
        }

        // Backtracking on the local smoothness estimate.
        let mut step_accepted: Option<(DVector<f64>, f64, f64, Option<DVector<f64>>)> = None;
        while l_est <= 1e300 {
            let cand = {
                let raw = &y - &gy / l_est;
                match ball {
                    None => raw,
                    Some(b) => b.project(raw),
                }
            };
            let d = &cand - &y;
            let d_norm2 = d.norm_squared();
            let fc = obj.value(&cand);
            // Acceptance slack scales with the target accuracy so that any
            // float-noise equilibrium of the y -> y - g/L map sits below
            // the convergence threshold.
            let margin = fc - (fy + gy.dot(&d) + 0.5 * l_est * d_norm2);
            if fc.is_finite() {
                if margin <= 0.25 * eps_sub * eps_sub / l_est {
                    step_accepted = Some((cand, fc, d_norm2, None));
                    break;
                }
                // When the measured margin is within rounding noise of the
                // value computation, the test is uninformative; fall back
                // to requiring gradient-norm decrease instead.
                let noise = 64.0 * f64::EPSILON * (1.0 + fy.abs().max(fc.abs()));
                if margin <= noise {
                    let gc = obj.gradient(&cand);
                    grad_evals += 1;
                    if gc.norm() <= gy_norm * (1.0 + 1e-9) {
                        step_accepted = Some((cand, fc, d_norm2, Some(gc)));
                        break;
                    }
                }
            }
            l_rejected = l_rejected.max(l_est);
            l_est *= 2.0;
        }
        let Some((cand, fc, d_norm2, cand_grad)) = step_accepted else {
            // Smoothness estimate saturated (kink-dominated region);
            // return the best iterate found so far.
            break;
        };

        if d_norm2 == 0.0 {
            // The step underflowed the iterate's resolution.
            if prev_step.is_some() {
                y = x.clone();
                prev_step = None;
                theta = 1.0;
                continue;
            }
            zero_steps += 1;
            if zero_steps >= 32 {
                break;
            }
            // Force the estimate down so the step becomes representable.
            l_rejected *= 0.25;
            l_est = (0.25 * l_est).max(l_rejected).max(l_floor);
            continue;
        }

        if prev_step.is_some() && fc > fx {
            // Objective increased: drop momentum and retry from x.
            y = x.clone();
            prev_step = None;
            theta = 1.0;
            continue;
        }

        let x_prev = std::mem::replace(&mut x, cand);
        fx = fc;

        let gx = match cand_grad {
            Some(g) => g,
            None => {
                grad_evals += 1;
                obj.gradient(&x)
            }
        };
        let r = residual(&x, &gx, l_est);
        last_residual = r;
        if r <= eps_sub {
            return Ok(InnerSolveResult {
                minimizer: x,
                final_grad_norm: r,
                iterations: it,
                status: InnerStatus::Converged,
                grad_evals,
            });
        }
        if r < best_residual {
            best_residual = r;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= 1024 {
                break;
            }
        }

        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let momentum = (theta - 1.0) / theta_next;
        let step = &x - &x_prev;
        y = &x + &step * momentum;
        prev_step = Some(step);
        theta = theta_next;

        // Relax the smoothness estimate, but never below a rejected level.
        // The rejection memory itself decays slowly so the estimate can
        // come back down after leaving a high-curvature (kink) region.
        accepted_since_decay += 1;
        if accepted_since_decay >= 32 {
            accepted_since_decay = 0;
            l_rejected *= 0.5;
        }
        l_est = (0.5 * l_est).max(l_rejected).max(l_floor);
    }

    Ok(InnerSolveResult {
        final_grad_norm: last_residual,
        minimizer: x,
        iterations: max_inner,
        status: InnerStatus::MaxIter,
        grad_evals,
    })
}
