//! Truncated spectral distance by convex optimization.
//!
//! For self-adjoint `a` the two derivations have equal operator norms, so
//! the truncated problem is
//!
//! ```text
//! max ⟨G, X⟩  subject to  √2 ||∂X||_op ≤ 1,  X = X*,
//! ```
//!
//! with `G = c c* − c′c′*`. It is solved in the equivalent form
//! `min ||∂X||_op` on the hyperplane `⟨G, X⟩ = 1`, replacing the spectral
//! norm by the log-sum-exp of the Hermitian dilation's eigenvalues and
//! running accelerated projected gradient with restarts, backtracking and
//! continuation in the smoothing parameter. Any iterate `X` yields the
//! feasible certificate `X / commutator_norm(X)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_theta, Error, Result};
use crate::linalg::Field;
use crate::lipschitz::commutator_norm;
use crate::moyal::{del_adjoint_matrix, del_matrix, MoyalElement};
use crate::states::{eval, MoyalPureState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerParams {
    /// Relative change of the objective over `window` iterations that ends a smoothing stage.
    pub tol: f64,
    pub window: usize,
    pub max_iter: usize,
    /// Final smoothing parameter relative to the starting objective.
    pub final_smoothing: f64,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        Self { tol: 1e-8, window: 50, max_iter: 100_000, final_smoothing: 1e-7 }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizerOutcome {
    /// `|ω₁(a) − ω₂(a)|` at the returned certificate.
    pub value: f64,
    pub certificate: MoyalElement,
    pub iterations: usize,
    pub converged: bool,
    /// `|commutator_norm(certificate) − 1|` (zero for the trivial certificate).
    pub feasibility_residual: f64,
}

/// Lower bound on the distance from self-adjoint elements of the given order.
///
/// A feasible `warm_start` (padded to `order`) seeds the iteration, and the
/// result is never below its value.
pub fn optimize_distance(
    s1: &MoyalPureState,
    s2: &MoyalPureState,
    order: usize,
    params: &OptimizerParams,
    warm_start: Option<&MoyalElement>,
) -> Result<OptimizerOutcome> {
    check_theta(s1.theta(), s2.theta())?;
    let theta = s1.theta();
    let support = s1.support_len().max(s2.support_len());
    if order < support + 2 {
        return Err(Error::InvalidParameter(format!(
            "optimizer order {order} must be at least state support {support} + 2"
        )));
    }
    let c1 = s1.leading_coeffs(order);
    let c2 = s2.leading_coeffs(order);
    let coeff = |c: &[Complex64], i: usize| c.get(i).copied().unwrap_or_default();
    let g = DMatrix::from_fn(order, order, |p, q| {
        coeff(&c1, p) * coeff(&c1, q).conj() - coeff(&c2, p) * coeff(&c2, q).conj()
    });

    let zero = MoyalElement::zeros(theta, order)?;
    if g.iter().all(|z| z.norm() == 0.0) {
        return Ok(OptimizerOutcome {
            value: 0.0,
            certificate: zero,
            iterations: 0,
            converged: true,
            feasibility_residual: 0.0,
        });
    }

    let warm = warm_start.filter(|w| w.theta() == theta && w.order() <= order).map(|w| w.padded(order));
    let real = g.iter().all(|z| z.im == 0.0);
    let (x, iterations, converged) = if real {
        let gr = g.map(|z| z.re);
        let w = warm.as_ref().map(|w| w.coeffs().map(|z| z.re));
        let (x, it, ok) = solve(&gr, theta, params, w);
        (x.map(|v| Complex64::new(v, 0.0)), it, ok)
    } else {
        solve(&g, theta, params, warm.as_ref().map(|w| w.coeffs().clone()))
    };

    let mut best = finish(s1, s2, MoyalElement::new(theta, x)?)?;
    best.iterations = iterations;
    best.converged = converged;
    if let Some(w) = warm {
        let seeded = finish(s1, s2, w.hermitian_part())?;
        if seeded.value > best.value {
            best.value = seeded.value;
            best.certificate = seeded.certificate;
            best.feasibility_residual = seeded.feasibility_residual;
        }
    }
    Ok(best)
}

fn finish(s1: &MoyalPureState, s2: &MoyalPureState, x: MoyalElement) -> Result<OptimizerOutcome> {
    let norm = commutator_norm(&x);
    if !(norm > 0.0 && norm.is_finite()) {
        let zero = MoyalElement::zeros(x.theta(), x.order())?;
        return Ok(OptimizerOutcome {
            value: 0.0,
            certificate: zero,
            iterations: 0,
            converged: true,
            feasibility_residual: 0.0,
        });
    }
    let a = x.scale(1.0 / norm);
    let value = (eval(s1, &a)? - eval(s2, &a)?).norm();
    let feasibility_residual = (commutator_norm(&a) - 1.0).abs();
    Ok(OptimizerOutcome { value, certificate: a, iterations: 0, converged: true, feasibility_residual })
}

fn re_inner<T: Field>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conjugate() * *y).real()).sum()
}

fn hermitian<T: Field>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.adjoint()).unscale(2.0)
}

struct Problem<'a, T: Field> {
    g: &'a DMatrix<T>,
    g_norm2: f64,
    theta: f64,
}

impl<T: Field> Problem<'_, T> {
    fn to_tangent(&self, z: &mut DMatrix<T>) {
        let c = re_inner(self.g, z) / self.g_norm2;
        z.zip_apply(self.g, |zi, gi| *zi -= gi.scale(c));
    }

    fn sigma_max(&self, x: &DMatrix<T>) -> f64 {
        del_matrix(x, self.theta).singular_values().max()
    }

    /// Smoothed norm `μ log Σ (e^{σ_i/μ} + e^{−σ_i/μ})` and its projected gradient.
    fn smoothed(&self, x: &DMatrix<T>, mu: f64) -> (f64, DMatrix<T>) {
        let y = del_matrix(x, self.theta);
        let svd = y.svd(true, true);
        let s = &svd.singular_values;
        let top = s.max();
        let mut total = 0.0;
        let mut w = Vec::with_capacity(s.len());
        for &sigma in s.iter() {
            let ep = ((sigma - top) / mu).exp();
            let em = ((-sigma - top) / mu).exp();
            total += ep + em;
            w.push(ep - em);
        }
        let value = top + mu * total.ln();
        let mut u = svd.u.expect("left singular vectors");
        for (j, mut col) in u.column_iter_mut().enumerate() {
            col.scale_mut(w[j] / total);
        }
        let grad_y = u * svd.v_t.expect("right singular vectors");
        let mut grad = hermitian(&del_adjoint_matrix(&grad_y, self.theta));
        self.to_tangent(&mut grad);
        (value, grad)
    }

    fn smoothed_value(&self, x: &DMatrix<T>, mu: f64) -> f64 {
        let s = del_matrix(x, self.theta).singular_values();
        let top = s.max();
        let total: f64 = s.iter().map(|&v| ((v - top) / mu).exp() + ((-v - top) / mu).exp()).sum();
        top + mu * total.ln()
    }
}

fn solve<T: Field>(
    g: &DMatrix<T>,
    theta: f64,
    params: &OptimizerParams,
    warm: Option<DMatrix<T>>,
) -> (DMatrix<T>, usize, bool) {
    let g_norm2 = re_inner(g, g);
    let prob = Problem { g, g_norm2, theta };

    let mut x = g.unscale(g_norm2);
    if let Some(w) = warm {
        let w = hermitian(&w);
        let gw = re_inner(g, &w);
        if gw.abs() > 1e-300 {
            let seeded = w.unscale(gw);
            if prob.sigma_max(&seeded) < prob.sigma_max(&x) {
                x = seeded;
            }
        }
    }

    let f0 = prob.sigma_max(&x);
    let mut best = x.clone();
    let mut best_sigma = f0;
    let mut mu = 0.05 * f0;
    let mu_min = params.final_smoothing * f0;
    let mut lip = 1.0 / mu;
    let mut iterations = 0;
    let mut converged = true;

    'stages: loop {
        let mut fx = prob.smoothed_value(&x, mu);
        let mut x_prev = x.clone();
        let mut t = 1.0_f64;
        let mut history: Vec<f64> = vec![fx];
        loop {
            if iterations >= params.max_iter {
                converged = false;
                break 'stages;
            }
            iterations += 1;
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            let y = &x + (&x - &x_prev).scale(beta);
            let (fy, gy) = prob.smoothed(&y, mu);
            let gsq = re_inner(&gy, &gy);
            let (z, fz) = loop {
                let z = &y - gy.scale(1.0 / lip);
                let fz = prob.smoothed_value(&z, mu);
                if fz <= fy - 0.5 * gsq / lip + 1e-15 * fy.abs() || lip > 1e30 {
                    break (z, fz);
                }
                lip *= 2.0;
            };
            if fz < fx {
                x_prev = std::mem::replace(&mut x, z);
                fx = fz;
                t = t_next;
                lip *= 0.9;
                let sigma = prob.sigma_max(&x);
                if sigma < best_sigma {
                    best_sigma = sigma;
                    best = x.clone();
                }
            } else {
                // momentum overshoot: restart from the current iterate
                x_prev = x.clone();
                t = 1.0;
                if beta == 0.0 {
                    history.push(fx);
                    break;
                }
            }
            history.push(fx);
            let k = history.len();
            if k > params.window {
                let old = history[k - 1 - params.window];
                if (old - fx).abs() <= params.tol * fx.abs() {
                    break;
                }
            }
        }
        if mu <= mu_min {
            break;
        }
        mu = (mu * 0.25).max(mu_min);
        lip *= 4.0;
        x = best.clone();
    }
    (best, iterations, converged)
}
