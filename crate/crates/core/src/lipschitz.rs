//! Lipschitz ball `B₁ = { a : ||[D, π(a)]||_op ≤ 1 }`.
//!
//! Left multiplication by a finitely supported element acts on the
//! orthogonal basis `{f_{pq}}` as left multiplication of the coefficient
//! matrix, and every basis vector has the same norm, so its operator norm
//! is the largest singular value of that matrix.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::complex_spectral_norm;
use crate::moyal::{del, delbar, DerivativeCoefficients, MoyalElement};

/// Default membership tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Result of testing an element against the Lipschitz ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallReport {
    pub commutator_norm: f64,
    pub slack: f64,
    pub member: bool,
    /// Entries `(m, n, |α_{mn}|)` then `(m, n, |β_{mn}|)` exceeding `1/√2 + tol`.
    pub violations: Vec<(usize, usize, f64)>,
}

/// Operator norm of left multiplication by the coefficient matrix.
pub fn op_norm(coeffs: &DMatrix<Complex64>) -> f64 {
    complex_spectral_norm(coeffs)
}

/// `||[D, π(a)]||_op = √2 · max(||L(∂a)||, ||L(∂̄a)||)`.
pub fn commutator_norm(a: &MoyalElement) -> f64 {
    let d = op_norm(del(a).coeffs());
    let db = op_norm(delbar(a).coeffs());
    std::f64::consts::SQRT_2 * d.max(db)
}

fn entry_violations(d: &DerivativeCoefficients, bound: f64, out: &mut Vec<(usize, usize, f64)>) {
    let n = d.order();
    for m in 0..n {
        for k in 0..n {
            let v = d.coeff(m, k).norm();
            if v > bound {
                out.push((m, k, v));
            }
        }
    }
}

pub fn check_ball(a: &MoyalElement, tol: f64) -> BallReport {
    let alpha = del(a);
    let beta = delbar(a);
    let norm = std::f64::consts::SQRT_2 * op_norm(alpha.coeffs()).max(op_norm(beta.coeffs()));
    let mut violations = Vec::new();
    entry_violations(&alpha, FRAC_1_SQRT_2 + tol, &mut violations);
    entry_violations(&beta, FRAC_1_SQRT_2 + tol, &mut violations);
    BallReport {
        commutator_norm: norm,
        slack: 1.0 - norm,
        member: norm <= 1.0 + tol,
        violations,
    }
}

/// Ball membership for radial elements, decided by the entry bounds alone.
pub fn radial_ball_check(a: &MoyalElement) -> Result<bool> {
    if !a.is_radial() {
        return Err(Error::NotRadial { max_off_diagonal: a.max_off_diagonal() });
    }
    let bound = FRAC_1_SQRT_2 + DEFAULT_TOL;
    let ok = |d: &DerivativeCoefficients| d.coeffs().iter().all(|z| z.norm() <= bound);
    Ok(ok(&del(a)) && ok(&delbar(a)))
}
