//! Spectral distances between Moyal pure states: closed forms, certificate
//! lower bounds, analytic upper bounds and optimizer brackets.

use serde::{Deserialize, Serialize};

use crate::error::{check_theta, positive_theta, Error, Result};
use crate::lipschitz::{check_ball, DEFAULT_TOL};
use crate::moyal::{a_step, ahat, MoyalElement};
use crate::optimizer::{optimize_distance, OptimizerParams};
use crate::probes::bound_b;
use crate::states::{eval, Construction, MoyalPureState};
use crate::torus::TorusState;

/// Largest dense certificate order tried by default.
pub const CANDIDATE_LIMIT: usize = 48;

/// `√(θ/2) Σ_{k=n+1}^{m} 1/√k` for `n ≤ m`, symmetric in `(m, n)`.
pub fn closed_form_distance(m: usize, n: usize, theta: f64) -> f64 {
    let (lo, hi) = (m.min(n), m.max(n));
    (theta / 2.0).sqrt() * ((lo + 1)..=hi).rev().fold(0.0, |acc, k| acc + 1.0 / (k as f64).sqrt())
}

/// `d(m, n) − d(m, p) − d(p, n)` for `m ≤ p ≤ n`.
pub fn triangular_check(m: usize, p: usize, n: usize, theta: f64) -> Result<f64> {
    if !(m <= p && p <= n) {
        return Err(Error::InvalidParameter(format!("need m <= p <= n, got ({m}, {p}, {n})")));
    }
    Ok(closed_form_distance(m, n, theta) - closed_form_distance(m, p, theta) - closed_form_distance(p, n, theta))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificateBound {
    pub value: f64,
    /// Index of the best candidate; `None` when the list is empty.
    pub index: Option<usize>,
}

/// `max_a |ω₁(a) − ω₂(a)|` over candidates, each of which must lie in the Lipschitz ball.
pub fn certificate_lower_bound(
    s1: &MoyalPureState,
    s2: &MoyalPureState,
    candidates: &[MoyalElement],
) -> Result<CertificateBound> {
    check_theta(s1.theta(), s2.theta())?;
    let mut best = CertificateBound { value: 0.0, index: None };
    for (index, a) in candidates.iter().enumerate() {
        let report = check_ball(a, DEFAULT_TOL);
        if !report.member {
            return Err(Error::OutsideBall { index, report: Box::new(report) });
        }
        let v = (eval(s1, a)? - eval(s2, a)?).norm();
        if best.index.is_none() || v > best.value {
            best = CertificateBound { value: v, index: Some(index) };
        }
    }
    Ok(best)
}

/// `√(2θ) Σ_{k=0}^{min(p,q)} 1/(√(p−k) + √(q−k))`, bounding `|a_{pq}|` on the ball for `p ≠ q`.
fn off_diagonal_weight(p: usize, q: usize, theta: f64) -> f64 {
    let s: f64 = (0..=p.min(q))
        .map(|k| 1.0 / (((p - k) as f64).sqrt() + ((q - k) as f64).sqrt()))
        .sum();
    (2.0 * theta).sqrt() * s
}

/// Upper bound on the distance between finitely supported states.
///
/// With `W_{pq} = conj(c_p) c_q − conj(c′_p) c′_q`, the diagonal part is
/// bounded by telescoping through `|a_{kk} − a_{k−1,k−1}| ≤ √(θ/2)/√k` and
/// the off-diagonal part by `Σ_{p≠q} |W_{pq}| K_{pq}`.
pub fn analytic_upper_bound(s1: &MoyalPureState, s2: &MoyalPureState) -> Result<f64> {
    check_theta(s1.theta(), s2.theta())?;
    if !(s1.has_finite_support() && s2.has_finite_support()) {
        return Err(Error::NotApplicable("analytic upper bound needs finitely supported states".into()));
    }
    let theta = s1.theta();
    let n = s1.support_len().max(s2.support_len());
    let c1 = s1.leading_coeffs(n);
    let c2 = s2.leading_coeffs(n);
    let c = |v: &[num_complex::Complex64], i: usize| v.get(i).copied().unwrap_or_default();
    let w = |p: usize, q: usize| c(&c1, p).conj() * c(&c1, q) - c(&c2, p).conj() * c(&c2, q);

    let mut diagonal = 0.0;
    let mut suffix = 0.0;
    for k in (1..n).rev() {
        suffix += w(k, k).re;
        diagonal += suffix.abs() / (k as f64).sqrt();
    }
    diagonal *= (theta / 2.0).sqrt();

    let mut off = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                let wpq = w(p, q).norm();
                if wpq > 0.0 {
                    off += wpq * off_diagonal_weight(p, q, theta);
                }
            }
        }
    }
    Ok(diagonal + off)
}

/// A state appearing in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReportState {
    Moyal(MoyalPureState),
    Torus(TorusState),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub fitted_slope: f64,
    pub theory_slope: f64,
    pub claimed: bool,
}

/// Bracketed distance estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub theta: f64,
    /// Truncation order (Moyal) or box radius (torus).
    pub order: usize,
    pub state_a: ReportState,
    pub state_b: ReportState,
    pub closed_form: Option<f64>,
    pub certificate_lower: f64,
    pub certificate_id: Option<String>,
    pub analytic_upper: Option<f64>,
    pub optimizer_lower: Option<f64>,
    pub feasibility_residual: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: bool,
    /// `analytic_upper − max(lower bounds)`; absent without an upper bound.
    pub bracket_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence: Option<Divergence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
}

impl DistanceReport {
    pub fn best_lower(&self) -> f64 {
        self.certificate_lower.max(self.optimizer_lower.unwrap_or(0.0))
    }

    pub(crate) fn refresh_bracket(&mut self) {
        self.bracket_width = self.analytic_upper.map(|u| u - self.best_lower());
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceParams {
    pub order: usize,
    pub optimizer: OptimizerParams,
    /// Run the optimizer when the order covers both supports.
    pub optimize: bool,
    pub candidate_limit: usize,
}

impl Default for DistanceParams {
    fn default() -> Self {
        Self { order: 16, optimizer: OptimizerParams::default(), optimize: true, candidate_limit: CANDIDATE_LIMIT }
    }
}

fn basis_index(s: &MoyalPureState) -> Option<usize> {
    match s.construction() {
        Construction::Basis { m } => Some(*m),
        _ => None,
    }
}

/// Standard certificate family: `â(k)` and the steps `a_step(k)` for `k < limit`.
pub fn standard_candidates(theta: f64, limit: usize) -> Result<(Vec<MoyalElement>, Vec<String>)> {
    let mut elems = Vec::with_capacity(2 * limit);
    let mut ids = Vec::with_capacity(2 * limit);
    for k in 0..limit {
        elems.push(ahat(k, theta)?);
        ids.push(format!("ahat({k})"));
    }
    for k in 0..limit {
        elems.push(a_step(k, theta)?);
        ids.push(format!("a_step({k})"));
    }
    Ok((elems, ids))
}

/// Brackets `d(ω₁, ω₂)` with every mechanism that applies to the pair.
pub fn moyal_distance(s1: &MoyalPureState, s2: &MoyalPureState, params: &DistanceParams) -> Result<DistanceReport> {
    check_theta(s1.theta(), s2.theta())?;
    let theta = s1.theta();
    positive_theta(theta)?;
    if params.order < 2 {
        return Err(Error::InvalidParameter("order must be at least 2".into()));
    }

    let closed_form = match (basis_index(s1), basis_index(s2)) {
        (Some(m), Some(n)) => Some(closed_form_distance(m, n, theta)),
        _ => None,
    };

    let limit = params.candidate_limit.min(params.order);
    let (candidates, ids) = standard_candidates(theta, limit)?;
    let cert = certificate_lower_bound(s1, s2, &candidates)?;
    let mut certificate_lower = cert.value;
    let mut certificate_id = cert.index.map(|i| ids[i].clone());
    let mut warm = cert.index.map(|i| candidates[i].clone());

    // the â(m₀) family beyond the dense limit, read off through the probe sum
    let reach = s1.support_len().max(s2.support_len());
    let mut scan = Vec::new();
    let mut m0 = limit.max(1);
    while m0 < reach {
        scan.push(m0);
        m0 *= 2;
    }
    if reach > limit {
        scan.push(reach - 1);
    }
    for m0 in scan {
        let v = bound_b(m0 as u64, s1, s2)?;
        if v > certificate_lower {
            certificate_lower = v;
            certificate_id = Some(format!("ahat({m0})"));
            warm = None;
        }
    }

    let analytic_upper = match analytic_upper_bound(s1, s2) {
        Ok(v) => Some(v),
        Err(Error::NotApplicable(_)) => None,
        Err(e) => return Err(e),
    };

    let mut report = DistanceReport {
        theta,
        order: params.order,
        state_a: ReportState::Moyal(s1.clone()),
        state_b: ReportState::Moyal(s2.clone()),
        closed_form,
        certificate_lower,
        certificate_id,
        analytic_upper,
        optimizer_lower: None,
        feasibility_residual: None,
        iterations: None,
        converged: true,
        bracket_width: None,
        divergence: None,
        elapsed_seconds: None,
    };

    let fits = params.order >= reach + 2;
    if params.optimize && fits {
        let warm = warm.filter(|w| w.order() <= params.order);
        let out = optimize_distance(s1, s2, params.order, &params.optimizer, warm.as_ref())?;
        report.optimizer_lower = Some(out.value);
        report.feasibility_residual = Some(out.feasibility_residual);
        report.iterations = Some(out.iterations);
        report.converged = out.converged;
    }
    report.refresh_bracket();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{basis_state, finite_state, zeta_state};
    use num_complex::Complex64;

    #[test]
    fn closed_form_values() {
        for theta in [0.3, 1.0, 2.0] {
            assert!((closed_form_distance(1, 0, theta) - (theta / 2.0).sqrt()).abs() < 1e-15);
            assert_eq!(closed_form_distance(4, 4, theta), 0.0);
            assert_eq!(closed_form_distance(2, 5, theta), closed_form_distance(5, 2, theta));
        }
        assert!((closed_form_distance(2, 0, 2.0) - (1.0 + 1.0 / 2f64.sqrt())).abs() < 1e-15);
        assert!((closed_form_distance(2, 0, 2.0) - 1.70711).abs() < 1e-5);
    }

    #[test]
    fn triangular() {
        assert!(triangular_check(0, 1, 2, 1.0).unwrap().abs() < 1e-15);
        assert_eq!(triangular_check(3, 3, 3, 1.0).unwrap(), 0.0);
        assert!(triangular_check(2, 1, 3, 1.0).is_err());
    }

    #[test]
    fn certificates_reproduce_closed_form() {
        let theta = 0.5;
        for m in 0..6 {
            for n in 0..m {
                let cands: Vec<_> = (0..=m).map(|k| ahat(k, theta).unwrap()).collect();
                let b = certificate_lower_bound(&basis_state(m, theta).unwrap(), &basis_state(n, theta).unwrap(), &cands).unwrap();
                assert!((b.value - closed_form_distance(m, n, theta)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn step_certificate() {
        let theta = 1.4;
        let b = certificate_lower_bound(
            &basis_state(1, theta).unwrap(),
            &basis_state(0, theta).unwrap(),
            &[a_step(0, theta).unwrap()],
        )
        .unwrap();
        assert!((b.value - (theta / 2.0).sqrt()).abs() < 1e-15);
        assert_eq!(b.index, Some(0));
    }

    #[test]
    fn outside_candidate_is_rejected() {
        let big = ahat(2, 1.0).unwrap().scale(1.5);
        let s = basis_state(0, 1.0).unwrap();
        match certificate_lower_bound(&s, &s, &[ahat(1, 1.0).unwrap(), big]) {
            Err(Error::OutsideBall { index, report }) => {
                assert_eq!(index, 1);
                assert!(!report.member);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn upper_bound_values() {
        let theta = 2.0;
        for (m, n) in [(0, 1), (3, 0), (2, 7)] {
            let u = analytic_upper_bound(&basis_state(m, theta).unwrap(), &basis_state(n, theta).unwrap()).unwrap();
            assert!((u - closed_form_distance(m, n, theta)).abs() < 1e-12);
        }
        let s = basis_state(3, theta).unwrap();
        assert_eq!(analytic_upper_bound(&s, &s).unwrap(), 0.0);
        let z = zeta_state(1.2, 100, theta).unwrap();
        assert!(matches!(analytic_upper_bound(&s, &z), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn superposition_upper_bound() {
        // W = diag(1/2, −1/2) with off-diagonal −1/2: √(θ/2)·½ + 2·½·K₀₁, K₀₁ = √(2θ)
        let theta = 1.0;
        let h = 1.0 / 2f64.sqrt();
        let psi = finite_state(&[Complex64::new(h, 0.0), Complex64::new(h, 0.0)], theta).unwrap();
        let u = analytic_upper_bound(&basis_state(0, theta).unwrap(), &psi).unwrap();
        let want = (theta / 2.0f64).sqrt() * 0.5 + (2.0 * theta).sqrt();
        assert!((u - want).abs() < 1e-14, "{u} vs {want}");
    }

    #[test]
    fn report_brackets_basis_pair() {
        let params = DistanceParams { order: 8, ..DistanceParams::default() };
        let r = moyal_distance(&basis_state(0, 1.0).unwrap(), &basis_state(1, 1.0).unwrap(), &params).unwrap();
        let d = r.closed_form.unwrap();
        assert!((d - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((r.certificate_lower - d).abs() < 1e-12);
        assert!((r.analytic_upper.unwrap() - d).abs() < 1e-12);
        let opt = r.optimizer_lower.unwrap();
        assert!(opt >= r.certificate_lower - 1e-9 && opt <= d + 1e-9);
        assert!(r.bracket_width.unwrap().abs() < 1e-9);
        let v = serde_json::to_value(&r).unwrap();
        for key in [
            "theta", "order", "state_a", "state_b", "closed_form", "certificate_lower", "analytic_upper",
            "optimizer_lower", "feasibility_residual", "iterations", "converged",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let back: DistanceReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn zeta_pair_has_lower_bounds_only() {
        let params = DistanceParams { order: 8, ..DistanceParams::default() };
        let r = moyal_distance(&basis_state(0, 1.0).unwrap(), &zeta_state(1.2, 100_000, 1.0).unwrap(), &params).unwrap();
        assert!(r.analytic_upper.is_none() && r.bracket_width.is_none() && r.optimizer_lower.is_none());
        assert!(r.certificate_lower > 1.0);
        assert!(r.certificate_id.unwrap().starts_with("ahat("));
    }
}
