//! The noncommutative torus in the Weyl basis `U^M`, `M ∈ Z²`.
//!
//! `U^M U^N = σ(M, N) U^{M+N}` with `σ(M, N) = exp(iπθ(m₁n₂ − m₂n₁))`,
//! which follows from `U^M = e^{−iπθ m₁m₂} u₁^{m₁} u₂^{m₂}` and
//! `u₁u₂ = e^{2πiθ} u₂u₁`. Elements act on the GNS space `ℓ²(Z²)` by
//! twisted convolution; operator norms are computed on the restriction to
//! vectors supported in the box `[−R, R]²`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::distance::{DistanceReport, ReportState};
use crate::error::{check_theta, Error, Result};
use crate::linalg::{gram_lanczos_norm, NormEstimate};

pub type Index = (i64, i64);

/// Relative change below which box doubling stops.
pub const BOX_TOL: f64 = 1e-9;
/// Largest box radius tried by the doubling rule.
pub const MAX_BOX_RADIUS: usize = 64;
/// Boxes with at most this many points use a dense decomposition.
pub const DENSE_BOX_COLUMNS: usize = 121;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ElementRepr", into = "ElementRepr")]
pub struct TorusElement {
    theta: f64,
    terms: BTreeMap<Index, Complex64>,
}

fn finite_theta(theta: f64) -> Result<()> {
    if theta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("theta must be finite, got {theta}")))
    }
}

impl TorusElement {
    /// Sums repeated indices and drops zero coefficients.
    pub fn new(theta: f64, terms: impl IntoIterator<Item = (Index, Complex64)>) -> Result<Self> {
        finite_theta(theta)?;
        let mut map = BTreeMap::new();
        for (m, c) in terms {
            *map.entry(m).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        map.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Ok(Self { theta, terms: map })
    }

    pub fn zero(theta: f64) -> Result<Self> {
        Self::new(theta, [])
    }

    pub fn unit(theta: f64) -> Result<Self> {
        Self::monomial(theta, (0, 0), Complex64::new(1.0, 0.0))
    }

    /// `c · U^M`.
    pub fn monomial(theta: f64, m: Index, c: Complex64) -> Result<Self> {
        Self::new(theta, [(m, c)])
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn coeff(&self, m: Index) -> Complex64 {
        self.terms.get(&m).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (Index, Complex64)> + '_ {
        self.terms.iter().map(|(&m, &c)| (m, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `max(|m₁|, |m₂|)` over the support; zero for the zero element.
    pub fn support_radius(&self) -> usize {
        self.terms.keys().map(|&(a, b)| a.unsigned_abs().max(b.unsigned_abs()) as usize).max().unwrap_or(0)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::new(self.theta, self.terms().map(|(m, c)| (m, c * factor))).expect("theta already checked")
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        check_theta(self.theta, other.theta)?;
        Self::new(self.theta, self.terms().chain(other.terms()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let keys: std::collections::BTreeSet<Index> = self.terms.keys().chain(other.terms.keys()).copied().collect();
        keys.into_iter().map(|m| (self.coeff(m) - other.coeff(m)).norm()).fold(0.0, f64::max)
    }
}

/// `σ(M, N) = exp(iπθ(m₁n₂ − m₂n₁))`.
pub fn sigma(m: Index, n: Index, theta: f64) -> Complex64 {
    let k = (m.0 * n.1 - m.1 * n.0) as f64;
    // reduce θk modulo 2 keeping the rounding error of the product
    let t = theta * k;
    let err = theta.mul_add(k, -t);
    let turns = t.rem_euclid(2.0) + err;
    Complex64::from_polar(1.0, PI * turns)
}

/// `c_P = Σ_{M+N=P} a_M b_N σ(M, N)`.
pub fn weyl_product(a: &TorusElement, b: &TorusElement) -> Result<TorusElement> {
    check_theta(a.theta, b.theta)?;
    let theta = a.theta;
    let mut out = Vec::with_capacity(a.len() * b.len());
    for (m, x) in a.terms() {
        for (n, y) in b.terms() {
            out.push(((m.0 + n.0, m.1 + n.1), x * y * sigma(m, n, theta)));
        }
    }
    TorusElement::new(theta, out)
}

/// `(a*)_M = conj(a_{−M})`.
pub fn torus_involution(a: &TorusElement) -> TorusElement {
    TorusElement::new(a.theta, a.terms().map(|((m1, m2), c)| ((-m1, -m2), c.conj()))).expect("theta already checked")
}

fn derivation(a: &TorusElement, sign: f64) -> TorusElement {
    let factor = |(n1, n2): Index| Complex64::new(0.0, 2.0 * PI) * Complex64::new(n1 as f64, sign * n2 as f64);
    TorusElement::new(a.theta, a.terms().map(|(n, c)| (n, c * factor(n)))).expect("theta already checked")
}

/// `δ = δ₁ + iδ₂`: `α_N = 2πi(n₁ + i n₂) a_N`.
pub fn torus_del(a: &TorusElement) -> TorusElement {
    derivation(a, 1.0)
}

/// `δ̄ = δ₁ − iδ₂`: coefficient `2πi(n₁ − i n₂) a_N`.
pub fn torus_delbar(a: &TorusElement) -> TorusElement {
    derivation(a, -1.0)
}

/// Tracial state `τ(a) = a_{(0,0)}`.
pub fn tau(a: &TorusElement) -> Complex64 {
    a.coeff((0, 0))
}

/// `ω_{Φ_M}(a) = τ(a) + ½(a_M + a_{−M})`.
pub fn phi_state_eval(m: Index, a: &TorusElement) -> Result<Complex64> {
    if m == (0, 0) {
        return Err(Error::InvalidParameter("Φ_M needs M ≠ (0,0)".into()));
    }
    Ok(tau(a) + 0.5 * (a.coeff(m) + a.coeff((-m.0, -m.1))))
}

/// `â^M = U^M / (2π(m₁ + i m₂))`.
pub fn torus_certificate(m: Index, theta: f64) -> Result<TorusElement> {
    if m == (0, 0) {
        return Err(Error::InvalidParameter("certificate needs M ≠ (0,0)".into()));
    }
    let denom = 2.0 * PI * Complex64::new(m.0 as f64, m.1 as f64);
    TorusElement::monomial(theta, m, denom.inv())
}

fn modulus(m: Index) -> f64 {
    (m.0 as f64).hypot(m.1 as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub enum TorusState {
    Tracial,
    Phi(Index),
}

impl TorusState {
    pub fn phi(m: Index) -> Result<Self> {
        if m == (0, 0) {
            Err(Error::InvalidParameter("Φ_M needs M ≠ (0,0)".into()))
        } else {
            Ok(TorusState::Phi(m))
        }
    }

    pub fn eval(&self, a: &TorusElement) -> Complex64 {
        match *self {
            TorusState::Tracial => tau(a),
            TorusState::Phi(m) => phi_state_eval(m, a).expect("validated at construction"),
        }
    }
}

/// Sparse matrix of `L(a)` restricted to the box `[−R, R]²`, entry
/// `a_P σ(P, Q)` at row `P + Q`, column `Q`.
struct BoxOperator {
    radius: i64,
    out_radius: i64,
    entries: Vec<(usize, usize, Complex64)>,
}

impl BoxOperator {
    fn new(a: &TorusElement, radius: usize) -> Self {
        let r = radius as i64;
        let out_radius = r + a.support_radius() as i64;
        let terms: Vec<(Index, Complex64)> = a.terms().collect();
        let mut entries = Vec::with_capacity(Self::side(r).pow(2) * terms.len());
        for (col, q) in Self::points(r).enumerate() {
            for &(p, c) in &terms {
                let row = Self::index(out_radius, (p.0 + q.0, p.1 + q.1));
                entries.push((row, col, c * sigma(p, q, a.theta)));
            }
        }
        Self { radius: r, out_radius, entries }
    }

    fn side(r: i64) -> usize {
        (2 * r + 1) as usize
    }

    fn rows(&self) -> usize {
        Self::side(self.out_radius).pow(2)
    }

    fn cols(&self) -> usize {
        Self::side(self.radius).pow(2)
    }

    fn index(r: i64, (q1, q2): Index) -> usize {
        ((q1 + r) as usize) * Self::side(r) + (q2 + r) as usize
    }

    fn points(r: i64) -> impl Iterator<Item = Index> {
        (-r..=r).flat_map(move |a| (-r..=r).map(move |b| (a, b)))
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.rows()];
        for &(row, col, v) in &self.entries {
            y[row] += v * x[col];
        }
        y
    }

    fn apply_adj(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut x = vec![Complex64::new(0.0, 0.0); self.cols()];
        for &(row, col, v) in &self.entries {
            x[col] += v.conj() * y[row];
        }
        x
    }

    fn dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.rows(), self.cols());
        for &(row, col, v) in &self.entries {
            m[(row, col)] += v;
        }
        m
    }
}

/// Re-indexes a box vector of radius `from` into the larger box `to`.
fn embed(x: &[Complex64], from: usize, to: usize) -> Vec<Complex64> {
    let (f, t) = (from as i64, to as i64);
    let mut out = vec![Complex64::new(0.0, 0.0); BoxOperator::side(t).pow(2)];
    for a in -f..=f {
        for b in -f..=f {
            out[BoxOperator::index(t, (a, b))] = x[BoxOperator::index(f, (a, b))];
        }
    }
    out
}

fn check_box(a: &TorusElement, radius: usize) -> Result<()> {
    let support = a.support_radius();
    if radius < support + 1 {
        Err(Error::UndersizedBox { radius, support })
    } else {
        Ok(())
    }
}

fn box_lanczos(a: &TorusElement, radius: usize, start: Option<Vec<Complex64>>) -> NormEstimate<Complex64> {
    let op = BoxOperator::new(a, radius);
    gram_lanczos_norm(|x| op.apply(x), |y| op.apply_adj(y), op.cols(), start)
}

/// Box norm by a dense decomposition, used for small boxes.
fn box_dense(a: &TorusElement, radius: usize) -> f64 {
    BoxOperator::new(a, radius).dense().singular_values().max()
}

/// Norm of `L(a)` on vectors supported in `[−R, R]²`; needs `R ≥ support radius + 1`.
pub fn torus_op_norm(a: &TorusElement, box_radius: usize) -> Result<f64> {
    check_box(a, box_radius)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    if BoxOperator::side(box_radius as i64).pow(2) <= DENSE_BOX_COLUMNS {
        return Ok(box_dense(a, box_radius));
    }
    Ok(box_lanczos(a, box_radius, None).norm)
}

/// `||[D, π(a)]||_op = max(||L(δa)||, ||L(δ̄a)||)` on the box.
pub fn torus_commutator_norm(a: &TorusElement, box_radius: usize) -> Result<f64> {
    Ok(torus_op_norm(&torus_del(a), box_radius)?.max(torus_op_norm(&torus_delbar(a), box_radius)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergedNorm {
    pub norm: f64,
    pub box_radius: usize,
    pub converged: bool,
}

/// Operator norm with the box doubled until the value changes by less than [`BOX_TOL`].
pub fn converged_op_norm(a: &TorusElement) -> ConvergedNorm {
    if a.is_empty() {
        return ConvergedNorm { norm: 0.0, box_radius: 1, converged: true };
    }
    let mut radius = a.support_radius() + 1;
    let mut res = box_lanczos(a, radius, None);
    loop {
        let next = (2 * radius).min(MAX_BOX_RADIUS);
        if next == radius {
            return ConvergedNorm { norm: res.norm, box_radius: radius, converged: false };
        }
        let start = embed(&res.vector, radius, next);
        let new = box_lanczos(a, next, Some(start));
        let done = (new.norm - res.norm).abs() <= BOX_TOL * new.norm.max(f64::MIN_POSITIVE);
        res = if new.norm >= res.norm { new } else { NormEstimate { vector: embed(&res.vector, radius, next), ..res } };
        radius = next;
        if done {
            return ConvergedNorm { norm: res.norm, box_radius: radius, converged: true };
        }
    }
}

/// Commutator norm at converged boxes for both derivations.
pub fn converged_commutator_norm(a: &TorusElement) -> ConvergedNorm {
    let d = converged_op_norm(&torus_del(a));
    let db = converged_op_norm(&torus_delbar(a));
    ConvergedNorm {
        norm: d.norm.max(db.norm),
        box_radius: d.box_radius.max(db.box_radius),
        converged: d.converged && db.converged,
    }
}

/// Bounds on `d(ω₁, ω₂)` for torus states.
///
/// The certificates are `â^M` for the modes the states see; the upper bound
/// uses `|a_N| ≤ 1/(2π|N|)` on the Lipschitz ball.
pub fn torus_distance(s1: TorusState, s2: TorusState, theta: f64) -> Result<DistanceReport> {
    torus_distance_in_box(s1, s2, theta, None)
}

/// As [`torus_distance`], with certificate norms taken on a fixed box when `box_radius` is given.
pub fn torus_distance_in_box(
    s1: TorusState,
    s2: TorusState,
    theta: f64,
    box_radius: Option<usize>,
) -> Result<DistanceReport> {
    finite_theta(theta)?;
    let modes = |s: TorusState| match s {
        TorusState::Tracial => Vec::new(),
        TorusState::Phi(m) => vec![m],
    };
    let same = match (s1, s2) {
        (TorusState::Tracial, TorusState::Tracial) => true,
        (TorusState::Phi(m), TorusState::Phi(n)) => m == n || m == (-n.0, -n.1),
        _ => false,
    };

    let closed_form = match (s1, s2) {
        _ if same => Some(0.0),
        (TorusState::Phi(m), TorusState::Tracial) | (TorusState::Tracial, TorusState::Phi(m)) => {
            Some(1.0 / (2.0 * PI * modulus(m)))
        }
        _ => None,
    };

    let mut certificate_lower = 0.0;
    let mut certificate_id = None;
    let mut residual = 0.0_f64;
    let mut radius = 1;
    let mut converged = true;
    if !same {
        for m in modes(s1).into_iter().chain(modes(s2)) {
            let cert = torus_certificate(m, theta)?;
            let norm = match box_radius {
                Some(r) => ConvergedNorm { norm: torus_commutator_norm(&cert, r)?, box_radius: r, converged: true },
                None => converged_commutator_norm(&cert),
            };
            radius = radius.max(norm.box_radius);
            converged &= norm.converged;
            residual = residual.max((norm.norm - 1.0).abs());
            let value = (s1.eval(&cert) - s2.eval(&cert)).norm() / norm.norm.max(1.0);
            if certificate_id.is_none() || value > certificate_lower {
                certificate_lower = value;
                certificate_id = Some(format!("ahat^M({},{})", m.0, m.1));
            }
        }
    }

    // ½|a_M + a_{−M}| ≤ 1/(2π|M|) per Φ_M; the two Φ contributions add
    let analytic_upper = if same {
        0.0
    } else {
        modes(s1).into_iter().chain(modes(s2)).map(|m| 1.0 / (2.0 * PI * modulus(m))).sum()
    };

    let mut report = DistanceReport {
        theta,
        order: radius,
        state_a: ReportState::Torus(s1),
        state_b: ReportState::Torus(s2),
        closed_form,
        certificate_lower,
        certificate_id,
        analytic_upper: Some(analytic_upper),
        optimizer_lower: None,
        feasibility_residual: Some(residual),
        iterations: None,
        converged,
        bracket_width: None,
        divergence: None,
        elapsed_seconds: None,
    };
    report.refresh_bracket();
    Ok(report)
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    m: [i64; 2],
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    theta: f64,
    terms: Vec<TermRepr>,
}

impl From<TorusElement> for ElementRepr {
    fn from(a: TorusElement) -> Self {
        let terms = a.terms().map(|((m1, m2), c)| TermRepr { m: [m1, m2], re: c.re, im: c.im }).collect();
        ElementRepr { theta: a.theta, terms }
    }
}

impl TryFrom<ElementRepr> for TorusElement {
    type Error = Error;

    fn try_from(r: ElementRepr) -> Result<Self> {
        TorusElement::new(r.theta, r.terms.into_iter().map(|t| ((t.m[0], t.m[1]), Complex64::new(t.re, t.im))))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum StateRepr {
    Tracial,
    Phi { m: [i64; 2] },
}

impl From<TorusState> for StateRepr {
    fn from(s: TorusState) -> Self {
        match s {
            TorusState::Tracial => StateRepr::Tracial,
            TorusState::Phi((a, b)) => StateRepr::Phi { m: [a, b] },
        }
    }
}

impl TryFrom<StateRepr> for TorusState {
    type Error = Error;

    fn try_from(r: StateRepr) -> Result<Self> {
        match r {
            StateRepr::Tracial => Ok(TorusState::Tracial),
            StateRepr::Phi { m } => TorusState::phi((m[0], m[1])),
        }
    }
}
