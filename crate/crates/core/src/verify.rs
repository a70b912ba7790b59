//! Randomized property suites behind `ncdist verify`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distance::{analytic_upper_bound, certificate_lower_bound, closed_form_distance, triangular_check};
use crate::error::{Error, Result};
use crate::lipschitz::{commutator_norm, radial_ball_check};
use crate::moyal::{ahat, del, delbar, involution, reconstruct, star, trace_integral, MoyalElement};
use crate::optimizer::{optimize_distance, OptimizerParams};
use crate::probes::{bound_b, crossover_index, estimate_checks, g_seq, pair_theory, EstimateGrid};
use crate::states::{basis_state, diagonal_difference, eval, finite_state, zeta_state, MoyalPureState, StateSpec};
use crate::torus::{
    converged_commutator_norm, phi_state_eval, sigma, tau, torus_certificate, torus_del, torus_delbar,
    torus_distance, torus_involution, torus_op_norm, weyl_product, Index, TorusElement, TorusState,
};

pub const THETAS: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Algebra,
    Calculus,
    Lipschitz,
    States,
    Distance,
    Probes,
    Torus,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Algebra, Suite::Calculus, Suite::Lipschitz, Suite::States, Suite::Distance, Suite::Probes, Suite::Torus];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Calculus => "calculus",
            Suite::Lipschitz => "lipschitz",
            Suite::States => "states",
            Suite::Distance => "distance",
            Suite::Probes => "probes",
            Suite::Torus => "torus",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite `{s}`")))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub instances: usize,
    pub max_order: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { instances: 200, max_order: 16, seed: 7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub instances: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Accumulates the worst deviation of one named property.
struct Tally {
    name: &'static str,
    tolerance: f64,
    instances: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self { name, tolerance, instances: 0, worst: 0.0 }
    }

    fn add(&mut self, deviation: f64) {
        self.instances += 1;
        if deviation.is_nan() || deviation > self.worst {
            self.worst = if deviation.is_nan() { f64::INFINITY } else { deviation };
        }
    }

    /// Records a boolean property as deviation 0 or 1.
    fn flag(&mut self, ok: bool) {
        self.add(if ok { 0.0 } else { 1.0 });
    }

    fn finish(self) -> Check {
        Check {
            name: self.name.to_string(),
            instances: self.instances,
            max_deviation: self.worst,
            tolerance: self.tolerance,
            passed: self.worst <= self.tolerance,
        }
    }
}

pub fn random_complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Entries uniform in the square `[−1, 1]²`, divided by the order.
pub fn random_element(rng: &mut impl Rng, theta: f64, order: usize) -> MoyalElement {
    let scale = 1.0 / order as f64;
    MoyalElement::from_fn(theta, order, |_, _| random_complex(rng) * scale).expect("positive theta")
}

pub fn random_torus_element(rng: &mut impl Rng, theta: f64, radius: i64, terms: usize) -> TorusElement {
    let items: Vec<(Index, Complex64)> = (0..terms)
        .map(|_| ((rng.random_range(-radius..=radius), rng.random_range(-radius..=radius)), random_complex(rng)))
        .collect();
    TorusElement::new(theta, items).expect("finite theta")
}

fn random_index(rng: &mut impl Rng, r: i64) -> Index {
    (rng.random_range(-r..=r), rng.random_range(-r..=r))
}

pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (suite as u64).wrapping_mul(0x9e37_79b9));
    let checks = match suite {
        Suite::Algebra => algebra(&mut rng, cfg),
        Suite::Calculus => calculus(&mut rng, cfg),
        Suite::Lipschitz => lipschitz(&mut rng, cfg),
        Suite::States => states(&mut rng, cfg),
        Suite::Distance => distance(&mut rng, cfg),
        Suite::Probes => probes(&mut rng, cfg),
        Suite::Torus => torus(&mut rng, cfg),
    };
    let passed = checks.iter().all(|c| c.passed);
    SuiteOutcome { suite, checks, passed }
}

fn pick_theta(rng: &mut impl Rng) -> f64 {
    THETAS[rng.random_range(0..THETAS.len())]
}

fn algebra(rng: &mut ChaCha8Rng, cfg: &VerifyConfig) -> Vec<Check> {
    let mut assoc = Tally::new("associativity", 1e-12);
    let mut cyclic = Tally::new("trace cyclicity", 1e-12);
    let mut anti = Tally::new("involution anti-homomorphism", 1e-12);
    let mut invol = Tally::new("involution is involutive", 0.0);
    for _ in 0..cfg.instances {
        let theta = pick_theta(rng);
        let n = rng.random_range(1..=cfg.max_order);
        let (a, b, c) = (random_element(rng, theta, n), random_element(rng, theta, n), random_element(rng, theta, n));
        let ab = star(&a, &b).unwrap();
        assoc.add(star(&ab, &c).unwrap().max_abs_diff(&star(&a, &star(&b, &c).unwrap()).unwrap()));
        cyclic.add((trace_integral(&ab) - trace_integral(&star(&b, &a).unwrap())).norm());
        anti.add(involution(&ab).max_abs_diff(&star(&involution(&b), &involution(&a)).unwrap()));
        invol.add(involution(&involution(&a)).max_abs_diff(&a));
    }
    vec![assoc.finish(), cyclic.finish(), anti.finish(), invol.finish()]
}

fn calculus(rng: &mut ChaCha8Rng, cfg: &VerifyConfig) -> Vec<Check> {
    let mut leibniz = Tally::new("Leibniz rule", 1e-12);
    let mut roundtrip = Tally::new("reconstruction roundtrip", 1e-12);
    let mut conj = Tally::new("(del a)* = delbar(a*)", 1e-13);
    for _ in 0..cfg.instances {
        let theta = pick_theta(rng);
        let n = rng.random_range(1..=cfg.max_order);
        let (a, b) = (random_element(rng, theta, n), random_element(rng, theta, n));
        let ab = star(&a, &b).unwrap();
        for d in [del as fn(&MoyalElement) -> _, delbar] {
            let lhs = d(&ab).to_element();
            let rhs = star(&d(&a).to_element(), &b).unwrap().checked_add(&star(&a, &d(&b).to_element()).unwrap()).unwrap();
            leibniz.add(lhs.max_abs_diff(&rhs));
        }
        let back = reconstruct(a.coeff(0, 0), &del(&a), &delbar(&a)).unwrap();
        roundtrip.add(back.max_abs_diff(&a.padded(back.order())));
        let lhs = MoyalElement::new(theta, del(&a).adjoint()).unwrap();
        conj.add(lhs.max_abs_diff(&delbar(&involution(&a)).to_element()));
    }
    vec![leibniz.finish(), roundtrip.finish(), conj.finish()]
}

fn lipschitz(rng: &mut ChaCha8Rng, cfg: &VerifyConfig) -> Vec<Check> {
    let mut entries = Tally::new("ball entries bounded by 1/sqrt2", 1e-9);
    let mut certs = Tally::new("certificate norms equal 1", 1e-10);
    let mut radial = Tally::new("radial criterion matches norm", 0.0);
    for _ in 0..cfg.instances {
        let theta = pick_theta(rng);
        let n = rng.random_range(1..=cfg.max_order);
        let a = random_element(rng, theta, n);
        let norm = commutator_norm(&a);
        if norm > 0.0 {
            let a = a.scale(1.0 / norm);
            let worst = del(&a).coeffs().iter().chain(delbar(&a).coeffs().iter()).fold(0.0_f64, |m, z| m.max(z.norm()));
            entries.add((worst - FRAC_1_SQRT_2).max(0.0));
        }
        let diag: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let r = MoyalElement::radial(theta, &diag).unwrap();
        let cn = commutator_norm(&r);
        if (cn - 1.0).abs() > 1e-6 {
            radial.flag(radial_ball_check(&r).unwrap() == (cn <= 1.0));
        }
    }
    for theta in THETAS {
        for m0 in 0..=50 {
            certs.add((commutator_norm(&ahat(m0, theta).unwrap()) - 1.0).abs());
        }
    }
    vec![entries.finish(), certs.finish(), radial.finish()]
}

/// Random finite state with between 1 and `max_len` coefficients.
fn random_finite_state(rng: &mut impl Rng, theta: f64, max_len: usize) -> MoyalPureState {
    let len = rng.random_range(1..=max_len);
    let w: Vec<Complex64> = (0..len).map(|_| random_complex(rng)).collect();
    finite_state(&w, theta).unwrap()
}

fn states(rng: &mut ChaCha8Rng, cfg: &VerifyConfig) -> Vec<Check> {
    let mut norm = Tally::new("normalization", 1e-12);
    let mut positive = Tally::new("positivity on ahat", 1e-14);
    let mut zero_sum = Tally::new("difference sums to zero", 1e-12);
    let mut real = Tally::new("real on self-adjoint elements", 1e-13);
    for _ in 0..cfg.instances {
        let theta = pick_theta(rng);
        let s = random_finite_state(rng, theta, cfg.max_order);
        let len = s.support_len();
        let z = zeta_state(rng.random_range(1.01..2.0), rng.random_range(1..5000), theta).unwrap();
        let b = basis_state(rng.random_range(0..cfg.max_order), theta).unwrap();
        for st in [&s, &z, &b] {
            norm.add((st.total_weight() - 1.0).abs());
        }
        let m0 = rng.random_range(0..cfg.max_order);
        let cert = ahat(m0, theta).unwrap();
        for st in [&s, &z, &b] {
            let v = eval(st, &cert).unwrap();
            positive.add((-v.re).max(0.0) + v.im.abs());
        }
        zero_sum.add(diagonal_difference(&s, &z).unwrap().iter().sum::<f64>().abs());
        let h = random_element(rng, theta, len).hermitian_part();
        real.add(eval(&s, &h).unwrap().im.abs());
    }
    vec![norm.finish(), positive.finish(), zero_sum.finish(), real.finish()]
}

fn distance(rng: &mut ChaCha8Rng, cfg: &VerifyConfig) -> Vec<Check> {
    let mut saturation = Tally::new("certificate = upper = closed form", 1e-12);
    let mut triangle = Tally::new("triangular equality", 1e-12);
    let mut bracket = Tally::new("certificate below upper bound", 1e-9);
    let mut phase = Tally::new("phase invariance", 1e-12);
    let mut symmetrize = Tally::new("self-adjoint part keeps the objective", 1e-12);
    let mut optimizer = Tally::new("optimizer inside the bracket", 1e-9);
    for theta in THETAS {
        for m in 0..=6 {
            for n in 0..m {
                let (sm, sn) = (basis_state(m, theta).unwrap(), basis_state(n, theta).unwrap());
                let cands: Vec<_> = (0..=m).map(|k| ahat(k, theta).unwrap()).collect();
                let d = closed_form_distance(m, n, theta);
                let c = certificate_lower_bound(&sm, &sn, &cands).unwrap().value;
                let u = analytic_upper_bound(&sm, &sn).unwrap();
                saturation.add((c - d).abs().max((u - d).abs()));
            }
        }
        for n in 0..=20 {
            for p in 0..=n {
                for m in 0..=p {
                    triangle.add(triangular_check(m, p, n, theta).unwrap().abs());
                }
            }
        }
    }
    let cands: Vec<MoyalElement> = (0..8).map(|k| ahat(k, 1.0).unwrap()).collect();
    for _ in 0..cfg.instances {
        let theta = 1.0;
        let (s1, s2) = (random_finite_state(rng, theta, 5), random_finite_state(rng, theta, 5));
        let c = certificate_lower_bound(&s1, &s2, &cands).unwrap().value;
        let u = analytic_upper_bound(&s1, &s2).unwrap();
        bracket.add((c - u).max(0.0));
        let ph = rng.random_range(0.0..2.0 * PI);
        let c2 = certificate_lower_bound(&s1.with_phase(ph), &s2.with_phase(-ph), &cands).unwrap().value;
        let u2 = analytic_upper_bound(&s1.with_phase(ph), &s2).unwrap();
        phase.add((c - c2).abs().max((u - u2).abs()));

        let a = random_element(rng, theta, 6);
        let a = a.scale(1.0 / commutator_norm(&a));
        let delta = eval(&s1, &a).unwrap() - eval(&s2, &a).unwrap();
        let rotated = a.scale_complex(Complex64::from_polar(1.0, -delta.arg())).hermitian_part();
        let feasible = commutator_norm(&rotated) <= 1.0 + 1e-12;
        let v = (eval(&s1, &rotated).unwrap() - eval(&s2, &rotated).unwrap()).norm();
        symmetrize.add(if feasible { (delta.norm() - v).max(0.0) } else { f64::INFINITY });
    }
    let (s1, s2) = (basis_state(0, 1.0).unwrap(), basis_state(1, 1.0).unwrap());
    let out = optimize_distance(&s1, &s2, 6, &OptimizerParams::default(), None).unwrap();
    let d = closed_form_distance(0, 1, 1.0);
    optimizer.add((out.value - d).max(0.0).max(out.feasibility_residual.max(0.0) - 1e-10));
    vec![saturation.finish(), triangle.finish(), bracket.finish(), phase.finish(), symmetrize.finish(), optimizer.finish()]
}

fn probes(rng: &mut ChaCha8Rng, cfg: &VerifyConfig) -> Vec<Check> {
    let mut consistency = Tally::new("bound B matches ahat read-off", 1e-10);
    let mut estimates = Tally::new("appendix estimates", 0.0);
    let mut crossover = Tally::new("crossover sign change", 0.0);
    let mut exclusion = Tally::new("no divergence claim for (5/4, 3/2)", 0.0);
    for _ in 0..cfg.instances.min(20) {
        let theta = pick_theta(rng);
        let s1 = random_finite_state(rng, theta, 39);
        let s2 = zeta_state(rng.random_range(1.05..1.5), rng.random_range(10..3000), theta).unwrap();
        for m0 in [0usize, 1, 7, 63, 200] {
            let a = ahat(m0, theta).unwrap();
            let direct = (eval(&s2, &a).unwrap() - eval(&s1, &a).unwrap()).norm();
            consistency.add((bound_b(m0 as u64, &s1, &s2).unwrap() - direct).abs());
        }
    }
    let report = estimate_checks(&EstimateGrid::default());
    estimates.instances = report.checks;
    estimates.worst = report.violations.len() as f64;
    for (s1, s2) in [(1.1, 1.4), (1.2, 1.3), (1.3, 1.5), (1.05, 1.5), (1.45, 1.5)] {
        let m = crossover_index(s1, s2).unwrap();
        crossover.flag(g_seq(m, s1, s2).unwrap() <= 0.0 && g_seq(m + 1, s1, s2).unwrap() > 0.0);
    }
    let z = |s| StateSpec::Zeta { s, cutoff: None };
    exclusion.flag(!pair_theory(&z(1.25), &z(1.5)).1 && !pair_theory(&z(1.5), &z(1.25)).1);
    vec![consistency.finish(), estimates.finish(), crossover.finish(), exclusion.finish()]
}

fn torus(rng: &mut ChaCha8Rng, cfg: &VerifyConfig) -> Vec<Check> {
    let mut bichar = Tally::new("bicharacter identities", 1e-12);
    let mut assoc = Tally::new("Weyl product associativity", 1e-12);
    let mut gns = Tally::new("GNS orthonormality", 1e-12);
    let mut trace = Tally::new("derivations annihilate the trace", 0.0);
    let mut ball = Tally::new("unit ball bounds |alpha_N| by 1", 1e-9);
    let mut cert = Tally::new("certificate norm equals 1", 1e-9);
    let mut saturation = Tally::new("certificate meets 1/(2pi|M|)", 1e-12);
    let one = Complex64::new(1.0, 0.0);
    for _ in 0..cfg.instances.max(1000) {
        let theta = rng.random_range(0.0..1.0);
        let (m, n, p) = (random_index(rng, 50), random_index(rng, 50), random_index(rng, 50));
        let add = |x: Index, y: Index| (x.0 + y.0, x.1 + y.1);
        let d1 = (sigma(add(m, n), p, theta) - sigma(m, p, theta) * sigma(n, p, theta)).norm();
        let d2 = (sigma(m, add(n, p), theta) - sigma(m, n, theta) * sigma(m, p, theta)).norm();
        let d3 = (sigma(m, m, theta) - one).norm().max((sigma(m, (-m.0, -m.1), theta) - one).norm());
        bichar.add(d1.max(d2).max(d3));
    }
    for _ in 0..cfg.instances {
        let theta = rng.random_range(0.0..1.0);
        let (a, b, c) = (
            random_torus_element(rng, theta, 3, 5),
            random_torus_element(rng, theta, 3, 5),
            random_torus_element(rng, theta, 3, 5),
        );
        let lhs = weyl_product(&weyl_product(&a, &b).unwrap(), &c).unwrap();
        let rhs = weyl_product(&a, &weyl_product(&b, &c).unwrap()).unwrap();
        assoc.add(lhs.max_abs_diff(&rhs));
        let (m, n) = (random_index(rng, 4), random_index(rng, 4));
        let um = TorusElement::monomial(theta, m, one).unwrap();
        let un = TorusElement::monomial(theta, n, one).unwrap();
        let ip = tau(&weyl_product(&torus_involution(&um), &un).unwrap());
        gns.add((ip - if m == n { one } else { Complex64::new(0.0, 0.0) }).norm());
        trace.add(tau(&torus_del(&a)).norm().max(tau(&torus_delbar(&a)).norm()));

        let radius = a.support_radius() + 1;
        let norm = torus_op_norm(&torus_del(&a), radius).unwrap().max(torus_op_norm(&torus_delbar(&a), radius).unwrap());
        if norm > 0.0 {
            let scaled = a.scale(Complex64::new(1.0 / norm, 0.0));
            let worst = torus_del(&scaled).terms().chain(torus_delbar(&scaled).terms()).fold(0.0_f64, |w, (_, c)| w.max(c.norm()));
            ball.add((worst - 1.0).max(0.0));
        }
    }
    let theta = 0.37;
    for m1 in -3i64..=3 {
        for m2 in -3i64..=3 {
            if (m1, m2) == (0, 0) {
                continue;
            }
            let a = torus_certificate((m1, m2), theta).unwrap();
            cert.add((converged_commutator_norm(&a).norm - 1.0).abs());
            let gap = (phi_state_eval((m1, m2), &a).unwrap() - tau(&a)).norm();
            saturation.add((gap - 1.0 / (2.0 * PI * (m1 as f64).hypot(m2 as f64))).abs());
            let r = torus_distance(TorusState::phi((m1, m2)).unwrap(), TorusState::Tracial, theta).unwrap();
            saturation.add((r.certificate_lower - r.analytic_upper.unwrap()).abs());
        }
    }
    vec![bichar.finish(), assoc.finish(), gns.finish(), trace.finish(), ball.finish(), cert.finish(), saturation.finish()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_roundtrip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn quick_suites_pass() {
        let cfg = VerifyConfig { instances: 20, max_order: 8, seed: 1 };
        for s in [Suite::Algebra, Suite::Calculus, Suite::Lipschitz, Suite::States] {
            let out = run_suite(s, &cfg);
            assert!(out.passed, "{out:?}");
        }
    }

    #[test]
    fn tally_treats_nan_as_failure() {
        let mut t = Tally::new("x", 1.0);
        t.add(f64::NAN);
        assert!(!t.finish().passed);
    }
}
