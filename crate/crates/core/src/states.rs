//! Vector states `ω_ψ` of the Moyal algebra, `ψ = Σ ψ_m f_{m0}`.
//!
//! Coefficients are stored normalized, `c_m = √(2πθ) ψ_m`, so that
//! `Σ |c_m|² = 1` and `ω(a) = Σ_{m,n} conj(c_m) c_n a_{mn}`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_theta, positive_theta, Error, Result};
use crate::moyal::MoyalElement;
use crate::zeta;

/// How a state was built; carried into reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Construction {
    Basis { m: usize },
    /// `|c_m|² = 1 / (Z (m+1)^s)` for `m < cutoff`, with `Z` the partial sum.
    Zeta { s: f64, cutoff: u64, zeta: f64, partial_sum: f64 },
    /// Raw weights were multiplied by `normalization` to reach unit norm.
    Finite { normalization: f64 },
}

#[derive(Clone, Debug, PartialEq)]
enum Coefficients {
    Dense(Vec<Complex64>),
    Zeta { s: f64, cutoff: u64, partial_sum: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub struct MoyalPureState {
    theta: f64,
    construction: Construction,
    coeffs: Coefficients,
}

impl MoyalPureState {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn construction(&self) -> &Construction {
        &self.construction
    }

    /// Number of stored coefficients (the cutoff for ζ-states).
    pub fn support_len(&self) -> usize {
        match &self.coeffs {
            Coefficients::Dense(v) => v.len(),
            Coefficients::Zeta { cutoff, .. } => *cutoff as usize,
        }
    }

    /// False for ζ-states, which stand in for infinitely supported vectors.
    pub fn has_finite_support(&self) -> bool {
        matches!(self.coeffs, Coefficients::Dense(_))
    }

    pub fn coeff(&self, m: usize) -> Complex64 {
        match &self.coeffs {
            Coefficients::Dense(v) => v.get(m).copied().unwrap_or_default(),
            Coefficients::Zeta { .. } => Complex64::new(self.weight(m).sqrt(), 0.0),
        }
    }

    /// `|c_m|²`.
    pub fn weight(&self, m: usize) -> f64 {
        match &self.coeffs {
            Coefficients::Dense(v) => v.get(m).map_or(0.0, |z| z.norm_sqr()),
            Coefficients::Zeta { s, cutoff, partial_sum } => {
                if (m as u64) < *cutoff {
                    ((m + 1) as f64).powf(-s) / partial_sum
                } else {
                    0.0
                }
            }
        }
    }

    /// The first `min(limit, support)` coefficients.
    pub fn leading_coeffs(&self, limit: usize) -> Vec<Complex64> {
        (0..limit.min(self.support_len())).map(|m| self.coeff(m)).collect()
    }

    pub fn total_weight(&self) -> f64 {
        (0..self.support_len()).rev().map(|m| self.weight(m)).sum()
    }

    /// Same state with every coefficient multiplied by a unit phase.
    pub fn with_phase(&self, phase: f64) -> Self {
        let u = Complex64::from_polar(1.0, phase);
        let coeffs = Coefficients::Dense((0..self.support_len()).map(|m| self.coeff(m) * u).collect());
        Self { theta: self.theta, construction: self.construction.clone(), coeffs }
    }

    pub fn label(&self) -> String {
        match &self.construction {
            Construction::Basis { m } => format!("basis:{m}"),
            Construction::Zeta { s, cutoff, .. } => format!("zeta:{s}:{cutoff}"),
            Construction::Finite { .. } => {
                let w: Vec<String> = self.leading_coeffs(usize::MAX).iter().map(format_complex).collect();
                format!("finite:{}", w.join(","))
            }
        }
    }
}

fn format_complex(z: &Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im < 0.0 {
        format!("{}{}i", z.re, z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

/// `ω(a) = Σ conj(c_m) c_n a_{mn}`.
pub fn eval(state: &MoyalPureState, a: &MoyalElement) -> Result<Complex64> {
    check_theta(state.theta, a.theta())?;
    let n = a.order().min(state.support_len());
    let c = state.leading_coeffs(n);
    let coeffs = a.coeffs();
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, cj) in c.iter().enumerate() {
        let mut col = Complex64::new(0.0, 0.0);
        for (i, ci) in c.iter().enumerate() {
            col += ci.conj() * coeffs[(i, j)];
        }
        acc += col * cj;
    }
    Ok(acc)
}

/// `ω_m(a) = a_{mm}`.
pub fn basis_state(m: usize, theta: f64) -> Result<MoyalPureState> {
    positive_theta(theta)?;
    let mut v = vec![Complex64::new(0.0, 0.0); m + 1];
    v[m] = Complex64::new(1.0, 0.0);
    Ok(MoyalPureState { theta, construction: Construction::Basis { m }, coeffs: Coefficients::Dense(v) })
}

/// ζ-state truncated to `cutoff` coefficients and renormalized by the partial sum.
pub fn zeta_state(s: f64, cutoff: u64, theta: f64) -> Result<MoyalPureState> {
    positive_theta(theta)?;
    if !(s.is_finite() && s > 1.0) {
        return Err(Error::InvalidParameter(format!("zeta states need s > 1, got {s}")));
    }
    if cutoff < 1 {
        return Err(Error::InvalidParameter("zeta cutoff must be at least 1".into()));
    }
    let partial_sum = zeta::partial_sum(s, cutoff);
    Ok(MoyalPureState {
        theta,
        construction: Construction::Zeta { s, cutoff, zeta: zeta::zeta(s), partial_sum },
        coeffs: Coefficients::Zeta { s, cutoff, partial_sum },
    })
}

/// State of a finite combination `Σ λ_m f_{m0}`; weights are normalized.
pub fn finite_state(weights: &[Complex64], theta: f64) -> Result<MoyalPureState> {
    positive_theta(theta)?;
    let norm = weights.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::InvalidParameter("finite state needs a nonzero weight".into()));
    }
    let factor = 1.0 / norm;
    Ok(MoyalPureState {
        theta,
        construction: Construction::Finite { normalization: factor },
        coeffs: Coefficients::Dense(weights.iter().map(|z| z * factor).collect()),
    })
}

/// `|c_m(s1)|² − |c_m(s2)|²` over the combined support.
pub fn diagonal_difference(s1: &MoyalPureState, s2: &MoyalPureState) -> Result<Vec<f64>> {
    check_theta(s1.theta, s2.theta)?;
    let n = s1.support_len().max(s2.support_len());
    Ok((0..n).map(|m| s1.weight(m) - s2.weight(m)).collect())
}

/// Command-line state description: `basis:m`, `zeta:s:cutoff`, `finite:w0,w1,...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StateSpec {
    Basis { m: usize },
    Zeta { s: f64, cutoff: Option<u64> },
    Finite { weights: Vec<(f64, f64)> },
}

impl StateSpec {
    pub fn build(&self, theta: f64) -> Result<MoyalPureState> {
        match self {
            StateSpec::Basis { m } => basis_state(*m, theta),
            StateSpec::Zeta { s, cutoff } => zeta_state(*s, cutoff.unwrap_or(100_000), theta),
            StateSpec::Finite { weights } => {
                let w: Vec<Complex64> = weights.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
                finite_state(&w, theta)
            }
        }
    }

    /// The same spec with an explicit ζ cutoff.
    pub fn build_with_cutoff(&self, theta: f64, cutoff: u64) -> Result<MoyalPureState> {
        match self {
            StateSpec::Zeta { s, .. } => zeta_state(*s, cutoff, theta),
            other => other.build(theta),
        }
    }
}

fn parse_weight(text: &str) -> Result<(f64, f64)> {
    let t = text.trim();
    let bad = || Error::Parse(format!("bad weight `{text}`"));
    if let Some(body) = t.strip_suffix('i') {
        // split at the last sign that is not an exponent sign or the leading one
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        return match split {
            Some(k) => {
                let re = body[..k].parse::<f64>().map_err(|_| bad())?;
                let im_text = &body[k..];
                let im = if im_text == "+" || im_text == "-" {
                    if im_text == "+" { 1.0 } else { -1.0 }
                } else {
                    im_text.parse::<f64>().map_err(|_| bad())?
                };
                Ok((re, im))
            }
            None => {
                let im = match body {
                    "" | "+" => 1.0,
                    "-" => -1.0,
                    b => b.parse::<f64>().map_err(|_| bad())?,
                };
                Ok((0.0, im))
            }
        };
    }
    Ok((t.parse::<f64>().map_err(|_| bad())?, 0.0))
}

impl FromStr for StateSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut parts = text.splitn(2, ':');
        let kind = parts.next().unwrap_or_default();
        let rest = parts.next().ok_or_else(|| Error::Parse(format!("state spec `{text}` has no parameters")))?;
        let bad = |what: &str| Error::Parse(format!("state spec `{text}`: {what}"));
        match kind {
            "basis" => Ok(StateSpec::Basis { m: rest.parse().map_err(|_| bad("expected basis:m"))? }),
            "zeta" => {
                let mut it = rest.split(':');
                let s = it.next().and_then(|x| x.parse().ok()).ok_or_else(|| bad("expected zeta:s[:cutoff]"))?;
                let cutoff = match it.next() {
                    Some(c) => Some(c.parse::<f64>().map_err(|_| bad("bad cutoff"))? as u64),
                    None => None,
                };
                if it.next().is_some() {
                    return Err(bad("too many fields"));
                }
                Ok(StateSpec::Zeta { s, cutoff })
            }
            "finite" => {
                let weights = rest.split(',').map(parse_weight).collect::<Result<Vec<_>>>()?;
                Ok(StateSpec::Finite { weights })
            }
            _ => Err(bad("unknown kind (basis, zeta, finite)")),
        }
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Basis { m } => write!(f, "basis:{m}"),
            StateSpec::Zeta { s, cutoff: Some(c) } => write!(f, "zeta:{s}:{c}"),
            StateSpec::Zeta { s, cutoff: None } => write!(f, "zeta:{s}"),
            StateSpec::Finite { weights } => {
                let w: Vec<String> = weights.iter().map(|&(r, i)| format_complex(&Complex64::new(r, i))).collect();
                write!(f, "finite:{}", w.join(","))
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    theta: f64,
    construction: Construction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    re: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    im: Option<Vec<f64>>,
}

impl From<MoyalPureState> for StateRepr {
    fn from(s: MoyalPureState) -> Self {
        let (re, im) = match (&s.construction, &s.coeffs) {
            (Construction::Finite { .. }, Coefficients::Dense(v)) => {
                (Some(v.iter().map(|z| z.re).collect()), Some(v.iter().map(|z| z.im).collect()))
            }
            _ => (None, None),
        };
        StateRepr { theta: s.theta, construction: s.construction, re, im }
    }
}

impl TryFrom<StateRepr> for MoyalPureState {
    type Error = Error;

    fn try_from(r: StateRepr) -> Result<Self> {
        match r.construction {
            Construction::Basis { m } => basis_state(m, r.theta),
            Construction::Zeta { s, cutoff, .. } => zeta_state(s, cutoff, r.theta),
            Construction::Finite { normalization } => {
                let (re, im) = r.re.zip(r.im).ok_or_else(|| Error::Parse("finite state needs re/im".into()))?;
                if re.len() != im.len() {
                    return Err(Error::Parse("re/im lengths differ".into()));
                }
                let w: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
                let mut st = finite_state(&w, r.theta)?;
                st.construction = Construction::Finite { normalization };
                Ok(st)
            }
        }
    }
}
