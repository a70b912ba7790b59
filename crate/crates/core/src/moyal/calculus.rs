use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::algebra::{join_rows, split_rows, MoyalElement};
use crate::error::{check_theta, positive_theta, Error, Result};

/// Which derivation produced a coefficient array.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Derivation {
    Del,
    Delbar,
}

/// Matrix-base coefficients of `∂a` (the `α_{mn}`) or `∂̄a` (the `β_{mn}`).
///
/// Kept distinct from [`MoyalElement`] so the `1/√2` in `∂ = (∂₁ − i∂₂)/√2`
/// is never applied twice; use [`DerivativeCoefficients::to_element`] to
/// multiply with it explicitly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DerivativeRepr", into = "DerivativeRepr")]
pub struct DerivativeCoefficients {
    kind: Derivation,
    theta: f64,
    coeffs: DMatrix<Complex64>,
}

impl DerivativeCoefficients {
    pub fn new(kind: Derivation, theta: f64, coeffs: DMatrix<Complex64>) -> Result<Self> {
        positive_theta(theta)?;
        if !coeffs.is_square() {
            return Err(Error::InvalidParameter("derivative coefficients must be square".into()));
        }
        Ok(Self { kind, theta, coeffs })
    }

    pub fn kind(&self) -> Derivation {
        self.kind
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn order(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn coeffs(&self) -> &DMatrix<Complex64> {
        &self.coeffs
    }

    pub fn coeff(&self, m: usize, n: usize) -> Complex64 {
        if m < self.order() && n < self.order() {
            self.coeffs[(m, n)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Signed-index lookup; negative indices read as zero.
    fn at(&self, m: isize, n: isize) -> Complex64 {
        if m < 0 || n < 0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeff(m as usize, n as usize)
        }
    }

    /// Reinterprets the coefficients as the algebra element `∂a` (or `∂̄a`).
    pub fn to_element(&self) -> MoyalElement {
        MoyalElement::from_parts(self.theta, self.coeffs.clone())
    }

    /// Entrywise conjugate transpose, i.e. the coefficients of `(∂a)*`.
    pub fn adjoint(&self) -> DMatrix<Complex64> {
        self.coeffs.adjoint()
    }
}

/// `α_{p,q} = √((q+1)/θ) a_{p,q+1} − √(p/θ) a_{p−1,q}`; output order is input order + 1.
pub(crate) fn del_matrix<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, theta: f64) -> DMatrix<T> {
    let n = a.nrows();
    let mut out = DMatrix::<T>::zeros(n + 1, n + 1);
    for q in 0..=n {
        let up = ((q + 1) as f64 / theta).sqrt();
        for p in 0..=n {
            let mut v = T::zero();
            if p < n && q + 1 < n {
                v += a[(p, q + 1)].clone().scale(up);
            }
            if p >= 1 && q < n {
                v -= a[(p - 1, q)].clone().scale((p as f64 / theta).sqrt());
            }
            out[(p, q)] = v;
        }
    }
    out
}

/// Frobenius adjoint of [`del_matrix`]: `(∂ᵀβ)_{mn} = √(n/θ) β_{m,n−1} − √((m+1)/θ) β_{m+1,n}`.
pub(crate) fn del_adjoint_matrix<T: ComplexField<RealField = f64>>(
    b: &DMatrix<T>,
    theta: f64,
) -> DMatrix<T> {
    let n = b.nrows() - 1;
    let mut out = DMatrix::<T>::zeros(n, n);
    for col in 0..n {
        for m in 0..n {
            let mut v = T::zero();
            if col >= 1 {
                v += b[(m, col - 1)].clone().scale((col as f64 / theta).sqrt());
            }
            v -= b[(m + 1, col)].clone().scale(((m + 1) as f64 / theta).sqrt());
            out[(m, col)] = v;
        }
    }
    out
}

/// Coefficients `α_{mn}` of `∂a`.
pub fn del(a: &MoyalElement) -> DerivativeCoefficients {
    DerivativeCoefficients {
        kind: Derivation::Del,
        theta: a.theta(),
        coeffs: del_matrix(a.coeffs(), a.theta()),
    }
}

/// Coefficients `β_{mn}` of `∂̄a`: `β_{p,q} = √((p+1)/θ) a_{p+1,q} − √(q/θ) a_{p,q−1}`.
pub fn delbar(a: &MoyalElement) -> DerivativeCoefficients {
    let n = a.order();
    let theta = a.theta();
    let c = a.coeffs();
    let mut out = DMatrix::zeros(n + 1, n + 1);
    for q in 0..=n {
        for p in 0..=n {
            let mut v = Complex64::new(0.0, 0.0);
            if p + 1 < n && q < n {
                v += c[(p + 1, q)] * ((p + 1) as f64 / theta).sqrt();
            }
            if q >= 1 && p < n {
                v -= c[(p, q - 1)] * (q as f64 / theta).sqrt();
            }
            out[(p, q)] = v;
        }
    }
    DerivativeCoefficients { kind: Derivation::Delbar, theta, coeffs: out }
}

/// Rebuilds `a` from `a_{00}` and its two derivatives:
/// `a_{pq} = δ_{pq} a_{00} + √θ Σ_{k=0}^{min(p,q)} (α_{p−k,q−k−1} + β_{p−k−1,q−k}) / (√(p−k) + √(q−k))`.
pub fn reconstruct(
    a00: Complex64,
    alpha: &DerivativeCoefficients,
    beta: &DerivativeCoefficients,
) -> Result<MoyalElement> {
    check_theta(alpha.theta, beta.theta)?;
    if alpha.order() != beta.order() {
        return Err(Error::OrderMismatch { left: alpha.order(), right: beta.order() });
    }
    if alpha.kind != Derivation::Del || beta.kind != Derivation::Delbar {
        return Err(Error::InvalidParameter("expected (del, delbar) coefficients".into()));
    }
    let theta = alpha.theta;
    let n = alpha.order().saturating_sub(1).max(1);
    let sqrt_theta = theta.sqrt();
    let roots: Vec<f64> = (0..=n).map(|k| (k as f64).sqrt()).collect();
    let mut out = DMatrix::zeros(n, n);
    for q in 0..n {
        for p in 0..n {
            let mut v = if p == q { a00 } else { Complex64::new(0.0, 0.0) };
            if p + q > 0 {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..=p.min(q) {
                    let denom = roots[p - k] + roots[q - k];
                    if denom == 0.0 {
                        continue;
                    }
                    let (pk, qk) = ((p - k) as isize, (q - k) as isize);
                    acc += (alpha.at(pk, qk - 1) + beta.at(pk - 1, qk)) / denom;
                }
                v += acc * sqrt_theta;
            }
            out[(p, q)] = v;
        }
    }
    MoyalElement::new(theta, out)
}

/// The radial certificate `â(m₀)`, `â_{pp} = √(θ/2) Σ_{k=p}^{m₀} 1/√(k+1)`.
pub fn ahat(m0: usize, theta: f64) -> Result<MoyalElement> {
    positive_theta(theta)?;
    let scale = (theta / 2.0).sqrt();
    let mut diag = vec![0.0; m0 + 1];
    let mut acc = 0.0;
    for p in (0..=m0).rev() {
        acc += 1.0 / ((p + 1) as f64).sqrt();
        diag[p] = scale * acc;
    }
    MoyalElement::radial(theta, &diag)
}

/// Single-step element `a(n) = √(θ/2) (n+1)^{-1/2} f_{nn}`.
pub fn a_step(n: usize, theta: f64) -> Result<MoyalElement> {
    positive_theta(theta)?;
    let mut diag = vec![0.0; n + 1];
    diag[n] = (theta / 2.0).sqrt() / ((n + 1) as f64).sqrt();
    MoyalElement::radial(theta, &diag)
}

#[derive(Serialize, Deserialize)]
struct DerivativeRepr {
    kind: Derivation,
    theta: f64,
    order: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl From<DerivativeCoefficients> for DerivativeRepr {
    fn from(d: DerivativeCoefficients) -> Self {
        let (re, im) = split_rows(&d.coeffs);
        DerivativeRepr { kind: d.kind, theta: d.theta, order: d.order(), re, im }
    }
}

impl TryFrom<DerivativeRepr> for DerivativeCoefficients {
    type Error = Error;

    fn try_from(r: DerivativeRepr) -> Result<Self> {
        let coeffs = join_rows(r.order, &r.re, &r.im)?;
        DerivativeCoefficients::new(r.kind, r.theta, coeffs)
    }
}
