use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_theta, positive_theta, Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A finitely supported element of the Moyal algebra, `a = Σ a_{mn} f_{mn}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ElementRepr", into = "ElementRepr")]
pub struct MoyalElement {
    theta: f64,
    coeffs: DMatrix<Complex64>,
}

impl MoyalElement {
    /// Wraps a square coefficient matrix.
    pub fn new(theta: f64, coeffs: DMatrix<Complex64>) -> Result<Self> {
        positive_theta(theta)?;
        if !coeffs.is_square() {
            return Err(Error::InvalidParameter(format!(
                "coefficient matrix must be square, got {}x{}",
                coeffs.nrows(),
                coeffs.ncols()
            )));
        }
        Ok(Self { theta, coeffs })
    }

    pub(crate) fn from_parts(theta: f64, coeffs: DMatrix<Complex64>) -> Self {
        debug_assert!(coeffs.is_square());
        Self { theta, coeffs }
    }

    pub fn zeros(theta: f64, order: usize) -> Result<Self> {
        Self::new(theta, DMatrix::zeros(order, order))
    }

    /// The basis function `f_{mn}`, stored at the smallest order that holds it.
    pub fn basis(theta: f64, m: usize, n: usize) -> Result<Self> {
        let mut a = Self::zeros(theta, m.max(n) + 1)?;
        a.coeffs[(m, n)] = Complex64::new(1.0, 0.0);
        Ok(a)
    }

    /// Radial element `Σ d_m f_{mm}` from its diagonal.
    pub fn radial(theta: f64, diagonal: &[f64]) -> Result<Self> {
        let n = diagonal.len();
        let mut a = Self::zeros(theta, n)?;
        for (m, &d) in diagonal.iter().enumerate() {
            a.coeffs[(m, m)] = Complex64::new(d, 0.0);
        }
        Ok(a)
    }

    pub fn from_fn(
        theta: f64,
        order: usize,
        f: impl FnMut(usize, usize) -> Complex64,
    ) -> Result<Self> {
        Self::new(theta, DMatrix::from_fn(order, order, f))
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

    pub fn into_coeffs(self) -> DMatrix<Complex64> {
        self.coeffs
    }

    /// `a_{mn}`, zero outside the stored block.
    pub fn coeff(&self, m: usize, n: usize) -> Complex64 {
        if m < self.order() && n < self.order() {
            self.coeffs[(m, n)]
        } else {
            ZERO
        }
    }

    /// Copy zero-padded (never truncated) to `order`.
    pub fn padded(&self, order: usize) -> Self {
        let order = order.max(self.order());
        let mut coeffs = DMatrix::zeros(order, order);
        coeffs
            .view_mut((0, 0), (self.order(), self.order()))
            .copy_from(&self.coeffs);
        Self { theta: self.theta, coeffs }
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.order();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    worst = worst.max(self.coeffs[(i, j)].norm());
                }
            }
        }
        worst
    }

    /// Diagonal in the matrix base.
    pub fn is_radial(&self) -> bool {
        self.max_off_diagonal() == 0.0
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        let n = self.order();
        (0..n).all(|i| (0..n).all(|j| (self.coeffs[(i, j)] - self.coeffs[(j, i)].conj()).norm() <= tol))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { theta: self.theta, coeffs: &self.coeffs * Complex64::new(factor, 0.0) }
    }

    pub fn scale_complex(&self, factor: Complex64) -> Self {
        Self { theta: self.theta, coeffs: &self.coeffs * factor }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        check_theta(self.theta, other.theta)?;
        let order = self.order().max(other.order());
        let (a, b) = (self.padded(order), other.padded(order));
        Ok(Self { theta: self.theta, coeffs: a.coeffs + b.coeffs })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.scale(-1.0))
    }

    /// Largest entrywise modulus of `self - other` after padding both to a common order.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let order = self.order().max(other.order());
        let (a, b) = (self.padded(order), other.padded(order));
        (a.coeffs - b.coeffs).iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// The self-adjoint part `(a + a*)/2`.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.coeffs.adjoint();
        Self { theta: self.theta, coeffs: (&self.coeffs + adj) * Complex64::new(0.5, 0.0) }
    }
}

/// `(a ⋆ b)_{mn} = Σ_p a_{mp} b_{pn}`.
pub fn star(a: &MoyalElement, b: &MoyalElement) -> Result<MoyalElement> {
    check_theta(a.theta, b.theta)?;
    let order = a.order().max(b.order());
    let (a, b) = (a.padded(order), b.padded(order));
    Ok(MoyalElement { theta: a.theta, coeffs: a.coeffs * b.coeffs })
}

/// `(a*)_{mn} = conj(a_{nm})`.
pub fn involution(a: &MoyalElement) -> MoyalElement {
    MoyalElement { theta: a.theta, coeffs: a.coeffs.adjoint() }
}

/// `∫ a = 2πθ Σ_m a_{mm}`.
pub fn trace_integral(a: &MoyalElement) -> Complex64 {
    a.coeffs.trace() * (2.0 * PI * a.theta)
}

/// `⟨a, b⟩ = 2πθ Σ conj(a_{mn}) b_{mn}`.
pub fn l2_inner(a: &MoyalElement, b: &MoyalElement) -> Result<Complex64> {
    check_theta(a.theta, b.theta)?;
    let n = a.order().min(b.order());
    let mut acc = ZERO;
    for j in 0..n {
        for i in 0..n {
            acc += a.coeffs[(i, j)].conj() * b.coeffs[(i, j)];
        }
    }
    Ok(acc * (2.0 * PI * a.theta))
}

/// `||a||_{s,t}² = Σ θ^{s+t} (m+½)^s (n+½)^t |a_{mn}|²`.
pub fn gst_norm(a: &MoyalElement, s: f64, t: f64) -> f64 {
    let n = a.order();
    let scale = a.theta.powf(s + t);
    let row: Vec<f64> = (0..n).map(|m| (m as f64 + 0.5).powf(s)).collect();
    let col: Vec<f64> = (0..n).map(|m| (m as f64 + 0.5).powf(t)).collect();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            acc += row[i] * col[j] * a.coeffs[(i, j)].norm_sqr();
        }
    }
    (scale * acc).sqrt()
}

/// The Fréchet semi-norm `ρ_k`, equal to `||a||_{k,k}`.
pub fn seminorm_rho(a: &MoyalElement, k: u32) -> f64 {
    gst_norm(a, k as f64, k as f64)
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    theta: f64,
    order: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl From<MoyalElement> for ElementRepr {
    fn from(a: MoyalElement) -> Self {
        let (re, im) = split_rows(&a.coeffs);
        ElementRepr { theta: a.theta, order: a.order(), re, im }
    }
}

impl TryFrom<ElementRepr> for MoyalElement {
    type Error = Error;

    fn try_from(r: ElementRepr) -> Result<Self> {
        let coeffs = join_rows(r.order, &r.re, &r.im)?;
        MoyalElement::new(r.theta, coeffs)
    }
}

pub(crate) fn split_rows(m: &DMatrix<Complex64>) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
    };
    (rows(|z| z.re), rows(|z| z.im))
}

pub(crate) fn join_rows(order: usize, re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<DMatrix<Complex64>> {
    let bad = |what: &str| Error::Parse(format!("{what} must be {order}x{order}"));
    if re.len() != order || re.iter().any(|r| r.len() != order) {
        return Err(bad("re"));
    }
    if im.len() != order || im.iter().any(|r| r.len() != order) {
        return Err(bad("im"));
    }
    Ok(DMatrix::from_fn(order, order, |i, j| Complex64::new(re[i][j], im[i][j])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn basis_product_follows_index_contraction() {
        let f01 = MoyalElement::basis(1.0, 0, 1).unwrap();
        let f12 = MoyalElement::basis(1.0, 1, 2).unwrap();
        let f02 = MoyalElement::basis(1.0, 0, 2).unwrap();
        assert_eq!(star(&f01, &f12).unwrap().max_abs_diff(&f02), 0.0);
        let sq = star(&f01, &f01).unwrap();
        assert!(sq.coeffs().iter().all(|z| *z == ZERO));
    }

    #[test]
    fn two_by_two_product() {
        let a = MoyalElement::from_fn(1.0, 2, |i, j| c([[1.0, 2.0], [3.0, 4.0]][i][j])).unwrap();
        let b = MoyalElement::from_fn(1.0, 2, |i, j| c([[5.0, 6.0], [7.0, 8.0]][i][j])).unwrap();
        let want = [[19.0, 22.0], [43.0, 50.0]];
        let got = star(&a, &b).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(got.coeff(i, j), c(want[i][j]));
            }
        }
    }

    #[test]
    fn mismatched_theta_is_rejected() {
        let a = MoyalElement::basis(1.0, 0, 0).unwrap();
        let b = MoyalElement::basis(2.0, 0, 0).unwrap();
        assert!(matches!(star(&a, &b), Err(Error::ThetaMismatch { .. })));
        assert!(matches!(l2_inner(&a, &b), Err(Error::ThetaMismatch { .. })));
    }

    #[test]
    fn mixed_orders_pad_instead_of_truncating() {
        let a = MoyalElement::basis(1.0, 0, 3).unwrap();
        let b = MoyalElement::basis(1.0, 3, 0).unwrap();
        let p = star(&a, &b).unwrap();
        assert_eq!(p.order(), 4);
        assert_eq!(p.coeff(0, 0), c(1.0));
        let q = star(&MoyalElement::basis(1.0, 0, 0).unwrap(), &b).unwrap();
        assert_eq!(q.order(), 4);
    }

    #[test]
    fn involution_swaps_indices() {
        let f01 = MoyalElement::basis(1.0, 0, 1).unwrap();
        let f10 = MoyalElement::basis(1.0, 1, 0).unwrap();
        assert_eq!(involution(&f01), f10);
        let d = MoyalElement::radial(1.0, &[1.5, -2.0, 0.25]).unwrap();
        assert_eq!(involution(&d), d);
    }

    #[test]
    fn trace_values() {
        for m in 0..5 {
            let f = MoyalElement::basis(1.0, m, m).unwrap();
            assert!((trace_integral(&f) - c(2.0 * PI)).norm() < 1e-15);
        }
        assert_eq!(trace_integral(&MoyalElement::zeros(1.0, 3).unwrap()), ZERO);
        assert_eq!(trace_integral(&MoyalElement::basis(1.0, 0, 1).unwrap()), ZERO);
    }

    #[test]
    fn inner_product_orthogonality() {
        let f01 = MoyalElement::basis(1.0, 0, 1).unwrap();
        let f10 = MoyalElement::basis(1.0, 1, 0).unwrap();
        assert!((l2_inner(&f01, &f01).unwrap() - c(2.0 * PI)).norm() < 1e-15);
        assert_eq!(l2_inner(&f01, &f10).unwrap(), ZERO);
    }

    #[test]
    fn graded_norms() {
        let f00 = MoyalElement::basis(1.0, 0, 0).unwrap();
        assert_eq!(gst_norm(&f00, 0.0, 0.0), 1.0);
        let f11 = MoyalElement::basis(2.0, 1, 1).unwrap();
        assert!((gst_norm(&f11, 1.0, 1.0) - 3.0).abs() < 1e-15);
        assert_eq!(seminorm_rho(&f00, 0), 1.0);
        assert!((seminorm_rho(&f00, 1) - 0.5).abs() < 1e-15);
        assert_eq!(seminorm_rho(&MoyalElement::zeros(1.0, 4).unwrap(), 3), 0.0);
    }

    #[test]
    fn json_layout() {
        let a = MoyalElement::from_fn(0.5, 2, |i, j| Complex64::new(i as f64, j as f64)).unwrap();
        let v = serde_json::to_value(&a).unwrap();
        assert_eq!(v["theta"], 0.5);
        assert_eq!(v["order"], 2);
        assert_eq!(v["re"], serde_json::json!([[0.0, 0.0], [1.0, 1.0]]));
        assert_eq!(v["im"], serde_json::json!([[0.0, 1.0], [0.0, 1.0]]));
        let back: MoyalElement = serde_json::from_value(v).unwrap();
        assert_eq!(back, a);
        let bad = serde_json::json!({"theta": 1.0, "order": 2, "re": [[1.0]], "im": [[0.0]]});
        assert!(serde_json::from_value::<MoyalElement>(bad).is_err());
    }
}
