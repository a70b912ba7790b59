//! Largest singular values.
//!
//! Dense decomposition below [`DENSE_LIMIT`], Lanczos on the Gram operator
//! above it. The Lanczos path is matrix-free so the torus module can drive
//! it with a twisted convolution.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DENSE_LIMIT: usize = 64;
/// Relative change of the top Ritz value treated as converged.
pub const RITZ_TOL: f64 = 1e-15;
/// Ritz residual, relative to the Ritz value, treated as converged.
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const KRYLOV_DIM: usize = 240;
pub const MAX_RESTARTS: usize = 40;
const CHECK_EVERY: usize = 8;
const BREAKDOWN: f64 = 1e-13;

const START_SEED: u64 = 0x5eed_0f_5eed;

/// Largest singular value of a dense matrix; zero for empty input.
pub fn spectral_norm<T: Field>(m: &DMatrix<T>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.nrows().max(m.ncols()) <= DENSE_LIMIT {
        m.clone().singular_values().max()
    } else {
        let apply = |x: &[T]| -> Vec<T> {
            let v = nalgebra::DVectorView::from_slice(x, m.ncols());
            (m * v).as_slice().to_vec()
        };
        let apply_adj = |y: &[T]| -> Vec<T> {
            let v = nalgebra::DVectorView::from_slice(y, m.nrows());
            (m.ad_mul(&v)).as_slice().to_vec()
        };
        gram_lanczos_norm(apply, apply_adj, m.ncols(), None).norm
    }
}

#[derive(Clone, Debug)]
pub struct NormEstimate<T> {
    /// Lower estimate of the largest singular value.
    pub norm: f64,
    /// Approximate top right singular vector (unit length).
    pub vector: Vec<T>,
    /// Applications of the Gram operator.
    pub iterations: usize,
    pub converged: bool,
}

fn norm2<T: ComplexField<RealField = f64>>(x: &[T]) -> f64 {
    x.iter().map(|z| z.clone().modulus_squared()).sum::<f64>().sqrt()
}

fn dot<T: Field>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (a, b)| acc + a.conjugate() * *b)
}

/// Deterministic pseudo-random start vector.
pub(crate) fn start_vector<T: Field>(dim: usize) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut v: Vec<T> = (0..dim)
        .map(|_| {
            let re: f64 = rng.random_range(-1.0..1.0);
            let im: f64 = rng.random_range(-1.0..1.0);
            T::from_re_im(re, im)
        })
        .collect();
    let n = norm2(&v);
    v.iter_mut().for_each(|z| *z = z.clone().unscale(n));
    v
}

/// Scalar fields the solvers run over: `f64` for real-symmetric problems, `Complex64` otherwise.
pub trait Field: ComplexField<RealField = f64> + Copy {
    fn from_re_im(re: f64, im: f64) -> Self;
}

impl Field for f64 {
    fn from_re_im(re: f64, _im: f64) -> Self {
        re
    }
}

impl Field for Complex64 {
    fn from_re_im(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
}

/// Largest singular value of `A` from Lanczos on `A*A`, given the actions of `A` and `A*`.
///
/// Full reorthogonalization; restarts from the current Ritz vector every
/// [`KRYLOV_DIM`] steps. Ritz values increase towards the top eigenvalue,
/// so the estimate is a lower bound.
pub fn gram_lanczos_norm<T, F, G>(apply: F, apply_adj: G, dim: usize, start: Option<Vec<T>>) -> NormEstimate<T>
where
    T: Field,
    F: Fn(&[T]) -> Vec<T>,
    G: Fn(&[T]) -> Vec<T>,
{
    if dim == 0 {
        return NormEstimate { norm: 0.0, vector: Vec::new(), iterations: 0, converged: true };
    }
    let gram = |x: &[T]| apply_adj(&apply(x));
    let mut q0 = match start {
        Some(v) if v.len() == dim && norm2(&v) > 0.0 => {
            let n = norm2(&v);
            v.into_iter().map(|z| z.unscale(n)).collect()
        }
        _ => start_vector::<T>(dim),
    };
    let krylov = KRYLOV_DIM.min(dim);
    let mut iterations = 0;
    let mut best = 0.0_f64;
    for _ in 0..MAX_RESTARTS {
        let mut basis: Vec<Vec<T>> = vec![q0.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut previous = f64::NAN;
        let mut finished = false;
        let mut ritz = (0.0, vec![1.0]);
        for j in 0..krylov {
            iterations += 1;
            let mut w = gram(&basis[j]);
            let a = dot(&basis[j], &w).real();
            alpha.push(a);
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= *qi * c);
                }
            }
            let b = norm2(&w);
            let check = (j + 1) % CHECK_EVERY == 0 || j + 1 == krylov || b <= BREAKDOWN * a.abs().max(best);
            if check {
                ritz = top_ritz(&alpha, &beta);
                let residual = b * ritz.1.last().copied().unwrap_or(0.0).abs();
                let stalled = (ritz.0 - previous).abs() <= RITZ_TOL * ritz.0;
                if residual <= RESIDUAL_TOL * ritz.0.max(f64::MIN_POSITIVE) || stalled || b <= BREAKDOWN * ritz.0 {
                    finished = true;
                }
                previous = ritz.0;
                if finished {
                    break;
                }
            }
            if b == 0.0 {
                finished = true;
                ritz = top_ritz(&alpha, &beta);
                break;
            }
            beta.push(b);
            basis.push(w.into_iter().map(|z| z.unscale(b)).collect());
        }
        let mut v = vec![T::zero(); dim];
        for (q, &y) in basis.iter().zip(&ritz.1) {
            v.iter_mut().zip(q).for_each(|(vi, qi)| *vi += qi.scale(y));
        }
        let n = norm2(&v);
        if n > 0.0 {
            v.iter_mut().for_each(|z| *z = z.unscale(n));
            q0 = v;
        }
        best = best.max(ritz.0);
        if finished {
            return NormEstimate { norm: best.max(0.0).sqrt(), vector: q0, iterations, converged: true };
        }
    }
    NormEstimate { norm: best.max(0.0).sqrt(), vector: q0, iterations, converged: false }
}

/// Largest eigenpair of the tridiagonal matrix with diagonal `alpha` and off-diagonal `beta`.
fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j || j + 1 == i {
            beta[i.min(j)]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigen();
    let (idx, &val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    (val, eig.eigenvectors.column(idx).iter().copied().collect())
}

pub(crate) fn complex_spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    spectral_norm(m)
}
