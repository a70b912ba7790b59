//! Riemann zeta values and partial sums for `s > 1`.
//!
//! Direct summation of the head plus an Euler–Maclaurin tail.

/// `B_{2k} / (2k)!` for k = 1..=6.
const BERNOULLI_OVER_FACTORIAL: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
];

const HEAD: u64 = 32;
const DIRECT_LIMIT: u64 = 1000;

/// `Σ_{j ≥ n} j^{-s}` for `n ≥ 1`.
pub fn tail_from(s: f64, n: u64) -> f64 {
    assert!(s > 1.0 && n >= 1);
    let n = n as f64;
    let mut acc = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // rising factorial (s)_{2k-1} times n^{-s-2k+1}
    let mut rising = s;
    let mut power = n.powf(-s - 1.0);
    for (k, b) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        acc += b * rising * power;
        let r = 2.0 * k as f64 + 1.0;
        rising *= (s + r) * (s + r + 1.0);
        power /= n * n;
    }
    acc
}

fn direct(s: f64, n: u64) -> f64 {
    // smallest terms first
    (1..=n).rev().map(|j| (j as f64).powf(-s)).sum()
}

/// `ζ(s)`.
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta requires s > 1");
    direct(s, HEAD - 1) + tail_from(s, HEAD)
}

/// `Σ_{j=1}^{n} j^{-s}`.
pub fn partial_sum(s: f64, n: u64) -> f64 {
    assert!(s > 1.0, "partial sums require s > 1");
    if n <= DIRECT_LIMIT {
        direct(s, n)
    } else {
        direct(s, HEAD - 1) + tail_from(s, HEAD) - tail_from(s, n + 1)
    }
}
