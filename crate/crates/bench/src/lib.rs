//! Deterministic inputs shared by the benchmarks under `benches/`.

use ncdist_core::{Complex64, MoyalElement, TorusElement};

/// Dense element with smoothly varying entries of modulus at most `1/order`.
pub fn dense_element(theta: f64, order: usize) -> MoyalElement {
    let scale = 1.0 / order as f64;
    MoyalElement::from_fn(theta, order, |m, n| {
        let phase = (3 * m + 7 * n) as f64 * 0.1;
        Complex64::from_polar(scale, phase) * (1.0 + m as f64).recip().sqrt()
    })
    .expect("positive theta")
}

/// Element supported on the square of radius `radius` in the Weyl basis.
pub fn torus_element(theta: f64, radius: i64) -> TorusElement {
    let terms = (-radius..=radius)
        .flat_map(|a| (-radius..=radius).map(move |b| (a, b)))
        .map(|(a, b)| ((a, b), Complex64::from_polar(1.0 / (1 + a.abs() + b.abs()) as f64, (a - 2 * b) as f64)));
    TorusElement::new(theta, terms).expect("finite theta")
}
