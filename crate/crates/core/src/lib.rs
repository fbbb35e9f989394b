//! Adversarial weak learners against AdaBoost over a finite universe.
//!
//! The universe is `[u]` with the uniform distribution and the all-ones
//! concept, which makes the generalization error of any voting classifier
//! exactly computable. The crate provides the domain model, an adversarial
//! weak learner built from random hypothesis blocks, AdaBoost and two
//! variants, Monte-Carlo checks of the supporting lemmas, and a seeded
//! experiment harness.

pub mod model;
pub mod rng;
pub mod adversary;
pub mod boosting;
pub mod lemma_lab;
pub mod harness;

/// Ceiling that forgives floating-point noise just above an integer, so a
/// product of rounded inputs landing at `52.00000000000001` still gives 52.
pub(crate) fn ceil_tol(x: f64) -> usize {
    (x - 1e-9 * x.abs().max(1.0)).ceil().max(0.0) as usize
}

/// Neumaier-compensated sum; the mass checks at `1e-12` need better than
/// naive summation once the support has tens of thousands of points.
pub fn compensated_sum<'a>(xs: impl IntoIterator<Item = &'a f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for &x in xs {
        let t = sum + x;
        c += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + c
}
