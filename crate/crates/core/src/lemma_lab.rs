//! Monte-Carlo checks of the probabilistic lemmas behind the construction.
//!
//! Every check splits its trials into fixed chunks, each with its own seeded
//! stream, and merges the chunks by adding counts. Reports are therefore
//! bit-identical for a given seed whatever the thread count.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::CalibrationConstants;
use crate::ceil_tol;
use crate::rng::{self, label};

/// Trials per independently seeded chunk.
const CHUNK: u64 = 2048;

/// Slack on the event thresholds so that a sum landing exactly on the
/// threshold in exact arithmetic still counts after rounding.
const TIE_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LemmaError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// The claim is a lower bound on the probability.
    Lower,
    /// The claim is an upper bound on the probability.
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub trials: u64,
    pub empirical_probability: f64,
    pub claimed_bound: f64,
    pub direction: Direction,
    pub pass: bool,
    pub std_error: f64,
}

impl MonteCarloReport {
    /// Report for `hits` successes out of `trials`, judged with 3 standard
    /// errors of slack.
    pub fn from_counts(hits: u64, trials: u64, claimed_bound: f64, direction: Direction) -> Self {
        let p = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
        let std_error = if trials == 0 { 0.0 } else { (p * (1.0 - p) / trials as f64).sqrt() };
        let pass = match direction {
            Direction::Lower => p >= claimed_bound - 3.0 * std_error,
            Direction::Upper => p <= claimed_bound + 3.0 * std_error,
        };
        Self { trials, empirical_probability: p, claimed_bound, direction, pass, std_error }
    }
}

/// Number of trials for which `event` holds, over chunked seeded streams.
fn count_hits<F>(seed: u64, lemma: u64, trials: u64, event: F) -> u64
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, &[label::MONTE_CARLO, lemma, c]);
            let n = CHUNK.min(trials - c * CHUNK);
            (0..n).filter(|_| event(&mut rng)).count() as u64
        })
        .sum()
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<(), LemmaError> {
    if ok {
        Ok(())
    } else {
        Err(LemmaError::InvalidParams(msg()))
    }
}

/// `min(1/4, 1/2 - 4 at ap / (2 at - ap)^2)`.
pub fn bias_bound(alpha_tilde: f64, alpha_prime: f64) -> f64 {
    let d = 2.0 * alpha_tilde - alpha_prime;
    0.25f64.min(0.5 - 4.0 * alpha_tilde * alpha_prime / (d * d))
}

/// Biased signs: `P[h(i) = -1] = 1/2 + alpha_tilde beta`, and the event
/// `sum w_i h(i) <= -alpha_prime beta`. The claim is a lower bound.
pub fn check_bias_lemma(
    w: &[f64],
    alpha_tilde: f64,
    alpha_prime: f64,
    beta: f64,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloReport, LemmaError> {
    require(!w.is_empty(), || "w must be non-empty".into())?;
    let l1: f64 = w.iter().map(|x| x.abs()).sum();
    require((l1 - 1.0).abs() <= 1e-9, || format!("w must have ||w||_1 = 1, got {l1}"))?;
    require(alpha_tilde >= 1.0 && alpha_tilde.is_finite(), || format!("alpha_tilde must be >= 1, got {alpha_tilde}"))?;
    require(alpha_prime < alpha_tilde, || format!("alpha_prime must be < alpha_tilde, got {alpha_prime}"))?;
    require(beta >= 0.0 && beta < 1.0 / (2.0 * alpha_tilde), || {
        format!("beta must satisfy 0 <= beta < 1/(2 alpha_tilde) = {}, got {beta}", 1.0 / (2.0 * alpha_tilde))
    })?;
    let p_minus = 0.5 + alpha_tilde * beta;
    let cut = -alpha_prime * beta + TIE_SLACK;
    let hits = count_hits(seed, label::BIAS, trials, |rng| {
        let s: f64 = w.iter().map(|&x| if rng.gen::<f64>() < p_minus { -x } else { x }).sum();
        s <= cut
    });
    Ok(MonteCarloReport::from_counts(hits, trials, bias_bound(alpha_tilde, alpha_prime), Direction::Lower))
}

/// `ceil(zeta m / ln(m / r))` coupons.
pub fn coupon_count(m: usize, r: usize, zeta: f64) -> usize {
    ceil_tol(zeta * m as f64 / (m as f64 / r as f64).ln())
}

/// `X` is the draw at which the `coupons - 2r`-th distinct coupon first
/// shows up; the claim is `P[X <= m] <= 1/2`. `X <= m` exactly when `m`
/// draws already show that many distinct coupons, which is what is
/// simulated.
pub fn check_coupon_collector(m: usize, r: usize, zeta: f64, trials: u64, seed: u64) -> Result<MonteCarloReport, LemmaError> {
    require(r >= 1, || "r must be >= 1".into())?;
    require(m >= 4 * r, || format!("m must satisfy m >= 4r = {}, got {m}", 4 * r))?;
    require(zeta >= 8.0 && zeta.is_finite(), || format!("zeta must be >= 8, got {zeta}"))?;
    let coupons = coupon_count(m, r, zeta);
    let target = coupons.saturating_sub(2 * r);
    let hits = count_hits(seed, label::COUPON, trials, |rng| {
        if target > m {
            return false;
        }
        let mut seen = vec![0u64; coupons.div_ceil(64)];
        let mut distinct = 0;
        for drawn in 0..m {
            if distinct >= target {
                break;
            }
            // cannot reach the target any more
            if distinct + (m - drawn) < target {
                return false;
            }
            let c = rng.gen_range(0..coupons);
            let bit = 1u64 << (c % 64);
            if seen[c / 64] & bit == 0 {
                seen[c / 64] |= bit;
                distinct += 1;
            }
        }
        distinct >= target
    });
    Ok(MonteCarloReport::from_counts(hits, trials, 0.5, Direction::Upper))
}

/// A dense `rows x cols` matrix of `+-1` entries, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SignMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<f64>,
}

impl SignMatrix {
    pub fn random<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let entries = (0..rows * cols).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        Self { rows, cols, entries }
    }

    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        assert_eq!(w.len(), self.cols);
        self.entries.chunks(self.cols).map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum()).collect()
    }

    /// Entries of `A w` strictly below `tau`.
    pub fn count_below(&self, w: &[f64], tau: f64) -> usize {
        self.apply(w).iter().filter(|&&x| x < tau).count()
    }
}

/// `14 sqrt(lg(n) / r)`.
pub fn lincomb_threshold(r: usize, n: usize) -> f64 {
    14.0 * ((n as f64).log2() / r as f64).sqrt()
}

/// A `w` is a counterexample when fewer than `r / 10` entries of `A w` lie
/// below the threshold.
pub fn is_violation(below: usize, r: usize) -> bool {
    (below as f64) < r as f64 / 10.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearCombOutcome {
    pub report: MonteCarloReport,
    /// Matrices for which some searched `w` was a counterexample.
    pub violations: u64,
    /// Fewest entries below the threshold seen over all matrices and all
    /// searched `w`.
    pub min_below: usize,
    /// "no counterexample found" or "counterexample found"; the search is
    /// budgeted, so the former is never a proof.
    pub verdict: String,
}

fn normalize_l1(w: &mut [f64]) {
    let l1: f64 = w.iter().map(|x| x.abs()).sum();
    if l1 > 0.0 {
        for x in w.iter_mut() {
            *x /= l1;
        }
    }
}

/// Smaller is closer to a counterexample: the count below `tau`, then the
/// total shortfall below `tau`.
fn score(a: &SignMatrix, w: &[f64], tau: f64) -> (usize, f64) {
    let aw = a.apply(w);
    let below = aw.iter().filter(|&&x| x < tau).count();
    let shortfall = aw.iter().map(|&x| (tau - x).max(0.0)).sum();
    (below, shortfall)
}

/// Budgeted search for a `w` with `||w||_1 = 1` minimizing the number of
/// entries of `A w` below `tau`: random directions, random points of the
/// grid with coordinates `j * 40 lg(n) / r`, then greedy ascent from the
/// best point. Returns the fewest entries below `tau` found.
fn search_counterexample(a: &SignMatrix, tau: f64, budget: usize, rng: &mut ChaCha8Rng) -> usize {
    let n = a.cols;
    let third = (budget / 3).max(1);
    let mut best_w = vec![0.0; n];
    best_w[0] = 1.0;
    let mut best = score(a, &best_w, tau);
    let consider = |w: Vec<f64>, best: &mut (usize, f64), best_w: &mut Vec<f64>| {
        let s = score(a, &w, tau);
        if s.0 < best.0 || (s.0 == best.0 && s.1 < best.1) {
            *best = s;
            *best_w = w;
        }
    };
    for _ in 0..third {
        let mut w: Vec<f64> = (0..n)
            .map(|_| {
                let e = -(1.0 - rng.gen::<f64>()).ln();
                if rng.gen::<bool>() { e } else { -e }
            })
            .collect();
        normalize_l1(&mut w);
        consider(w, &mut best, &mut best_w);
    }
    let step = 40.0 * (n as f64).log2() / a.rows as f64;
    if step > 0.0 {
        let units = ((1.0 / step).floor() as usize).max(1);
        for _ in 0..third {
            let mut w = vec![0.0; n];
            for _ in 0..units {
                w[rng.gen_range(0..n)] += 1.0;
            }
            for x in &mut w {
                if rng.gen::<bool>() {
                    *x = -*x;
                }
            }
            normalize_l1(&mut w);
            consider(w, &mut best, &mut best_w);
        }
    }
    let etas = [0.5, 0.1, 0.02];
    for it in 0..third {
        let mut w = best_w.clone();
        let j = rng.gen_range(0..n);
        let eta = etas[it % etas.len()];
        w[j] += if rng.gen::<bool>() { eta } else { -eta };
        normalize_l1(&mut w);
        if w.iter().all(|x| *x == 0.0) {
            continue;
        }
        consider(w, &mut best, &mut best_w);
    }
    best.0
}

/// Draws `trials` matrices `A` uniform in `{-1,1}^{r x n}` and searches each
/// for a `w` with `||w||_1 = 1` such that fewer than `r/10` entries of `A w`
/// are below `14 sqrt(lg(n)/r)`. The claim bounds the fraction of such
/// matrices by `2^(-r/100)`.
pub fn check_linear_comb(r: usize, n: usize, trials: u64, budget: usize, seed: u64) -> Result<LinearCombOutcome, LemmaError> {
    require(n >= 1, || "n must be >= 1".into())?;
    let need = 40.0 * (n as f64).log2();
    require(r as f64 >= need, || format!("r must satisfy r >= 40 lg(n) = {need:.2}, got {r}"))?;
    require(budget >= 1, || "search budget must be >= 1".into())?;
    let tau = lincomb_threshold(r, n);
    let chunks = trials.div_ceil(CHUNK);
    let (violations, min_below) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, &[label::MONTE_CARLO, label::LINEAR_COMB, c]);
            let mut v = 0u64;
            let mut lo = usize::MAX;
            for _ in 0..CHUNK.min(trials - c * CHUNK) {
                let a = SignMatrix::random(r, n, &mut rng);
                let below = search_counterexample(&a, tau, budget, &mut rng);
                lo = lo.min(below);
                if is_violation(below, r) {
                    v += 1;
                }
            }
            (v, lo)
        })
        .reduce(|| (0, usize::MAX), |x, y| (x.0 + y.0, x.1.min(y.1)));
    let report = MonteCarloReport::from_counts(violations, trials, 2f64.powf(-0.01 * r as f64), Direction::Upper);
    let verdict = if violations == 0 { "no counterexample found" } else { "counterexample found" };
    Ok(LinearCombOutcome { report, violations, min_below, verdict: verdict.into() })
}

/// `mc2 exp(-mc3 16 beta^2 n / mc1^2)`.
pub fn anticoncentration_bound(beta: f64, n: usize, c: &CalibrationConstants) -> f64 {
    c.mc2 * (-c.mc3 * 16.0 * beta * beta * n as f64 / (c.mc1 * c.mc1)).exp()
}

/// What one anti-concentration run says about the constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnticoncentrationFit {
    /// Largest `mc2` for which the bound stays below the 3-sigma lower
    /// confidence limit, at the given `mc1`, `mc3`.
    pub mc2_supported: f64,
    /// Smallest `mc3 >= 1` with the same property at the given `mc1`, `mc2`;
    /// `None` when no `mc3` works (the lower limit is zero).
    pub mc3_supported: Option<f64>,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnticoncentrationOutcome {
    pub report: MonteCarloReport,
    pub fit: AnticoncentrationFit,
}

/// Uniform signs `h` and the event `sum h(i) x_i >= beta`. The claim is a
/// lower bound at the current constants.
pub fn check_anticoncentration(
    x: &[f64],
    beta: f64,
    trials: u64,
    constants: &CalibrationConstants,
    seed: u64,
) -> Result<AnticoncentrationOutcome, LemmaError> {
    require(!x.is_empty(), || "x must be non-empty".into())?;
    require(x.iter().all(|v| *v >= 0.0 && v.is_finite()), || "x must be nonnegative".into())?;
    require(beta >= 0.0 && beta <= constants.mc1 / 6.0, || {
        format!("beta must satisfy 0 <= beta <= mc1/6 = {}, got {beta}", constants.mc1 / 6.0)
    })?;
    let total: f64 = x.iter().sum();
    require(total >= (1.0 - beta) / 2.0 - TIE_SLACK, || format!("sum x must be >= (1 - beta)/2, got {total}"))?;
    let cut = beta - TIE_SLACK;
    let hits = count_hits(seed, label::ANTICONCENTRATION, trials, |rng| {
        let mut s = 0.0;
        for chunk in x.chunks(64) {
            let bits: u64 = rng.gen();
            for (lane, &v) in chunk.iter().enumerate() {
                s += if (bits >> lane) & 1 == 1 { v } else { -v };
            }
        }
        s >= cut
    });
    let n = x.len();
    let report = MonteCarloReport::from_counts(hits, trials, anticoncentration_bound(beta, n, constants), Direction::Lower);
    let lower = (report.empirical_probability - 3.0 * report.std_error).max(0.0);
    let exponent = 16.0 * beta * beta * n as f64 / (constants.mc1 * constants.mc1);
    let mc2_supported = (lower * (constants.mc3 * exponent).exp()).min(1.0);
    let mc3_supported = if lower <= 0.0 {
        None
    } else if lower >= constants.mc2 || exponent == 0.0 {
        Some(1.0)
    } else {
        Some(((constants.mc2 / lower).ln() / exponent).max(1.0))
    };
    Ok(AnticoncentrationOutcome { report, fit: AnticoncentrationFit { mc2_supported, mc3_supported, seed } })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_pass_rule() {
        let r = MonteCarloReport::from_counts(40, 100, 0.45, Direction::Lower);
        assert!(r.pass);
        let r = MonteCarloReport::from_counts(10, 100, 0.45, Direction::Lower);
        assert!(!r.pass);
        let r = MonteCarloReport::from_counts(60, 100, 0.5, Direction::Upper);
        assert!(r.pass && (r.std_error - (0.24f64 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn json_has_exactly_the_report_fields() {
        let r = MonteCarloReport::from_counts(1, 4, 0.5, Direction::Upper);
        let v = serde_json::to_value(r).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        keys.sort();
        assert_eq!(keys, ["claimed_bound", "direction", "empirical_probability", "pass", "std_error", "trials"]);
        assert_eq!(v["direction"], "upper");
    }

    #[test]
    fn bias_bound_formula() {
        // 1/2 - 16/49 is below 1/4
        assert!((bias_bound(4.0, 1.0) - (0.5 - 16.0 / 49.0)).abs() < 1e-15);
        assert_eq!(bias_bound(4.0, 0.0), 0.25);
    }

    #[test]
    fn preconditions_rejected() {
        assert!(check_bias_lemma(&[0.5, 0.4], 2.0, 1.0, 0.1, 10, 0).is_err());
        assert!(check_bias_lemma(&[1.0], 2.0, 1.0, 0.25, 10, 0).is_err());
        assert!(check_coupon_collector(15, 4, 8.0, 10, 0).is_err());
        assert!(check_linear_comb(100, 8, 1, 10, 0).is_err());
        assert!(check_anticoncentration(&[0.1], 0.1, 10, &CalibrationConstants::default(), 0).is_err());
    }

    #[test]
    fn single_coordinate_anticoncentration_is_one_half() {
        let out = check_anticoncentration(&[0.5], 0.1, 20_000, &CalibrationConstants::default(), 3).unwrap();
        assert!((out.report.empirical_probability - 0.5).abs() < 4.0 * out.report.std_error);
    }

    #[test]
    fn chunking_is_deterministic() {
        let a = check_bias_lemma(&[0.25; 4], 2.0, 1.0, 0.1, 5000, 9).unwrap();
        let b = check_bias_lemma(&[0.25; 4], 2.0, 1.0, 0.1, 5000, 9).unwrap();
        assert_eq!(a, b);
    }
}
