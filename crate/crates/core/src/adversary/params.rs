use serde::{Deserialize, Serialize};

use crate::ceil_tol;

use super::AdversaryError;

/// The universal constants of the weak-learner lemma (`c0..c3`) and of the
/// Montgomery-Smith anti-concentration bound (`mc1..mc3`).
///
/// None of them is fixed in closed form. The defaults are one except `mc2`,
/// which is capped at `1/4` by two equal coordinates: `x = (1/4, 1/4)` only
/// clears a small `beta` when both signs are `+1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConstants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub mc1: f64,
    pub mc2: f64,
    pub mc3: f64,
}

impl Default for CalibrationConstants {
    fn default() -> Self {
        Self { c0: 1.0, c1: 1.0, c2: 1.0, c3: 1.0, mc1: 1.0, mc2: 0.25, mc3: 1.0 }
    }
}

impl CalibrationConstants {
    pub fn validate(&self) -> Result<(), AdversaryError> {
        let all = [self.c0, self.c1, self.c2, self.c3, self.mc1, self.mc2, self.mc3];
        if all.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(AdversaryError::InvalidParams("calibration constants must be positive".into()));
        }
        if self.c0 > 1.0 || self.c1 > 1.0 || self.mc1 > 1.0 || self.mc2 > 1.0 {
            return Err(AdversaryError::InvalidParams("c0, c1, mc1, mc2 must be <= 1".into()));
        }
        if self.c2 < 1.0 || self.c3 < 1.0 || self.mc3 < 1.0 {
            return Err(AdversaryError::InvalidParams("c2, c3, mc3 must be >= 1".into()));
        }
        Ok(())
    }

    /// Weight on the near-all-ones hypothesis above which the final vote
    /// must misclassify a tenth of the last part: `14 s / (1 + 14 s)` with
    /// `s = sqrt(c3 gamma^2)`.
    pub fn case1_threshold(&self, gamma: f64) -> f64 {
        let s = 14.0 * (self.c3 * gamma * gamma).sqrt();
        s / (1.0 + s)
    }
}

pub const DEFAULT_ALPHA: f64 = 2.0;
pub const DEFAULT_BLOCK_BUDGET: usize = 4096;

/// Every derived quantity of the construction for one `(gamma, d, m, alpha)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryParams {
    pub gamma: f64,
    /// `8 gamma`: the lemma is invoked at this advantage.
    pub gamma_prime: f64,
    pub d: usize,
    pub m: usize,
    pub alpha: f64,
    /// `ceil(d / gamma_prime^2)`.
    pub r: usize,
    /// `ceil(alpha^2 r)`: length of the last part, where `h0` is `-1`.
    pub r1: usize,
    /// `ceil(8 alpha^2 m / ln(m / r))`.
    pub u: usize,
    /// `ceil(ln(u) / gamma^2)`: number of blocks in each hypothesis set.
    pub k: usize,
    /// Random hypotheses per block, not counting `h0`.
    pub per_block_budget: usize,
    pub delta: f64,
    pub select_threshold: f64,
    pub switch_threshold: f64,
    /// First-part mass above which `h0` is served directly.
    pub mass_threshold: f64,
    /// `-1` entries demanded on `F_{r,S}`, clamped to `r`.
    pub minus_quota: usize,
    /// The unclamped `ceil((1/2 + alpha gamma_prime / 2) r)`.
    pub minus_quota_raw: usize,
    pub quota_clamped: bool,
    /// `gamma_prime * alpha <= c0`; recorded, never enforced.
    pub lemma_applicable: bool,
    pub constants: CalibrationConstants,
}

impl AdversaryParams {
    pub fn first_part_len(&self) -> usize {
        self.u - self.r1
    }

    pub fn with_budget(mut self, per_block_budget: usize) -> Result<Self, AdversaryError> {
        if per_block_budget == 0 {
            return Err(AdversaryError::InvalidParams("per_block_budget must be >= 1".into()));
        }
        self.per_block_budget = per_block_budget;
        Ok(self)
    }

    pub fn with_thresholds(mut self, select: f64, switch: f64) -> Result<Self, AdversaryError> {
        for (name, t) in [("select_threshold", select), ("switch_threshold", switch)] {
            if !(t > 0.0 && t <= 1.0) {
                return Err(AdversaryError::InvalidParams(format!("{name} must lie in (0, 1], got {t}")));
            }
        }
        self.select_threshold = select;
        self.switch_threshold = switch;
        Ok(self)
    }

    /// Same parameters over an explicit universe size, for fixtures and the
    /// "everything sampled" regime. `r <= r1 <= u` must still hold.
    pub fn with_universe(mut self, u: usize) -> Result<Self, AdversaryError> {
        if u < self.r1 {
            return Err(AdversaryError::InvalidParams(format!("universe {u} smaller than r1 = {}", self.r1)));
        }
        self.u = u;
        self.k = ceil_tol((u as f64).ln() / (self.gamma * self.gamma)).max(1);
        Ok(self)
    }

    /// `k` overridden, for small fixtures.
    pub fn with_blocks(mut self, k: usize) -> Result<Self, AdversaryError> {
        if k == 0 {
            return Err(AdversaryError::InvalidParams("k must be >= 1".into()));
        }
        self.k = k;
        Ok(self)
    }

    /// Number of hypotheses the faithful construction would need,
    /// `4 c1^-2 k ln(k/delta) exp(8 c2 gamma_prime^2 r1) + 1`, as a natural log.
    pub fn faithful_ln_set_size(&self) -> f64 {
        let c = &self.constants;
        let k = self.k as f64;
        (4.0 / (c.c1 * c.c1) * k * (k / self.delta).ln()).ln()
            + 8.0 * c.c2 * self.gamma_prime * self.gamma_prime * self.r1 as f64
    }
}

/// Derives every parameter from `(gamma, d, m, alpha)`.
///
/// Preconditions: `0 < gamma <= 1/4`, `d >= ln(1/gamma)`, `alpha >= 1`,
/// `m >= 4 r`, and the resulting `r1 <= u / 8`.
pub fn derive_params(
    gamma: f64,
    d: usize,
    m: usize,
    alpha: f64,
    constants: CalibrationConstants,
) -> Result<AdversaryParams, AdversaryError> {
    if !(gamma > 0.0 && gamma <= 0.25) {
        return Err(AdversaryError::InvalidParams(format!("gamma must satisfy 0 < gamma <= 1/4, got {gamma}")));
    }
    if (d as f64) < (1.0 / gamma).ln() {
        return Err(AdversaryError::InvalidParams(format!(
            "d must satisfy d >= ln(1/gamma) = {:.4}, got {d}",
            (1.0 / gamma).ln()
        )));
    }
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(AdversaryError::InvalidParams(format!("alpha must satisfy alpha >= 1, got {alpha}")));
    }
    constants.validate()?;
    let gamma_prime = 8.0 * gamma;
    let r = ceil_tol(d as f64 / (gamma_prime * gamma_prime)).max(1);
    if m < 4 * r {
        return Err(AdversaryError::InvalidParams(format!("m must satisfy m >= 4r = {}, got {m}", 4 * r)));
    }
    let r1 = ceil_tol(alpha * alpha * r as f64);
    let u = ceil_tol(8.0 * alpha * alpha * m as f64 / (m as f64 / r as f64).ln());
    if 8 * r1 > u {
        return Err(AdversaryError::InvalidParams(format!("r1 <= u/8 violated: r1 = {r1}, u = {u}")));
    }
    let k = ceil_tol((u as f64).ln() / (gamma * gamma));
    let minus_quota_raw = ceil_tol((0.5 + alpha * gamma_prime / 2.0) * r as f64);
    Ok(AdversaryParams {
        gamma,
        gamma_prime,
        d,
        m,
        alpha,
        r,
        r1,
        u,
        k,
        per_block_budget: DEFAULT_BLOCK_BUDGET,
        delta: 0.25,
        select_threshold: 2.0 * gamma,
        switch_threshold: 2.0 * gamma,
        mass_threshold: 0.5 + gamma_prime / 8.0,
        minus_quota: minus_quota_raw.min(r),
        minus_quota_raw,
        quota_clamped: minus_quota_raw > r,
        lemma_applicable: gamma_prime * alpha <= constants.c0,
        constants,
    })
}
