//! Split conformal calibration of scalar nonconformity scores.
//!
//! Given scores `U_1..U_N` from exchangeable calibration environments, the
//! threshold `q̂ = U_(⌈(N+1)(1-ε)⌉)` (or `+inf` when the index exceeds `N`)
//! satisfies `P[U_test <= q̂] >= 1 - ε` marginally. The dataset-conditional
//! variant replaces `ε` with a smaller `ε̂` such that, with probability
//! `1 - δ` over the calibration draw, the conditional coverage is at least
//! `Beta⁻¹_{N+1-v, v}(δ) >= 1 - ε` where `v = ⌊(N+1)ε̂⌋`.

mod beta;

pub use beta::{beta_inv_cdf, inc_beta_reg, ln_beta, ln_gamma};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonconformity score of one calibration unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreSample {
    pub env_id: u64,
    #[serde(with = "crate::serde_inf")]
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    Marginal,
    DatasetConditional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub mode: CalibrationMode,
}

impl CalibrationConfig {
    pub fn dataset_conditional(epsilon: f64, delta: f64) -> Self {
        Self {
            epsilon,
            delta,
            mode: CalibrationMode::DatasetConditional,
        }
    }

    pub fn marginal(epsilon: f64) -> Self {
        Self {
            epsilon,
            delta: 0.01,
            mode: CalibrationMode::Marginal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon {} outside (0, 1)", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta {} outside (0, 1)", self.delta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    #[serde(with = "crate::serde_inf")]
    pub q_hat: f64,
    pub epsilon: f64,
    pub epsilon_hat: f64,
    pub v: usize,
    pub n_samples: usize,
    pub achieved_beta: f64,
    pub mode: CalibrationMode,
    pub delta: f64,
}

/// `⌈x⌉`, snapping values within `1e-9` of an integer onto it so that
/// products like `(N + 1) * 0.85` are not pushed up by representation error.
fn snapped_ceil(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 {
        r
    } else {
        x.ceil()
    }
}

fn snapped_floor(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 {
        r
    } else {
        x.floor()
    }
}

/// Scores sorted ascending; ties broken by `env_id` so the order is the same
/// on every platform.
pub fn sorted_scores(scores: &[ScoreSample]) -> Vec<ScoreSample> {
    let mut s = scores.to_vec();
    s.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.env_id.cmp(&b.env_id)));
    s
}

/// `U_(⌈(N+1)·level⌉)`, or `+inf` when that index exceeds `N`.
pub fn empirical_quantile(scores: &[ScoreSample], level: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("quantile level {level} outside (0, 1)")));
    }
    let n = scores.len();
    let k = snapped_ceil((n as f64 + 1.0) * level) as usize;
    if k > n {
        return Ok(f64::INFINITY);
    }
    Ok(sorted_scores(scores)[k.max(1) - 1].score)
}

/// Outcome of the ε̂ search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalLevel {
    pub epsilon_hat: f64,
    /// `⌊(n+1)ε̂⌋`; 0 means no admissible level and `q̂ = +inf`.
    pub v: usize,
    pub achieved_beta: f64,
}

/// Largest `ε̂ = v / (n+1)` whose dataset-conditional coverage bound
/// `Beta⁻¹_{n+1-v, v}(δ)` is at least `1 - ε`, by scanning every `v` in `1..=n`.
/// The quantile clears `1 - ε` iff the CDF there is at most `δ`, so the scan
/// needs one incomplete beta per `v` and a single inversion at the end.
pub fn dataset_conditional_level(n: usize, epsilon: f64, delta: f64) -> Result<ConditionalLevel> {
    if n == 0 {
        return Err(Error::EmptyScores);
    }
    CalibrationConfig::dataset_conditional(epsilon, delta).validate()?;
    let mut v = 0;
    for k in 1..=n {
        if inc_beta_reg((n + 1 - k) as f64, k as f64, 1.0 - epsilon)? <= delta {
            v = k;
        }
    }
    if v == 0 {
        return Ok(ConditionalLevel {
            epsilon_hat: 0.0,
            v: 0,
            achieved_beta: 1.0,
        });
    }
    Ok(ConditionalLevel {
        epsilon_hat: v as f64 / (n + 1) as f64,
        v,
        achieved_beta: beta_inv_cdf((n + 1 - v) as f64, v as f64, delta)?,
    })
}

pub fn calibrate(scores: &[ScoreSample], config: &CalibrationConfig) -> Result<CalibrationResult> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    config.validate()?;
    let n = scores.len();
    let (epsilon_hat, v, achieved_beta, q_hat) = match config.mode {
        CalibrationMode::Marginal => {
            let v = snapped_floor((n as f64 + 1.0) * config.epsilon) as usize;
            let beta = if v == 0 {
                1.0
            } else {
                beta_inv_cdf((n + 1 - v) as f64, v as f64, config.delta)?
            };
            let q = empirical_quantile(scores, 1.0 - config.epsilon)?;
            (config.epsilon, v, beta, q)
        }
        CalibrationMode::DatasetConditional => {
            let lvl = dataset_conditional_level(n, config.epsilon, config.delta)?;
            let q = if lvl.v == 0 {
                f64::INFINITY
            } else {
                empirical_quantile(scores, 1.0 - lvl.epsilon_hat)?
            };
            (lvl.epsilon_hat, lvl.v, lvl.achieved_beta, q)
        }
    };
    Ok(CalibrationResult {
        q_hat,
        epsilon: config.epsilon,
        epsilon_hat,
        v,
        n_samples: n,
        achieved_beta,
        mode: config.mode,
        delta: config.delta,
    })
}

/// Smallest `θ` in `bracket` (to `tol`) with `predicate(θ)`, for a predicate
/// that is monotone non-decreasing in `θ`.
///
/// Returns `bracket.0` when the predicate already holds there and `+inf`
/// when it fails at `bracket.1`. Non-monotone predicates give an
/// unspecified point of the bracket.
pub fn minimal_parameter<F>(mut predicate: F, bracket: (f64, f64), tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> bool,
{
    let (mut lo, mut hi) = bracket;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("empty bracket [{lo}, {hi}]")));
    }
    if predicate(lo) {
        return Ok(lo);
    }
    if !predicate(hi) {
        return Ok(f64::INFINITY);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if predicate(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
