//! Box regression loss built from the exact area set-operations.
//!
//! `L = w1 |A\B|/|A| + w2 |B\A|/|B| + w3 |C\(A∪B)|/|C|` with `C` the joint
//! bounding box of `A` and `B`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{area_ops, Aabb2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::new(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0).expect("uniform weights are valid")
    }
}

impl LossWeights {
    /// Non-negative weights summing to one (to 1e-9).
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self> {
        let ok = [w1, w2, w3].iter().all(|w| w.is_finite() && *w >= 0.0) && (w1 + w2 + w3 - 1.0).abs() <= 1e-9;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "loss weights ({w1}, {w2}, {w3}) must be non-negative and sum to 1"
            )));
        }
        Ok(Self { w1, w2, w3 })
    }
}

/// Loss between ground truth `a` and prediction `b`. Both need positive area.
pub fn pair_loss(a: &Aabb2, b: &Aabb2, w: &LossWeights) -> Result<f64> {
    let (va, vb) = (a.volume(), b.volume());
    if !(va > 0.0 && vb > 0.0) {
        return Err(Error::InvalidBox("loss needs boxes with positive area".into()));
    }
    let ops = area_ops(a, b);
    let l1 = ops.a_minus_b / va;
    let l2 = ops.b_minus_a / vb;
    let l3 = ((ops.hull - ops.union) / ops.hull).max(0.0);
    Ok(w.w1 * l1 + w.w2 * l2 + w.w3 * l3)
}

/// Mean pair loss after matching each prediction to the nearest visible
/// ground-truth box by center distance (lowest index on ties). Several
/// predictions may share a ground-truth box. No predictions gives 0.
pub fn matched_loss(ground_truth: &[(Aabb2, bool)], predictions: &[Aabb2], w: &LossWeights) -> Result<f64> {
    if predictions.is_empty() {
        return Ok(0.0);
    }
    let matches = match_predictions(ground_truth, predictions)?;
    let mut total = 0.0;
    for (p, &g) in predictions.iter().zip(&matches) {
        total += pair_loss(&ground_truth[g].0, p, w)?;
    }
    Ok(total / predictions.len() as f64)
}

/// Index of the matched ground-truth box for every prediction.
pub fn match_predictions(ground_truth: &[(Aabb2, bool)], predictions: &[Aabb2]) -> Result<Vec<usize>> {
    let visible: Vec<usize> = (0..ground_truth.len()).filter(|&i| ground_truth[i].1).collect();
    if visible.is_empty() && !predictions.is_empty() {
        return Err(Error::InvalidArgument("predictions given but no ground truth is visible".into()));
    }
    Ok(predictions
        .iter()
        .map(|p| {
            let c = p.center();
            let mut best = (f64::INFINITY, usize::MAX);
            for &i in &visible {
                let g = ground_truth[i].0.center();
                let d = (g[0] - c[0]).powi(2) + (g[1] - c[1]).powi(2);
                if d < best.0 {
                    best = (d, i);
                }
            }
            best.1
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b2(x0: f64, y0: f64, x1: f64, y1: f64) -> Aabb2 {
        Aabb2::new([x0, y0], [x1, y1]).unwrap()
    }

    #[test]
    fn worked_examples() {
        let w = LossWeights::default();
        let a = b2(0.0, 0.0, 1.0, 1.0);
        assert_eq!(pair_loss(&a, &a, &w).unwrap(), 0.0);
        let l = pair_loss(&a, &b2(2.0, 0.0, 3.0, 1.0), &w).unwrap();
        assert!((l - 7.0 / 9.0).abs() < 1e-12);
        // containment: only the second term remains
        let big = b2(-1.0, -1.0, 2.0, 2.0);
        let l = pair_loss(&a, &big, &w).unwrap();
        assert!((l - w.w2 * (1.0 - 1.0 / 9.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_and_bad_weights() {
        let w = LossWeights::default();
        let flat = b2(0.0, 0.0, 1.0, 0.0);
        assert!(pair_loss(&flat, &b2(0.0, 0.0, 1.0, 1.0), &w).is_err());
        assert!(LossWeights::new(0.5, 0.5, 0.5).is_err());
        assert!(LossWeights::new(-0.1, 0.6, 0.5).is_err());
    }

    #[test]
    fn matching() {
        let w = LossWeights::default();
        let g0 = b2(0.0, 0.0, 1.0, 1.0);
        let g1 = b2(3.0, 0.0, 4.0, 1.0);
        let gt = [(g0, true), (g1, true)];
        assert_eq!(matched_loss(&gt, &[g0], &w).unwrap(), 0.0);
        assert_eq!(match_predictions(&gt, &[b2(0.1, 0.1, 0.9, 0.9)]).unwrap(), vec![0]);
        // invisible boxes are never matched
        let gt = [(g0, false), (g1, true)];
        assert_eq!(match_predictions(&gt, &[g0]).unwrap(), vec![1]);
        assert_eq!(matched_loss(&gt, &[], &w).unwrap(), 0.0);
        assert!(matched_loss(&[(g0, false)], &[g0], &w).is_err());
    }
}
