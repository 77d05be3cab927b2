//! Regression loss between boxes and its nearest-visible matching.

use calnav::geometry::Aabb2;
use calnav::loss::{matched_loss, pair_loss, LossWeights};

fn main() -> calnav::Result<()> {
    let w = LossWeights::default();
    let a = Aabb2::new([0.0, 0.0], [1.0, 1.0])?;
    for b in [
        Aabb2::new([0.0, 0.0], [1.0, 1.0])?,
        Aabb2::new([0.1, 0.1], [0.9, 0.9])?,
        Aabb2::new([-0.5, -0.5], [1.5, 1.5])?,
        Aabb2::new([2.0, 0.0], [3.0, 1.0])?,
    ] {
        println!("{b:?}: {:.4}", pair_loss(&a, &b, &w)?);
    }
    let gt = [(a, true), (Aabb2::new([4.0, 0.0], [5.0, 1.0])?, false)];
    let preds = [Aabb2::new([0.2, 0.0], [1.2, 1.0])?, Aabb2::new([4.0, 0.0], [5.0, 1.0])?];
    println!("matched loss {:.4}", matched_loss(&gt, &preds, &w)?);
    Ok(())
}
