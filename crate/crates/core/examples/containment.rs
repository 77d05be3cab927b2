//! Containment of box unions and the smallest inflation that restores it.

use calnav::geometry::{area_ops, contains, default_bracket, minimal_inflation, Aabb2, BoxUnion2, DEFAULT_INFLATION_TOL};

fn main() -> calnav::Result<()> {
    let truth = BoxUnion2::new(vec![Aabb2::new([2.0, -0.5], [3.0, 0.5])?, Aabb2::new([3.0, -0.2], [3.6, 0.2])?]);
    let detected = BoxUnion2::new(vec![Aabb2::new([2.2, -0.3], [2.8, 0.3])?]);

    println!("detections cover the truth: {}", contains(&truth, &detected));
    let q = minimal_inflation(&truth, &detected, default_bracket(10.0), DEFAULT_INFLATION_TOL)?;
    println!("smallest covering inflation: {q:.4} m");
    println!("covered after inflating: {}", contains(&truth, &detected.inflate(q)));

    let ops = area_ops(&truth.boxes[0], &detected.boxes[0]);
    println!("{ops:?}");
    Ok(())
}
