use calnav::geometry::Aabb2;
use calnav::loss::{match_predictions, matched_loss, pair_loss, LossWeights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_box(rng: &mut ChaCha8Rng) -> Aabb2 {
    let c = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
    let e = [rng.random_range(0.05..2.0), rng.random_range(0.05..2.0)];
    Aabb2::from_center(c, e).unwrap()
}

fn random_weights(rng: &mut ChaCha8Rng) -> LossWeights {
    let raw: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..1.0));
    let s: f64 = raw.iter().sum();
    LossWeights::new(raw[0] / s, raw[1] / s, 1.0 - raw[0] / s - raw[1] / s).unwrap()
}

fn inside(b: &Aabb2, p: [f64; 2]) -> bool {
    (0..2).all(|k| p[k] >= b.min[k] && p[k] <= b.max[k])
}

#[test]
fn pair_loss_matches_monte_carlo_areas() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let w = LossWeights::default();
    for _ in 0..20 {
        let (a, b) = (random_box(&mut rng), random_box(&mut rng));
        let hull = Aabb2::new(
            [a.min[0].min(b.min[0]), a.min[1].min(b.min[1])],
            [a.max[0].max(b.max[0]), a.max[1].max(b.max[1])],
        )
        .unwrap();
        let n = 400_000;
        let (mut in_a, mut in_b, mut a_only, mut b_only, mut neither) = (0usize, 0usize, 0usize, 0usize, 0usize);
        for _ in 0..n {
            let p = [rng.random_range(hull.min[0]..hull.max[0]), rng.random_range(hull.min[1]..hull.max[1])];
            let (ia, ib) = (inside(&a, p), inside(&b, p));
            in_a += usize::from(ia);
            in_b += usize::from(ib);
            a_only += usize::from(ia && !ib);
            b_only += usize::from(ib && !ia);
            neither += usize::from(!ia && !ib);
        }
        let frac = |k: usize, of: usize| if of == 0 { 0.0 } else { k as f64 / of as f64 };
        let want = w.w1 * frac(a_only, in_a) + w.w2 * frac(b_only, in_b) + w.w3 * frac(neither, n);
        let got = pair_loss(&a, &b, &w).unwrap();
        assert!((got - want).abs() <= 0.01, "{a:?} {b:?}: {got} vs {want}");
    }
}

#[test]
fn worked_examples() {
    let w = LossWeights::default();
    let unit = Aabb2::new([0.0, 0.0], [1.0, 1.0]).unwrap();
    let right = Aabb2::new([2.0, 0.0], [3.0, 1.0]).unwrap();
    assert!((pair_loss(&unit, &right, &w).unwrap() - 7.0 / 9.0).abs() <= 1e-12);
    assert_eq!(pair_loss(&unit, &unit, &w).unwrap(), 0.0);

    let outer = Aabb2::new([-0.5, -1.0], [2.0, 1.5]).unwrap();
    let w = LossWeights::new(0.2, 0.5, 0.3).unwrap();
    let want = 0.5 * (1.0 - 1.0 / outer.volume());
    assert!((pair_loss(&unit, &outer, &w).unwrap() - want).abs() <= 1e-12);
}

#[test]
fn bounded_and_zero_only_at_equality() {
    let mut rng = ChaCha8Rng::seed_from_u64(62);
    for _ in 0..10_000 {
        let (a, b) = (random_box(&mut rng), random_box(&mut rng));
        let w = random_weights(&mut rng);
        let l = pair_loss(&a, &b, &w).unwrap();
        assert!((0.0..=1.0).contains(&l), "{l}");
        let pos = LossWeights::new(0.3, 0.3, 0.4).unwrap();
        assert!(pair_loss(&a, &b, &pos).unwrap() > 0.0);
        assert_eq!(pair_loss(&a, &a, &w).unwrap(), 0.0);
    }
}

#[test]
fn invariant_under_similarity_transforms() {
    let mut rng = ChaCha8Rng::seed_from_u64(63);
    for _ in 0..1000 {
        let (a, b) = (random_box(&mut rng), random_box(&mut rng));
        let w = random_weights(&mut rng);
        let s = 10f64.powf(rng.random_range(-2.0..2.0));
        let t = [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)];
        let map = |x: &Aabb2| {
            Aabb2::new(
                [s * x.min[0] + t[0], s * x.min[1] + t[1]],
                [s * x.max[0] + t[0], s * x.max[1] + t[1]],
            )
            .unwrap()
        };
        let before = pair_loss(&a, &b, &w).unwrap();
        let after = pair_loss(&map(&a), &map(&b), &w).unwrap();
        assert!((before - after).abs() <= 1e-10, "{before} vs {after} at scale {s}");
    }
}

#[test]
fn smooth_away_from_degenerate_configurations() {
    // central differences in one coordinate agree at two step sizes
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let w = LossWeights::default();
    let mut checked = 0;
    for _ in 0..200 {
        let (a, b) = (random_box(&mut rng), random_box(&mut rng));
        let f = |x: f64| {
            let moved = Aabb2::new([b.min[0] + x, b.min[1]], [b.max[0] + x, b.max[1]]).unwrap();
            pair_loss(&a, &moved, &w).unwrap()
        };
        // stay clear of the kinks where box edges cross
        let edges = [a.min[0], a.max[0]];
        let near_kink = [b.min[0], b.max[0]].iter().any(|e| edges.iter().any(|k| (e - k).abs() < 0.05));
        let overlap_y = a.min[1] < b.max[1] && b.min[1] < a.max[1];
        if near_kink || !overlap_y {
            continue;
        }
        let d1 = (f(1e-4) - f(-1e-4)) / 2e-4;
        let d2 = (f(1e-3) - f(-1e-3)) / 2e-3;
        assert!((d1 - d2).abs() <= 1e-6 * (1.0 + d1.abs()), "{d1} vs {d2}");
        checked += 1;
    }
    assert!(checked > 30, "{checked}");
}

/// Exhaustive nearest visible box by squared center distance, lowest index first.
fn brute_force_match(gt: &[(Aabb2, bool)], pred: &Aabb2) -> usize {
    let c = pred.center();
    let d = |i: usize| {
        let g = gt[i].0.center();
        (g[0] - c[0]).powi(2) + (g[1] - c[1]).powi(2)
    };
    let visible: Vec<usize> = (0..gt.len()).filter(|&i| gt[i].1).collect();
    let best = visible.iter().map(|&i| d(i)).fold(f64::INFINITY, f64::min);
    visible.into_iter().find(|&i| d(i) == best).unwrap()
}

#[test]
fn matching_agrees_with_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(65);
    let mut ties = 0;
    for _ in 0..2000 {
        // centers on a coarse lattice so equal distances occur
        let lattice = |rng: &mut ChaCha8Rng| {
            let c = [rng.random_range(-3..=3) as f64, rng.random_range(-3..=3) as f64];
            Aabb2::from_center(c, [rng.random_range(0.2..1.0), rng.random_range(0.2..1.0)]).unwrap()
        };
        let m = rng.random_range(1..6);
        let mut gt: Vec<(Aabb2, bool)> = (0..m).map(|_| (lattice(&mut rng), rng.random_bool(0.7))).collect();
        if !gt.iter().any(|g| g.1) {
            gt[0].1 = true;
        }
        let preds: Vec<Aabb2> = (0..rng.random_range(1..5)).map(|_| lattice(&mut rng)).collect();
        let got = match_predictions(&gt, &preds).unwrap();
        for (p, &g) in preds.iter().zip(&got) {
            assert_eq!(g, brute_force_match(&gt, p));
            let c = p.center();
            let dists: Vec<f64> = gt
                .iter()
                .filter(|x| x.1)
                .map(|x| (x.0.center()[0] - c[0]).powi(2) + (x.0.center()[1] - c[1]).powi(2))
                .collect();
            let best = dists.iter().copied().fold(f64::INFINITY, f64::min);
            ties += usize::from(dists.iter().filter(|&&d| d == best).count() > 1);
        }
        let w = LossWeights::default();
        let want: f64 = preds.iter().zip(&got).map(|(p, &g)| pair_loss(&gt[g].0, p, &w).unwrap()).sum::<f64>() / preds.len() as f64;
        assert!((matched_loss(&gt, &preds, &w).unwrap() - want).abs() <= 1e-15);
    }
    assert!(ties > 20, "only {ties} ties exercised");
}
