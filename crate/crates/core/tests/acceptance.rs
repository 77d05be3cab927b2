//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails. Arguments select criteria by name
//! (`c1` .. `c8`); no arguments runs all of them.

mod common;

use std::time::Instant;

use calnav::belief::{Belief, CellState, Disc, GridSpec};
use calnav::cli::aggregate_csv;
use calnav::conformal::{beta_inv_cdf, calibrate, CalibrationConfig, ScoreSample};
use calnav::geometry::{contains, default_bracket, minimal_inflation, Aabb2, DEFAULT_INFLATION_TOL};
use calnav::loss::{pair_loss, LossWeights};
use calnav::perception::{
    apply_calibration, environment_misdetected, misdetection_cost, score_environment, NoiseConfig, Pose, ScoringOptions,
    SensorConfig, SyntheticDetector,
};
use calnav::planner::Roadmap;
use calnav::sim::{
    aggregate, calibrate_suite, evaluate_suite, generate_environment, generate_suite, run_experiment, static_miss_rates,
    EnvConfig, Environment, ExperimentConfig, Layout, Method,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};

use common::{grid_contains, grid_min_inflation, lattice_instance, MM};

// criterion 1
const C1_N: usize = 200;
const C1_TEST: usize = 500;
const C1_RESAMPLES: usize = 100;
const C1_EPSILON: f64 = 0.15;
const C1_DELTA: f64 = 0.1;
const C1_MAX_BAD_FRACTION: f64 = 0.19;
// criterion 2
const C2_EPISODES: usize = 200;
const C2_EPSILON: f64 = 0.15;
const C2_MAX_COLLISION: f64 = 0.15;
// criterion 3
const C3_TEST: usize = 500;
const C3_SIGMAS: f64 = 2.0;
// criterion 4
const C4_INSTANCES: usize = 1000;
// criterion 5
const C5_N: usize = 50;
const C5_EPSILON: f64 = 0.2;
const C5_RESAMPLES: usize = 100_000;
const C5_MIN_COVERAGE: f64 = 0.79;
const C5_ROUND_TRIP_TOL: f64 = 1e-8;
const C5_CLOSED_FORM_TOL: f64 = 1e-10;
// criterion 6
const C6_EPISODES: usize = 1000;
const C6_STEPS: usize = 25;
// criterion 7
const C7_INSTANCES: usize = 10_000;
const C7_EXAMPLE_TOL: f64 = 1e-12;
const C7_INVARIANCE_TOL: f64 = 1e-10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn samples(scores: &[f64]) -> Vec<ScoreSample> {
    scores
        .iter()
        .enumerate()
        .map(|(i, &score)| ScoreSample {
            env_id: i as u64,
            score,
        })
        .collect()
}

/// Calibrate on fresh environments, then count test environments that some
/// sample state misdetects at the calibrated margin.
fn c1_coverage() -> Outcome {
    let config = ExperimentConfig::default();
    let states = config.samples().unwrap();
    let opts = ScoringOptions::for_room(&config.env.room());
    let noise = config.detector_noise();
    let cal = CalibrationConfig::dataset_conditional(C1_EPSILON, C1_DELTA);
    let block = (C1_N + C1_TEST) as u64;
    let env = |id: u64| generate_environment(10_000_000 + id, config.master_seed, &config.env).unwrap();

    let rates: Vec<(f64, f64)> = (0..C1_RESAMPLES as u64)
        .into_par_iter()
        .map(|r| {
            let base = r * block;
            let scores: Vec<ScoreSample> = (0..C1_N as u64)
                .map(|k| {
                    let e = env(base + k);
                    let poses = states.poses_outside(&e.obstacles);
                    let mut det = SyntheticDetector::new(&e, config.sensor, noise.clone());
                    score_environment(&e, &mut det, &config.sensor, &poses, &opts).unwrap()
                })
                .collect();
            let q = calibrate(&scores, &cal).unwrap().q_hat;
            let missed = (C1_N as u64..block)
                .filter(|&k| {
                    let e = env(base + k);
                    let poses = states.poses_outside(&e.obstacles);
                    let mut det = SyntheticDetector::new(&e, config.sensor, noise.clone());
                    environment_misdetected(&e, &mut det, &config.sensor, &poses, &[q]).unwrap()[0]
                })
                .count();
            (q, missed as f64 / C1_TEST as f64)
        })
        .collect();
    let bad = rates.iter().filter(|r| r.1 > C1_EPSILON).count() as f64 / C1_RESAMPLES as f64;
    let mean_miss = rates.iter().map(|r| r.1).sum::<f64>() / rates.len() as f64;
    let finite: Vec<f64> = rates.iter().map(|r| r.0).filter(|q| q.is_finite()).collect();
    let mean_q = finite.iter().sum::<f64>() / finite.len().max(1) as f64;
    outcome(
        bad <= C1_MAX_BAD_FRACTION,
        format!(
            "{C1_RESAMPLES} resamples of N={C1_N}: fraction with test miss rate > {C1_EPSILON} is {bad:.3} (limit {C1_MAX_BAD_FRACTION}); mean miss rate {mean_miss:.4}, mean finite q_hat {mean_q:.3} m ({} finite)",
            finite.len()
        ),
    )
}

/// Shared calibration for criteria 2 and 3: default suite, every epsilon.
fn default_calibration() -> (ExperimentConfig, calnav::sim::CalibrationReport) {
    let config = ExperimentConfig {
        methods: vec![Method::Pwc, Method::CpAvg, Method::Exact],
        ..ExperimentConfig::default()
    };
    let suite = generate_suite(&config).unwrap();
    let report = calibrate_suite(&config, &suite.calibration, &config.samples().unwrap(), None).unwrap();
    (config, report)
}

fn c2_closed_loop(config: &ExperimentConfig, report: &calnav::sim::CalibrationReport) -> Outcome {
    let config = ExperimentConfig {
        n_test: C2_EPISODES,
        epsilons: vec![C2_EPSILON],
        methods: vec![Method::Pwc, Method::Exact],
        ..config.clone()
    };
    let suite = generate_suite(&config).unwrap();
    let map = Roadmap::new(&config.samples().unwrap(), &config.planner);
    let records = evaluate_suite(&config, &suite.test, &map, report).unwrap();
    let rows = aggregate(&records);
    let pwc = rows.iter().find(|r| r.method == Method::Pwc).unwrap();
    let exact = rows.iter().find(|r| r.method == Method::Exact).unwrap();
    outcome(
        pwc.collision_rate <= C2_MAX_COLLISION && exact.collision_rate == 0.0,
        format!(
            "{C2_EPISODES} episodes: PwC at eps={C2_EPSILON} (q_hat {:.3} m) collision {:.3} (limit {C2_MAX_COLLISION}), misdetection {:.3}, goal {:.3}; exact perception collision {:.3} (must be 0), goal {:.3}",
            report.q_hat(Method::Pwc, Some(C2_EPSILON)).unwrap(),
            pwc.collision_rate,
            pwc.misdetection_rate,
            pwc.goal_rate,
            exact.collision_rate,
            exact.goal_rate
        ),
    )
}

fn c3_miss_rates(config: &ExperimentConfig, report: &calnav::sim::CalibrationReport) -> Outcome {
    let config = ExperimentConfig {
        n_test: C3_TEST,
        ..config.clone()
    };
    let suite = generate_suite(&config).unwrap();
    let rows = static_miss_rates(&config, &suite.test, &config.samples().unwrap(), report).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for &eps in &config.epsilons {
        let rate = |m: Method| rows.iter().find(|r| r.method == m && r.epsilon == Some(eps)).unwrap().miss_rate;
        let (pwc, avg) = (rate(Method::Pwc), rate(Method::CpAvg));
        let limit = eps + C3_SIGMAS * (eps * (1.0 - eps) / C3_TEST as f64).sqrt();
        pass &= pwc <= limit && avg > pwc;
        parts.push(format!("eps {eps}: pwc {pwc:.3} (<= {limit:.3}) cp_avg {avg:.3}"));
    }
    outcome(pass, format!("{C3_TEST} test environments; {}", parts.join("; ")))
}

fn c4_geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(401);
    let bracket = default_bracket(0.4 * std::f64::consts::SQRT_2);
    let mut contain_bad = 0;
    let mut positives = 0;
    for _ in 0..C4_INSTANCES {
        let (a, b) = lattice_instance(&mut rng);
        let want = grid_contains(&a, &b);
        positives += usize::from(want);
        contain_bad += usize::from(contains(&a, &b) != want);
    }
    let mut inflate_bad = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..C4_INSTANCES {
        let (a, b) = lattice_instance(&mut rng);
        let q = minimal_inflation(&a, &b, bracket, DEFAULT_INFLATION_TOL).unwrap();
        let err = (q - grid_min_inflation(&a, &b)).abs();
        worst = worst.max(err);
        inflate_bad += usize::from(err > DEFAULT_INFLATION_TOL + MM);
    }
    outcome(
        contain_bad == 0 && inflate_bad == 0,
        format!(
            "contains: {contain_bad} disagreements in {C4_INSTANCES} ({positives} contained); minimal_inflation: {inflate_bad} outside tol + 1 mm in {C4_INSTANCES} (max error {worst:.2e} m)"
        ),
    )
}

fn c5_conformal() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let cfg = CalibrationConfig::marginal(C5_EPSILON);
    let mut covered = 0;
    let mut buf = vec![0.0; C5_N];
    for _ in 0..C5_RESAMPLES {
        buf.iter_mut().for_each(|s| *s = rng.random_range(0.0..1.0));
        let q = calibrate(&samples(&buf), &cfg).unwrap().q_hat;
        covered += usize::from(rng.random_range(0.0..1.0) <= q);
    }
    let coverage = covered as f64 / C5_RESAMPLES as f64;

    let mut worst_trip: f64 = 0.0;
    for _ in 0..1000 {
        let a = 10f64.powf(rng.random_range(-0.3..2.7));
        let b = 10f64.powf(rng.random_range(-0.3..2.7));
        let p = rng.random_range(1e-4..1.0 - 1e-4);
        let x = beta_inv_cdf(a, b, p).unwrap();
        worst_trip = worst_trip.max((Beta::new(a, b).unwrap().cdf(x) - p).abs());
    }
    let closed = [
        (beta_inv_cdf(1.0, 1.0, 0.37).unwrap() - 0.37).abs(),
        (beta_inv_cdf(2.0, 1.0, 0.25).unwrap() - 0.5).abs(),
        (beta_inv_cdf(5.0, 5.0, 0.5).unwrap() - 0.5).abs(),
    ];
    let worst_closed = closed.iter().copied().fold(0.0, f64::max);
    outcome(
        coverage >= C5_MIN_COVERAGE && worst_trip <= C5_ROUND_TRIP_TOL && worst_closed <= C5_CLOSED_FORM_TOL,
        format!(
            "marginal coverage {coverage:.4} over {C5_RESAMPLES} resamples (min {C5_MIN_COVERAGE}); beta round trip max error {worst_trip:.1e} (tol {C5_ROUND_TRIP_TOL:.0e}); closed forms max error {worst_closed:.1e} (tol {C5_CLOSED_FORM_TOL:.0e})"
        ),
    )
}

fn clear_of(env: &Environment, p: [f64; 2], r: f64) -> bool {
    let room = env.room;
    (0..2).all(|k| p[k] - r >= room.min[k] && p[k] + r <= room.max[k])
        && env.obstacles.boxes.iter().all(|b| b.distance_to_point(&p) >= r)
}

#[derive(Default)]
struct FilterTally {
    monotone: usize,
    overlap: usize,
    unsound: usize,
    clean_episodes: usize,
    costly_episodes: usize,
}

/// Random walk through one environment with a randomized sensor, detector
/// and margin, checking the filter after every observation.
fn c6_episode(seed: u64) -> FilterTally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let env_config = EnvConfig {
        layout: if rng.random_bool(0.5) { Layout::Scatter } else { Layout::Blocking },
        ..EnvConfig::default()
    };
    let env = generate_environment(seed, 601, &env_config).unwrap();
    let sensor = SensorConfig {
        fov_deg: [70.0, 120.0, 360.0][rng.random_range(0..3)],
        range_min: rng.random_range(0.0..1.0),
        range_max: rng.random_range(2.5..5.0),
    };
    let noise = NoiseConfig {
        seed: rng.random(),
        miss_prob_at_max_range: [0.0, 0.05, 0.3][rng.random_range(0..3)],
        center_jitter_sigma: rng.random_range(0.0..0.15),
        ..NoiseConfig::default()
    };
    let q = rng.random_range(-0.1..0.5);
    let mut det = SyntheticDetector::new(&env, sensor, noise);
    let grid = GridSpec::for_room(&env.room, 0.05).unwrap();
    let mut belief = Belief::with_known_free(
        grid,
        Disc {
            center: env.start,
            radius: env.clearance,
        },
    );
    let turn = Normal::new(0.0, 0.6).unwrap();
    let mut pose = Pose {
        position: env.start,
        heading: env.start_heading,
    };
    let mut tally = FilterTally::default();
    let mut cost = 0;
    for _ in 0..C6_STEPS {
        let before = belief.states().to_vec();
        let calibrated = apply_calibration(&det.detect(&pose), q, &env.room);
        cost += misdetection_cost(&env, &pose, &sensor, &calibrated) as usize;
        belief.observe(&pose, &sensor, &calibrated).unwrap();
        let after = belief.states();
        for (&b, &a) in before.iter().zip(after) {
            let shrink_ok = a != CellState::Occupied || b == CellState::Occupied;
            let grow_ok = b != CellState::Free || a == CellState::Free;
            tally.monotone += usize::from(!(shrink_ok && grow_ok));
        }
        // a cell holds a single state, so free and occupied are disjoint by
        // construction; check the masks anyway
        let (free, occ) = (belief.mask(CellState::Free), belief.mask(CellState::Occupied));
        tally.overlap += free.iter().zip(&occ).filter(|(f, o)| **f && **o).count();
        if cost == 0 && belief.free_overlaps(&env.obstacles) {
            tally.unsound += 1;
        }

        let heading = pose.heading + turn.sample(&mut rng);
        let next = [pose.position[0] + 0.25 * heading.cos(), pose.position[1] + 0.25 * heading.sin()];
        pose = if clear_of(&env, next, 0.35) {
            Pose { position: next, heading }
        } else {
            Pose {
                position: pose.position,
                heading,
            }
        };
    }
    if cost == 0 {
        tally.clean_episodes += 1;
    } else {
        tally.costly_episodes += 1;
    }
    tally
}

fn c6_filter() -> Outcome {
    let tallies: Vec<FilterTally> = (0..C6_EPISODES as u64).into_par_iter().map(c6_episode).collect();
    let t = tallies.into_iter().fold(FilterTally::default(), |a, b| FilterTally {
        monotone: a.monotone + b.monotone,
        overlap: a.overlap + b.overlap,
        unsound: a.unsound + b.unsound,
        clean_episodes: a.clean_episodes + b.clean_episodes,
        costly_episodes: a.costly_episodes + b.costly_episodes,
    });
    outcome(
        t.monotone == 0 && t.overlap == 0 && t.unsound == 0 && t.clean_episodes > 0,
        format!(
            "{C6_EPISODES} episodes x {C6_STEPS} steps: {} monotonicity violations, {} free/occupied overlaps, {} free-on-obstacle steps while cost stayed 0 ({} episodes with zero cost, {} with some cost)",
            t.monotone, t.overlap, t.unsound, t.clean_episodes, t.costly_episodes
        ),
    )
}

fn c7_loss() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(701);
    let random_box = |rng: &mut ChaCha8Rng| {
        let c = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        Aabb2::from_center(c, [rng.random_range(0.01..2.0), rng.random_range(0.01..2.0)]).unwrap()
    };
    let mut out_of_range = 0;
    let mut worst_shift: f64 = 0.0;
    for _ in 0..C7_INSTANCES {
        let (a, b) = (random_box(&mut rng), random_box(&mut rng));
        let raw: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..1.0));
        let s: f64 = raw.iter().sum();
        let w = LossWeights::new(raw[0] / s, raw[1] / s, 1.0 - raw[0] / s - raw[1] / s).unwrap();
        let l = pair_loss(&a, &b, &w).unwrap();
        out_of_range += usize::from(!(0.0..=1.0).contains(&l));
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let offset = [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)];
        let moved = pair_loss(&a.similarity(scale, offset), &b.similarity(scale, offset), &w).unwrap();
        worst_shift = worst_shift.max((moved - l).abs());
    }
    let unit = Aabb2::new([0.0, 0.0], [1.0, 1.0]).unwrap();
    let right = Aabb2::new([2.0, 0.0], [3.0, 1.0]).unwrap();
    let example = (pair_loss(&unit, &right, &LossWeights::default()).unwrap() - 7.0 / 9.0).abs();
    outcome(
        out_of_range == 0 && example <= C7_EXAMPLE_TOL && worst_shift <= C7_INVARIANCE_TOL,
        format!(
            "{out_of_range} of {C7_INSTANCES} losses outside [0, 1]; disjoint example off 7/9 by {example:.1e}; similarity invariance max change {worst_shift:.1e} (tol {C7_INVARIANCE_TOL:.0e})"
        ),
    )
}

fn c8_determinism() -> Outcome {
    let run = |workers: usize| {
        let config = ExperimentConfig {
            workers,
            ..ExperimentConfig::default()
        };
        aggregate_csv(&run_experiment(&config).unwrap().aggregate).unwrap()
    };
    let (one, eight) = (run(1), run(8));
    outcome(
        one == eight,
        format!(
            "default experiment with 1 and 8 workers: aggregate CSVs of {} and {} bytes, {}",
            one.len(),
            eight.len(),
            if one == eight { "identical" } else { "different" }
        ),
    )
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |name: &str| args.is_empty() || args.iter().any(|a| a == name);
    let mut failed = 0;
    let mut report = |name: &str, label: &str, f: &mut dyn FnMut() -> Outcome| {
        if !wanted(name) {
            return;
        }
        let t = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("{verdict} {name} {label}: {} [{:.1}s]", o.detail, t.elapsed().as_secs_f64());
    };

    report("c1", "coverage", &mut c1_coverage);
    let shared = (wanted("c2") || wanted("c3")).then(default_calibration);
    if let Some((config, cal)) = &shared {
        report("c2", "closed-loop safety", &mut || c2_closed_loop(config, cal));
        report("c3", "miss rate versus epsilon", &mut || c3_miss_rates(config, cal));
    }
    report("c4", "geometry oracles", &mut c4_geometry);
    report("c5", "conformal correctness", &mut c5_conformal);
    report("c6", "filter invariants", &mut c6_filter);
    report("c7", "loss properties", &mut c7_loss);
    report("c8", "determinism", &mut c8_determinism);
    if failed > 0 {
        std::process::exit(1);
    }
}
