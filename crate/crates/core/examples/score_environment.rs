//! Worst-case nonconformity score of one environment under the synthetic
//! detector, and the per-state scores behind it.

use calnav::perception::{score_environment, state_scores, ScoringOptions, SyntheticDetector};
use calnav::sim::{generate_environment, ExperimentConfig};

fn main() -> calnav::Result<()> {
    let config = ExperimentConfig::default();
    let samples = config.samples()?;
    let opts = ScoringOptions::for_room(&config.env.room());
    for id in 0..5 {
        let env = generate_environment(id, config.master_seed, &config.env)?;
        let states = samples.poses_outside(&env.obstacles);
        let mut det = SyntheticDetector::new(&env, config.sensor, config.detector_noise());
        let worst = score_environment(&env, &mut det, &config.sensor, &states, &opts)?;
        let mut det = SyntheticDetector::new(&env, config.sensor, config.detector_noise());
        let per_state = state_scores(&env, &mut det, &config.sensor, &states, &opts)?;
        let mean = per_state.iter().map(|s| s.1.min(1e3)).sum::<f64>() / per_state.len().max(1) as f64;
        println!(
            "env {id}: {} obstacles, {} states see something, worst score {:.3}, mean {:.3}",
            env.obstacles.len(),
            per_state.len(),
            worst.score,
            mean
        );
    }
    Ok(())
}
