//! A single closed-loop episode at a few margins, from raw detections to
//! fully conservative.

use calnav::planner::Roadmap;
use calnav::sim::{generate_environment, run_episode, ExperimentConfig, Method};

fn main() -> calnav::Result<()> {
    let config = ExperimentConfig::default();
    let env = generate_environment(42, config.master_seed, &config.env)?;
    let map = Roadmap::new(&config.samples()?, &config.planner);
    let episode = config.episode_config(Method::Pwc);
    for q in [0.0, 0.2, 0.45, f64::INFINITY] {
        let (m, _) = run_episode(&env, q, &episode, &map)?;
        println!(
            "q {q:>5}: goal {} collision {} misdetection {} path {:.2} m in {:.1} s",
            m.goal_reached,
            m.collision,
            m.misdetection,
            m.path_length,
            m.wall_time_steps as f64 * episode.dynamics.dt()
        );
    }
    Ok(())
}
