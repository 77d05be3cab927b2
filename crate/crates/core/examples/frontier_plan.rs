//! One planning query after the first observation: the goal is out of
//! sight, so the planner heads for a frontier.

use calnav::belief::{Belief, Disc, GridSpec};
use calnav::perception::{apply_calibration, Pose, SyntheticDetector};
use calnav::planner::{Roadmap, Searcher};
use calnav::sim::{generate_environment, ExperimentConfig};

fn main() -> calnav::Result<()> {
    let config = ExperimentConfig::default();
    let env = generate_environment(11, config.master_seed, &config.env)?;
    let map = Roadmap::new(&config.samples()?, &config.planner);
    let mut belief = Belief::with_known_free(
        GridSpec::for_room(&env.room, config.grid_cell)?,
        Disc {
            center: env.start,
            radius: env.clearance,
        },
    );
    let pose = Pose {
        position: env.start,
        heading: env.start_heading,
    };
    let mut det = SyntheticDetector::new(&env, config.sensor, config.detector_noise());
    belief.observe(&pose, &config.sensor, &apply_calibration(&det.detect(&pose), 0.4, &env.room))?;

    let mut searcher = Searcher::new(&map, &config.planner);
    let plan = searcher.plan(&belief, env.start, env.goal, env.goal_radius, None, &[])?;
    println!(
        "{:?} target {:.2?} from {:.2?} toward goal {:.2?}: {} waypoints, {:.2} m",
        plan.kind,
        plan.target,
        env.start,
        env.goal,
        plan.waypoints.len(),
        plan.length
    );
    for w in &plan.waypoints {
        println!("  {:.3} {:.3}", w[0], w[1]);
    }
    Ok(())
}
