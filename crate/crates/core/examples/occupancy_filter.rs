//! Occupancy filter along a short drive, printed as a character map.

use calnav::belief::{Belief, CellState, Disc, GridSpec};
use calnav::perception::{apply_calibration, Pose, SyntheticDetector};
use calnav::sim::{generate_environment, ExperimentConfig};

fn main() -> calnav::Result<()> {
    let config = ExperimentConfig::default();
    let env = generate_environment(3, config.master_seed, &config.env)?;
    let grid = GridSpec::for_room(&env.room, 0.1)?;
    let mut belief = Belief::with_known_free(
        grid,
        Disc {
            center: env.start,
            radius: env.clearance,
        },
    );
    let mut det = SyntheticDetector::new(&env, config.sensor, config.detector_noise());
    let q = 0.3;
    for k in 0..8 {
        let heading = env.start_heading + 0.4 * (k as f64 - 3.5);
        let pose = Pose {
            position: env.start,
            heading,
        };
        let calibrated = apply_calibration(&det.detect(&pose), q, &env.room);
        let s = belief.observe(&pose, &config.sensor, &calibrated)?;
        println!("look {heading:+.2} rad: sensed {}, cleared {}, newly free {}", s.sensed, s.cleared, s.newly_free);
    }
    println!("free cells overlap an obstacle: {}", belief.free_overlaps(&env.obstacles));
    for iy in (0..grid.ny).rev() {
        let row: String = (0..grid.nx)
            .map(|ix| {
                let i = grid.index(ix, iy);
                let c = grid.cell_center(i);
                if env.obstacles.contains_point(&c) {
                    '#'
                } else {
                    match belief.state(i) {
                        CellState::Free => '.',
                        CellState::Occupied => 'o',
                        CellState::Unknown => ' ',
                    }
                }
            })
            .collect();
        println!("{row}");
    }
    Ok(())
}
