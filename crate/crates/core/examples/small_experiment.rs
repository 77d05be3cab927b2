//! End-to-end experiment at reduced size, printed as the aggregate CSV.

use calnav::cli::aggregate_csv;
use calnav::sim::{run_experiment, ExperimentConfig};

fn main() -> calnav::Result<()> {
    let config = ExperimentConfig {
        n_calibration: 100,
        n_test: 20,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&config)?;
    for e in &report.calibration.entries {
        if let Some(eps) = e.epsilon {
            println!("{} eps {eps}: q_hat {:.3}", e.method, e.q_hat);
        }
    }
    print!("{}", String::from_utf8_lossy(&aggregate_csv(&report.aggregate)?));
    Ok(())
}
