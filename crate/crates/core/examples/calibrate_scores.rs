//! Calibrating a margin from nonconformity scores in both modes.

use calnav::conformal::{calibrate, dataset_conditional_level, CalibrationConfig, ScoreSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> calnav::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let scores: Vec<ScoreSample> = (0..400)
        .map(|i| ScoreSample {
            env_id: i,
            score: rng.random_range(0.1..0.5_f64).powi(2) * 3.0,
        })
        .collect();

    for eps in [0.05, 0.15, 0.3] {
        let marginal = calibrate(&scores, &CalibrationConfig::marginal(eps))?;
        let dc = calibrate(&scores, &CalibrationConfig::dataset_conditional(eps, 0.01))?;
        println!(
            "eps {eps:.2}: marginal q {:.4}, dataset-conditional q {:.4} (v = {}, eps_hat = {:.4})",
            marginal.q_hat, dc.q_hat, dc.v, dc.epsilon_hat
        );
    }
    let lvl = dataset_conditional_level(400, 0.15, 0.01)?;
    println!("n=400 eps=0.15 delta=0.01 -> {lvl:?}");
    Ok(())
}
