//! Multi-state IQ readout: train linear classifiers for 2, 3 and 4 states,
//! then correct a measured population with the assignment matrix.

use transmon_lru::readout::{
    assignment_matrix_from_shots, correct_populations, fit_classifier, simulate_calibration_shots,
    simulate_iq_shots, ReadoutModel,
};

fn main() -> transmon_lru::Result<()> {
    let preset = ReadoutModel::fitted_preset();
    for n in 2..=4 {
        let model = preset.restricted(n)?;
        let train = simulate_calibration_shots(&model, 20_000, 1)?;
        let (classifier, _) = fit_classifier(&train, &model.states)?;
        let test = simulate_calibration_shots(&model, 20_000, 2)?;
        let m = assignment_matrix_from_shots(&classifier, &test)?;
        println!("{n} states: mean assignment error {:.2}%", 100.0 * m.mean_error());

        if n == 3 {
            let truth = [0.90, 0.07, 0.03];
            let shots = simulate_iq_shots(&model, &truth, 50_000, 3)?;
            let mut raw = vec![0.0; 3];
            for s in &shots {
                raw[classifier.classify(s.i, s.q)] += 1.0 / shots.len() as f64;
            }
            let c = correct_populations(&raw, &m)?;
            println!("  true {truth:?}\n  raw  {raw:.4?}\n  corr {:.4?}", c.values);
        }
    }
    Ok(())
}
