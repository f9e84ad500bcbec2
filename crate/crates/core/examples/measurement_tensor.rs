//! Recovering the measurement backaction tensor from back-to-back
//! measurements, then reading off assignment and QNDness.

use transmon_lru::paritycheck::default_ancilla_measurement;
use transmon_lru::readout::{fit_measurement_tensor, simulate_double_measurement, FitOptions};

fn main() -> transmon_lru::Result<()> {
    let truth = default_ancilla_measurement();
    let n = truth.levels();
    let data = (0..n)
        .map(|i| simulate_double_measurement(&truth, i, 1 << 15, 7 + i as u64))
        .collect::<transmon_lru::Result<Vec<_>>>()?;
    let fit = fit_measurement_tensor(&data, &FitOptions::default())?;

    let mut worst = 0.0f64;
    for i in 0..n {
        for m in 0..n {
            for j in 0..n {
                worst = worst.max((fit.tensor.get(i, m, j) - truth.get(i, m, j)).abs());
            }
        }
    }
    println!(
        "{} starts, residual {:.2e}, spread {:.1e}, max |error| {worst:.4}",
        fit.starts, fit.residual, fit.spread
    );
    let labels: Vec<String> = ["g", "e", "f", "h"].iter().map(|s| s.to_string()).collect();
    let d = fit.tensor.derived_matrices(&labels)?;
    println!("assignment M:{}", d.assignment.m);
    println!("QND Q:{}", d.qnd);
    println!("mean QNDness {:.4}, measurement-induced leakage {:.4}", d.mean_qndness, d.leakage_rate);
    Ok(())
}
