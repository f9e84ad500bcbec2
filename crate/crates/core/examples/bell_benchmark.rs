//! Parity-check benchmarks: parity assignment for the four computational
//! inputs and Bell-state preparation with one or two checks.

use transmon_lru::paritycheck::{bell_state_experiment, parity_assignment_experiment, NoiseConfig};

fn main() -> transmon_lru::Result<()> {
    for (name, noise) in [("noiseless", NoiseConfig::noiseless()), ("device", NoiseConfig::device())] {
        println!("{name}:");
        let pa = parity_assignment_experiment(&noise)?;
        for i in &pa.inputs {
            println!("  |{}>  <m> = {:+.4}  fidelity {:.4}", i.input, i.mean_outcome, i.fidelity);
        }
        println!("  parity assignment fidelity {:.4}", pa.mean_fidelity);
        for n in [1, 2] {
            let b = bell_state_experiment(&noise, n)?;
            let branches: Vec<String> = b
                .branches
                .iter()
                .map(|br| format!("m1={:+} p={:.3} F={:.4}", br.m1, br.probability, br.fidelity))
                .collect();
            println!("  {n} check(s): F = {:.4}  [{}]", b.mean_fidelity, branches.join(", "));
            if let Some(p) = b.p_m2_plus {
                println!("  P(second outcome repeats) = {p:.4}");
            }
        }
    }
    Ok(())
}
