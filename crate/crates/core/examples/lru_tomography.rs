//! Process tomography of the f-LRU on the qubit subspace: PTM, virtual-Z
//! correction and the Stark phase as a function of pulse duration.

use transmon_lru::dynamics::{EvolveOptions, OpenSystem, PulseParams};
use transmon_lru::model::{dressed_transitions, Preset};
use transmon_lru::tomography::{characterize_lru, fit_ac_stark, stark_phases};

fn main() -> transmon_lru::Result<()> {
    let params = Preset::A.params();
    let system = OpenSystem::new(&params)?;
    let pulse = PulseParams::new(5.0, dressed_transitions(&params)?.f_pair().0 - 0.03);
    let opts = EvolveOptions::default();

    let ch = characterize_lru(&system, &[pulse], &opts)?;
    println!("PTM (raw):{}", ch.process.ptm.r);
    println!(
        "Z angle {:.4} rad (spread {:.1e}), F_avg {:.4} raw / {:.4} corrected",
        ch.z_fit.angle, ch.z_fit.angle_spread, ch.fidelity_uncorrected, ch.fidelity_corrected
    );

    // Sampled finely enough that the phase moves by less than π per step.
    let durations: Vec<f64> = (0..25).map(|k| 120.0 + 5.0 * k as f64).collect();
    let phases = stark_phases(&system, &[pulse], &durations, &opts)?;
    let fit = fit_ac_stark(&durations, &phases)?;
    for (t, p) in durations.iter().zip(&phases).step_by(4) {
        println!("t_p = {t:>5.0} ns  phase = {p:>8.4} rad");
    }
    println!("Stark shift {:.0} kHz, r^2 = {:.6}", fit.shift, fit.r_squared);
    Ok(())
}
