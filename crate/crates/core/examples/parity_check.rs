//! Fifty rounds of the weight-2 parity check under device noise for the four
//! LRU settings (exact density-matrix model), and a Monte-Carlo spot check.

use transmon_lru::paritycheck::{run_parity_rounds, LruMode, NoiseConfig};

fn main() -> transmon_lru::Result<()> {
    let noise = NoiseConfig::device();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!(
        "{:<8} {:>9} {:>9} {:>8} {:>8} {:>8} {:>8}",
        "LRUs", "d(3..7)", "d(46..50)", "P_f D1", "P_f A", "P_h A", "P_f D2"
    );
    for mode in LruMode::ALL {
        let s = run_parity_rounds(&noise, 50, mode, 0, 0)?;
        let l = s.leakage[49];
        println!(
            "{:<8} {:>9.4} {:>9.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            mode.name(),
            mean(&s.defect_prob[2..7]),
            mean(&s.defect_prob[45..50]),
            l.d1_f,
            l.a_f,
            l.a_h,
            l.d2_f
        );
    }

    let mc = run_parity_rounds(&noise, 50, LruMode::None, 2000, 1)?;
    println!(
        "\n2000 trajectories, no LRU: d(46..50) = {:.4}, P_f D1 = {:.4}",
        mean(&mc.defect_prob[45..50]),
        mc.leakage[49].d1_f
    );
    Ok(())
}
