//! Leakage build-up over repeated rounds with injected leakage, with and
//! without an LRU every round.

use transmon_lru::calibration::{
    fit_seepage, repeated_lru_rounds, rotation_for_leakage_rate, steady_state_leakage, LeakageRoundModel,
};

fn main() -> transmon_lru::Result<()> {
    let l1 = 0.02;
    let s = fit_seepage(l1, 0.16)?;
    let model = LeakageRoundModel::new(l1, s)?.with_lru(0.99)?;
    println!("L1 = {l1}, injection angle {:.4} rad, fitted seepage s = {s:.4}", rotation_for_leakage_rate(l1)?);

    let off = repeated_lru_rounds(&model, 30, false);
    let on = repeated_lru_rounds(&model, 30, true);
    println!("{:>5} {:>9} {:>9}", "round", "no LRU", "LRU");
    for k in (0..30).step_by(3) {
        println!("{:>5} {:>9.4} {:>9.4}", k + 1, off[k], on[k]);
    }
    println!(
        "steady state: {:.4} without, {:.4} with LRU",
        steady_state_leakage(&model, false)?,
        steady_state_leakage(&model, true)?
    );
    Ok(())
}
