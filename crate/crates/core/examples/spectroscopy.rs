//! Weak-drive spectroscopy of the f-LRU transition: |f⟩ population after a
//! 220 ns pulse against drive frequency, with the dips located.

use transmon_lru::dynamics::{find_dips, spectroscopy_sweep, PulseParams};
use transmon_lru::model::{dressed_transitions, Preset};

fn main() -> transmon_lru::Result<()> {
    let params = Preset::A.params();
    let (lo, hi) = dressed_transitions(&params)?.f_pair();
    let grid: Vec<f64> = (0..41).map(|k| lo - 0.02 + 0.001 * k as f64).collect();
    let points = spectroscopy_sweep(&params, &PulseParams::new(0.4, lo), &grid)?;

    for p in &points {
        let bar = "#".repeat(((1.0 - p.p_f) * 400.0) as usize);
        println!("{:.4}  {:.4}  {bar}", p.frequency, p.p_f);
    }
    println!("\nexact dressed gaps: {lo:.4}, {hi:.4} GHz");
    for d in find_dips(&points, 0.01)? {
        println!(
            "dip at {:.4} GHz, depth {:.3}, FWHM {:.1} MHz",
            d.frequency,
            d.depth,
            d.width * 1e3
        );
    }
    Ok(())
}
