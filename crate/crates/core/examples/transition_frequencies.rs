//! Analytic LRU drive frequencies against exact dressed gaps for the three
//! device transmons.

use transmon_lru::model::{
    dressed_resonator_modes, dressed_transitions, f_transition_frequency, h_transition_frequency, Preset,
};

fn main() -> transmon_lru::Result<()> {
    println!("{:<4} {:>9} {:>9} {:>19} {:>9}", "", "f (est)", "f (meas)", "f exact pair", "h (est)");
    for preset in Preset::ALL {
        let p = preset.params();
        let (lo, hi) = dressed_transitions(&p)?.f_pair();
        println!(
            "{:<4} {:>9.4} {:>9.3} {:>9.4} {:>9.4} {:>9.4}",
            preset.name(),
            f_transition_frequency(&p),
            preset.measured_f_drive(),
            lo,
            hi,
            h_transition_frequency(&p)?,
        );
    }

    let p = Preset::A.params();
    let (minus, plus) = dressed_resonator_modes(&p);
    println!("\nA resonator modes: {minus:.4} / {plus:.4} GHz (split {:.1} MHz)", (plus - minus) * 1e3);
    Ok(())
}
