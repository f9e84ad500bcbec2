//! One f-LRU pulse on the ancilla starting from |f00⟩, then simultaneous f-
//! and h-LRUs acting on |f00⟩ and |h00⟩.

use transmon_lru::dynamics::{simulate_lru_pulse_with, EvolveOptions, OpenSystem, PulseParams};
use transmon_lru::model::{dressed_transitions, Preset, SystemParams};

fn main() -> transmon_lru::Result<()> {
    let params = Preset::A.params();
    let system = OpenSystem::new(&params)?;
    let t = dressed_transitions(&params)?;
    let (f_lo, _) = t.f_pair();

    // Strong drives are Stark shifted below the bare resonance.
    let f_lru = PulseParams::new(5.0, f_lo - 0.03);
    let r = simulate_lru_pulse_with(&system, &[f_lru], "f", &EvolveOptions::sampled(20.0))?;
    println!("f-LRU at {:.4} GHz from |f00>", f_lru.frequency);
    println!("{:>7} {:>8} {:>8} {:>8}", "t (ns)", "P_g", "P_e", "P_f");
    let (g, e, f) = (r.series("g").unwrap(), r.series("e").unwrap(), r.series("f").unwrap());
    for (k, time) in r.times.iter().enumerate() {
        println!("{time:>7.1} {:>8.4} {:>8.4} {:>8.4}", g[k], e[k], f[k]);
    }

    // Under the strong f-drive |h⟩ needs the levels above it: six-level transmon.
    let six = OpenSystem::new(&SystemParams {
        n_transmon_levels: 6,
        ..params
    })?;
    let f_lru = PulseParams::new(5.0, 4.0575);
    let h_lru = PulseParams::new(2.0, 3.405);
    println!("\nf-LRU at {:.4} GHz with h-LRU at {:.4} GHz", f_lru.frequency, h_lru.frequency);
    for (drives, name) in [(vec![f_lru], "f only"), (vec![f_lru, h_lru], "f + h")] {
        for start in ["f", "h"] {
            let r = simulate_lru_pulse_with(&six, &drives, start, &EvolveOptions::default())?;
            let p: Vec<String> = ["g", "e", "f", "h"]
                .iter()
                .map(|l| format!("P_{l} = {:.4}", r.final_population(l).unwrap()))
                .collect();
            println!("  {name:<6} from |{start}00>: {}", p.join("  "));
        }
    }
    Ok(())
}
