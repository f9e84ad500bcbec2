//! Removal fraction over pulse duration and amplitude, with the 80/90/97%
//! contours. Pass a grid size (default 8) as the first argument.

use transmon_lru::calibration::{calibration_map_2d, Axis, AxisGrid, CONTOUR_LEVELS};
use transmon_lru::dynamics::{EvolveOptions, OpenSystem, PulseParams};
use transmon_lru::model::{dressed_transitions, Preset};

fn main() -> transmon_lru::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let params = Preset::A.params();
    let system = OpenSystem::new(&params)?;
    let freq = dressed_transitions(&params)?.f_pair().0 - 0.03;

    let durations = AxisGrid::linspace(Axis::Duration, 60.0, 300.0, n);
    let amplitudes = AxisGrid::linspace(Axis::Amplitude, 0.25, 5.0, n);
    let map = calibration_map_2d(
        &system,
        &PulseParams::new(1.0, freq),
        &durations,
        &amplitudes,
        &EvolveOptions::default(),
    )?;

    print!("{:>8}", "t \\ A");
    for a in &amplitudes.values {
        print!("{a:>7.2}");
    }
    println!();
    for (t, row) in durations.values.iter().zip(&map.values) {
        print!("{t:>8.1}");
        for v in row {
            print!("{v:>7.3}");
        }
        println!();
    }
    let (i, j, best) = map.argmax();
    println!(
        "\nbest R = {best:.4} at t_p = {:.0} ns, A = {:.2} rad/ns",
        durations.values[i], amplitudes.values[j]
    );
    for c in map.contours(&CONTOUR_LEVELS) {
        println!("contour {:.2}: {} polyline(s)", c.level, c.polylines.len());
    }
    Ok(())
}
