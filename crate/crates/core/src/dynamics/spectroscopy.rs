use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::lindblad::{EvolveOptions, OpenSystem};
use crate::dynamics::pulse::PulseParams;
use crate::dynamics::simulate_lru_pulse_with;
use crate::error::{Error, Result};
use crate::model::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectroscopyPoint {
    /// Drive frequency (GHz).
    pub frequency: f64,
    /// Transmon |f⟩ population after the pulse.
    pub p_f: f64,
}

/// Final |f⟩ population versus drive frequency, starting from dressed |f00⟩.
pub fn spectroscopy_sweep(
    params: &SystemParams,
    base_pulse: &PulseParams,
    freq_grid: &[f64],
) -> Result<Vec<SpectroscopyPoint>> {
    let system = OpenSystem::new(params)?;
    spectroscopy_sweep_with(&system, base_pulse, freq_grid, &EvolveOptions::default())
}

pub fn spectroscopy_sweep_with(
    system: &OpenSystem,
    base_pulse: &PulseParams,
    freq_grid: &[f64],
    opts: &EvolveOptions,
) -> Result<Vec<SpectroscopyPoint>> {
    freq_grid
        .par_iter()
        .map(|&f| {
            let r = simulate_lru_pulse_with(system, &[base_pulse.with_frequency(f)], "f", opts)?;
            Ok(SpectroscopyPoint {
                frequency: f,
                p_f: r.final_population("f").expect("f marginal"),
            })
        })
        .collect()
}

/// A spectroscopy dip read off the sampled curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dip {
    /// Position of the minimum (GHz).
    pub frequency: f64,
    /// Fractional depth relative to the off-resonant baseline.
    pub depth: f64,
    /// Full width at half depth (GHz).
    pub width: f64,
}

/// Vertex of the parabola through three points.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curv = (d2 - d1) / (x[2] - x[0]);
    if curv <= 0.0 {
        return (x[1], y[1]);
    }
    // y = y1 + d·(t − x1) + curv·(t − x0)(t − x1) expanded around the vertex.
    let slope_at_x1 = d1 + curv * (x[1] - x[0]);
    let xv = (x[1] - slope_at_x1 / (2.0 * curv)).clamp(x[0], x[2]);
    let yv = y[1] + d1 * (xv - x[1]) + curv * (xv - x[0]) * (xv - x[1]);
    (xv, yv)
}

/// Locates the dips of a sweep.
///
/// Minima whose prominence is below `min_prominence` of the full range are
/// ignored. Positions are refined by a three-point parabola. The width is
/// taken from the half-depth crossings; a side whose crossing is blocked by
/// a neighbouring dip is replaced by the other side's half width.
pub fn find_dips(points: &[SpectroscopyPoint], min_prominence: f64) -> Result<Vec<Dip>> {
    if points.len() < 5 {
        return Err(Error::InsufficientData("spectroscopy needs at least 5 points".into()));
    }
    let f: Vec<f64> = points.iter().map(|p| p.frequency).collect();
    let y: Vec<f64> = points.iter().map(|p| p.p_f).collect();
    if f.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("frequency grid must be strictly increasing"));
    }
    let top = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bottom = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let range = top - bottom;
    if !(range > 0.0) {
        return Ok(vec![]);
    }
    let n = y.len();

    let mut dips = Vec::new();
    for i in 1..n - 1 {
        if !(y[i] < y[i - 1] && y[i] <= y[i + 1]) {
            continue;
        }
        let side_max = |range: &mut dyn Iterator<Item = usize>| {
            let mut m = y[i];
            for k in range {
                if y[k] < y[i] {
                    break;
                }
                m = m.max(y[k]);
            }
            m
        };
        let left = side_max(&mut (0..i).rev());
        let right = side_max(&mut (i + 1..n));
        if left.min(right) - y[i] < min_prominence * range {
            continue;
        }

        let (centre, y_min) = parabola_vertex([f[i - 1], f[i], f[i + 1]], [y[i - 1], y[i], y[i + 1]]);
        let half = y_min + 0.5 * (top - y_min);
        // Distance from the centre to the half-depth crossing, or None when
        // the curve turns down again first.
        let crossing = |dir: isize| -> Option<f64> {
            let mut k = i;
            loop {
                let next = k as isize + dir;
                if next < 0 || next >= n as isize {
                    return None;
                }
                let next = next as usize;
                if y[next] >= half {
                    let t = (half - y[k]) / (y[next] - y[k]);
                    return Some((f[k] + t * (f[next] - f[k]) - centre).abs());
                }
                if y[next] < y[k] {
                    return None;
                }
                k = next;
            }
        };
        let width = match (crossing(-1), crossing(1)) {
            (Some(l), Some(r)) => l + r,
            (Some(h), None) | (None, Some(h)) => 2.0 * h,
            (None, None) => f64::NAN,
        };
        dips.push(Dip {
            frequency: centre,
            depth: (top - y_min) / top,
            width,
        });
    }
    Ok(dips)
}
