use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::contour::{extract_contours, Contour};
use crate::calibration::{removal_fraction, RemovalFraction};
use crate::dynamics::{evolve, evolve_durations, initial_state, EvolveOptions, OpenSystem, PulseParams};
use crate::error::{Error, Result};

/// Contour levels drawn on removal-fraction maps.
pub const CONTOUR_LEVELS: [f64; 3] = [0.80, 0.90, 0.97];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Drive frequency (GHz).
    Frequency,
    /// Drive amplitude (rad/ns).
    Amplitude,
    /// Pulse duration (ns).
    Duration,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Frequency => "frequency",
            Axis::Amplitude => "amplitude",
            Axis::Duration => "duration",
        }
    }

    fn apply(self, pulse: PulseParams, v: f64) -> PulseParams {
        match self {
            Axis::Frequency => pulse.with_frequency(v),
            Axis::Amplitude => pulse.with_amplitude(v),
            Axis::Duration => pulse.with_duration(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisGrid {
    pub axis: Axis,
    pub values: Vec<f64>,
}

impl AxisGrid {
    pub fn new(axis: Axis, values: Vec<f64>) -> Self {
        AxisGrid { axis, values }
    }

    /// `n` evenly spaced points from `start` to `stop` inclusive.
    pub fn linspace(axis: Axis, start: f64, stop: f64, n: usize) -> Self {
        let values = match n {
            0 => vec![],
            1 => vec![start],
            _ => (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
        };
        AxisGrid { axis, values }
    }
}

/// Removal fraction over a 2D grid of pulse parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationMap {
    pub axis1: AxisGrid,
    pub axis2: AxisGrid,
    /// `values[i][j]` at `(axis1[i], axis2[j])`.
    pub values: Vec<Vec<f64>>,
}

impl CalibrationMap {
    pub fn contours(&self, levels: &[f64]) -> Vec<Contour> {
        levels
            .iter()
            .map(|&l| extract_contours(&self.axis1.values, &self.axis2.values, &self.values, l))
            .collect()
    }

    /// Grid point with the largest value: (i, j, value).
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        best
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([self.axis1.axis.name(), self.axis2.axis.name(), "removal_fraction"])?;
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                wr.write_record([
                    crate::fmt_f64(self.axis1.values[i]),
                    crate::fmt_f64(self.axis2.values[j]),
                    crate::fmt_f64(*v),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Contour polylines as CSV rows `(level, polyline, point, x, y)`.
pub fn write_contours_csv<W: std::io::Write>(contours: &[Contour], axis1: Axis, axis2: Axis, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["level", "polyline", "point", axis1.name(), axis2.name()])?;
    for c in contours {
        for (p, line) in c.polylines.iter().enumerate() {
            for (k, (x, y)) in line.iter().enumerate() {
                wr.write_record([
                    crate::fmt_f64(c.level),
                    p.to_string(),
                    k.to_string(),
                    crate::fmt_f64(*x),
                    crate::fmt_f64(*y),
                ])?;
            }
        }
    }
    wr.flush()?;
    Ok(())
}

/// Removal fraction of one pulse acting on dressed |f00⟩.
pub fn pulse_removal(system: &OpenSystem, pulse: &PulseParams, opts: &EvolveOptions) -> Result<RemovalFraction> {
    let rho0 = initial_state(system, "f")?;
    let p0 = system.populations(&rho0.rho);
    let f_col = system.space().dim() + 2;
    let r = evolve(system, &[*pulse], &rho0, pulse.duration, opts)?;
    removal_fraction(p0[f_col], r.final_populations()[f_col])
}

/// Removal fraction of dressed |f00⟩ over a grid of pulse parameters.
pub fn calibration_map_2d(
    system: &OpenSystem,
    base_pulse: &PulseParams,
    axis1: &AxisGrid,
    axis2: &AxisGrid,
    opts: &EvolveOptions,
) -> Result<CalibrationMap> {
    if axis1.values.is_empty() || axis2.values.is_empty() {
        return Err(Error::param("calibration axes must be non-empty"));
    }
    if axis1.axis == axis2.axis {
        return Err(Error::param("calibration axes must differ"));
    }
    let rho0 = initial_state(system, "f")?;
    let f_col = system.space().dim() + 2;
    let p0 = system.populations(&rho0.rho)[f_col];

    let values = if axis2.axis == Axis::Duration || axis1.axis == Axis::Duration {
        let (outer, durations, transpose) = if axis2.axis == Axis::Duration {
            (axis1, &axis2.values, false)
        } else {
            (axis2, &axis1.values, true)
        };
        let rows: Vec<Vec<f64>> = outer
            .values
            .par_iter()
            .map(|&v| {
                let pulse = outer.axis.apply(*base_pulse, v);
                let res = evolve_durations(system, &[pulse], durations, &rho0, opts)?;
                res.iter()
                    .map(|r| Ok(removal_fraction(p0, r.final_populations()[f_col])?.value))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        if transpose {
            (0..durations.len()).map(|i| rows.iter().map(|r| r[i]).collect()).collect()
        } else {
            rows
        }
    } else {
        let points: Vec<(usize, usize)> = (0..axis1.values.len())
            .flat_map(|i| (0..axis2.values.len()).map(move |j| (i, j)))
            .collect();
        let flat: Vec<f64> = points
            .par_iter()
            .map(|&(i, j)| {
                let pulse = axis2.axis.apply(axis1.axis.apply(*base_pulse, axis1.values[i]), axis2.values[j]);
                Ok(pulse_removal(system, &pulse, opts)?.value)
            })
            .collect::<Result<_>>()?;
        flat.chunks(axis2.values.len()).map(|c| c.to_vec()).collect()
    };
    Ok(CalibrationMap {
        axis1: axis1.clone(),
        axis2: axis2.clone(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints() {
        let g = AxisGrid::linspace(Axis::Amplitude, 0.0, 1.0, 5);
        assert_eq!(g.values, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn argmax_and_csv() {
        let m = CalibrationMap {
            axis1: AxisGrid::new(Axis::Duration, vec![100.0, 200.0]),
            axis2: AxisGrid::new(Axis::Amplitude, vec![1.0, 2.0]),
            values: vec![vec![0.1, 0.5], vec![0.9, 0.3]],
        };
        assert_eq!(m.argmax(), (1, 0, 0.9));
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("duration,amplitude,removal_fraction"));
    }
}
