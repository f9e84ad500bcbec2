//! LRU calibration: removal fraction, parameter maps, contours and the
//! per-round leakage Markov model.

mod contour;
mod leakage;
mod map;

pub use contour::{extract_contours, Contour};
pub use leakage::{
    decay_seepage, fit_seepage, induced_leakage_rate, repeated_lru_rounds, repeated_lru_rounds_from,
    rotation_for_leakage_rate, steady_state_leakage, LeakageRoundModel,
};
pub use map::{
    calibration_map_2d, pulse_removal, write_contours_csv, Axis, AxisGrid, CalibrationMap, CONTOUR_LEVELS,
};

use serde::Serialize;

use crate::error::{Error, Result};

/// Fraction of an initial leaked population removed by an operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RemovalFraction {
    pub value: f64,
    pub initial_pop: f64,
    pub final_pop: f64,
    /// Set when the value is taken relative to a decay-only baseline.
    pub baseline_subtracted: bool,
}

pub fn removal_fraction(initial_pop: f64, final_pop: f64) -> Result<RemovalFraction> {
    if !(initial_pop > 0.0) {
        return Err(Error::param(format!("initial population must be > 0, got {initial_pop}")));
    }
    Ok(RemovalFraction {
        value: (initial_pop - final_pop) / initial_pop,
        initial_pop,
        final_pop,
        baseline_subtracted: false,
    })
}

/// Removal relative to the population `baseline_pop` left by decay alone.
pub fn removal_fraction_over_baseline(baseline_pop: f64, final_pop: f64) -> Result<RemovalFraction> {
    let mut r = removal_fraction(baseline_pop, final_pop)?;
    r.baseline_subtracted = true;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn removal_examples() {
        assert_eq!(removal_fraction(1.0, 0.0).unwrap().value, 1.0);
        assert_eq!(removal_fraction(0.5, 0.5).unwrap().value, 0.0);
        assert!((removal_fraction(1.0, 0.001).unwrap().value - 0.999).abs() < 1e-15);
        assert!(removal_fraction(0.0, 0.0).is_err());
        assert!(removal_fraction_over_baseline(0.9, 0.09).unwrap().baseline_subtracted);
    }
}
