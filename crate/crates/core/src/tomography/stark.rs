use serde::Serialize;

use crate::error::{Error, Result};

/// Linear fit of qubit phase against pulse duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StarkFit {
    /// Frequency shift (kHz).
    pub shift: f64,
    /// Phase at zero duration (rad).
    pub intercept: f64,
    pub r_squared: f64,
}

/// Sequential unwrapping assuming less than π between neighbours.
pub fn unwrap_phases(phases: &[f64]) -> Vec<f64> {
    let tau = std::f64::consts::TAU;
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0f64;
    for (k, &p) in phases.iter().enumerate() {
        if k > 0 {
            let d: f64 = p + offset - out[k - 1];
            offset -= tau * (d / tau).round();
        }
        out.push(p + offset);
    }
    out
}

/// Ordinary least squares of `phases` (rad, unwrapped) on `durations` (ns).
pub fn fit_ac_stark(durations: &[f64], phases: &[f64]) -> Result<StarkFit> {
    if durations.len() != phases.len() {
        return Err(Error::DimensionMismatch {
            expected: durations.len(),
            got: phases.len(),
        });
    }
    let n = durations.len();
    if n < 3 {
        return Err(Error::InsufficientData("a Stark fit needs at least 3 points".into()));
    }
    let nf = n as f64;
    let mx = durations.iter().sum::<f64>() / nf;
    let my = phases.iter().sum::<f64>() / nf;
    let sxx: f64 = durations.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 1e-12 * mx.abs().max(1.0).powi(2)) {
        return Err(Error::Singular("durations are degenerate".into()));
    }
    let sxy: f64 = durations.iter().zip(phases).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = phases.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = durations
        .iter()
        .zip(phases)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(StarkFit {
        // rad/ns → GHz → kHz
        shift: slope / std::f64::consts::TAU * 1e6,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    #[test]
    fn zero_phases() {
        let f = fit_ac_stark(&[1.0, 2.0, 3.0], &[0.0; 3]).unwrap();
        assert_eq!(f.shift, 0.0);
        assert_eq!(f.r_squared, 1.0);
    }

    #[test]
    fn planted_slope() {
        let d = [120.0, 170.0, 220.0, 270.0, 320.0];
        let p: Vec<f64> = d.iter().map(|t| TAU * 71e-6 * t + 0.2).collect();
        let f = fit_ac_stark(&d, &p).unwrap();
        assert_abs_diff_eq!(f.shift, 71.0, epsilon = 0.1);
        assert!(f.r_squared > 0.9999);
        assert_abs_diff_eq!(f.intercept, 0.2, epsilon = 1e-9);
    }

    #[test]
    fn unwrap_recovers_ramp() {
        let truth: Vec<f64> = (0..40).map(|k| 0.9 * k as f64 - 3.0).collect();
        let wrapped: Vec<f64> = truth.iter().map(|p| (p + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI).collect();
        let un = unwrap_phases(&wrapped);
        for (a, b) in un.iter().zip(&truth) {
            assert_abs_diff_eq!(a - un[0], b - truth[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_ac_stark(&[5.0, 5.0, 5.0], &[0.0, 1.0, 2.0]).is_err());
        assert!(fit_ac_stark(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }
}
