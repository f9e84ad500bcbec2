use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flat-top microwave drive with sin² rise and fall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseParams {
    /// Peak drive strength (rad/ns).
    pub amplitude: f64,
    /// Carrier frequency (GHz).
    pub frequency: f64,
    /// Rise (and fall) time t_r (ns).
    pub rise_time: f64,
    /// Total duration t_p (ns).
    pub duration: f64,
    #[serde(default)]
    pub phase: f64,
}

pub const DEFAULT_RISE_TIME: f64 = 30.0;
pub const DEFAULT_DURATION: f64 = 220.0;

impl PulseParams {
    pub fn new(amplitude: f64, frequency: f64) -> Self {
        PulseParams {
            amplitude,
            frequency,
            rise_time: DEFAULT_RISE_TIME,
            duration: DEFAULT_DURATION,
            phase: 0.0,
        }
    }

    pub fn with_duration(self, duration: f64) -> Self {
        PulseParams { duration, ..self }
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        PulseParams { amplitude, ..self }
    }

    pub fn with_frequency(self, frequency: f64) -> Self {
        PulseParams { frequency, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rise_time > 0.0 && 2.0 * self.rise_time <= self.duration) {
            return Err(Error::param(format!(
                "pulse needs 0 < 2·rise_time ≤ duration (rise {}, duration {})",
                self.rise_time, self.duration
            )));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::param(format!("amplitude must be ≥ 0, got {}", self.amplitude)));
        }
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(Error::param(format!("drive frequency must be positive, got {}", self.frequency)));
        }
        if !self.phase.is_finite() {
            return Err(Error::param("drive phase must be finite"));
        }
        Ok(())
    }

    /// Times at which the envelope changes analytic form.
    pub fn breakpoints(&self) -> [f64; 2] {
        [self.rise_time, self.duration - self.rise_time]
    }

    /// Envelope value; zero outside the pulse window.
    pub(crate) fn envelope_unchecked(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= self.duration {
            return 0.0;
        }
        let ramp = |s: f64| {
            let x = (FRAC_PI_2 * s / self.rise_time).sin();
            x * x
        };
        if t < self.rise_time {
            self.amplitude * ramp(t)
        } else if t > self.duration - self.rise_time {
            self.amplitude * ramp(self.duration - t)
        } else {
            self.amplitude
        }
    }
}

/// Drive envelope at time `t` within the pulse window.
pub fn envelope(pulse: &PulseParams, t: f64) -> Result<f64> {
    if !(0.0..=pulse.duration).contains(&t) {
        return Err(Error::OutOfWindow {
            t,
            duration: pulse.duration,
        });
    }
    Ok(pulse.envelope_unchecked(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit() -> PulseParams {
        PulseParams {
            amplitude: 1.0,
            frequency: 4.0,
            rise_time: 30.0,
            duration: 220.0,
            phase: 0.0,
        }
    }

    #[test]
    fn envelope_examples() {
        let p = unit();
        assert_abs_diff_eq!(envelope(&p, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(envelope(&p, 100.0).unwrap(), 1.0);
        assert_abs_diff_eq!(envelope(&p, 15.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(envelope(&p, 205.0).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(envelope(&p, 220.0).unwrap(), 0.0);
    }

    #[test]
    fn envelope_rejects_outside_window() {
        let p = unit();
        assert!(matches!(envelope(&p, -1.0), Err(Error::OutOfWindow { .. })));
        assert!(envelope(&p, 221.0).is_err());
    }

    #[test]
    fn validation() {
        assert!(unit().validate().is_ok());
        assert!(unit().with_duration(50.0).validate().is_err());
        assert!(unit().with_duration(60.0).validate().is_ok());
        assert!(unit().with_amplitude(-0.1).validate().is_err());
    }

    #[test]
    fn envelope_is_continuous_at_breakpoints() {
        let p = unit();
        for b in p.breakpoints() {
            let l = envelope(&p, b - 1e-9).unwrap();
            let r = envelope(&p, b + 1e-9).unwrap();
            assert!((l - r).abs() < 1e-8);
        }
    }
}
