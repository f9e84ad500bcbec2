use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Preset;
use crate::readout::MeasurementTensor;

/// Sites of the parity-check register.
pub const D1: usize = 0;
pub const ANCILLA: usize = 1;
pub const D2: usize = 2;
pub const REGISTER_DIMS: [usize; 3] = [3, 4, 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmonNoise {
    /// ns; `inf` disables relaxation.
    pub t1: f64,
    /// ns.
    pub t2: f64,
    /// Average infidelity of a single-qubit gate.
    #[serde(default)]
    pub gate_error: f64,
    /// f-LRU removal fraction.
    pub r_f: f64,
    /// h-LRU removal fraction; only meaningful on the 4-level ancilla.
    #[serde(default)]
    pub r_h: f64,
    /// Stark phase acquired during the LRU (rad).
    #[serde(default)]
    pub stark_phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Durations {
    pub single_qubit: f64,
    pub cz: f64,
    pub measurement: f64,
    pub lru: f64,
}

impl Default for Durations {
    fn default() -> Self {
        Durations {
            single_qubit: 20.0,
            cz: 60.0,
            measurement: 340.0,
            lru: 220.0,
        }
    }
}

impl Durations {
    pub fn round(&self, with_lru: bool) -> f64 {
        2.0 * self.single_qubit + 2.0 * self.cz + self.measurement + if with_lru { self.lru } else { 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub d1: TransmonNoise,
    pub ancilla: TransmonNoise,
    pub d2: TransmonNoise,
    /// Average leakage per CZ for (D1, A) and (A, D2).
    pub cz_leakage: [f64; 2],
    /// Average infidelity per CZ for (D1, A) and (A, D2).
    pub cz_error: [f64; 2],
    /// Probability per CZ that an |f⟩ swaps with a computational partner.
    #[serde(default)]
    pub leakage_mobility: f64,
    /// Conditional phase a CZ applies when one partner is leaked and the other excited.
    #[serde(default)]
    pub leaked_cz_phase: f64,
    /// Ancilla measurement tensor over g, e, f, h.
    pub measurement: MeasurementTensor,
    /// Extra {g, e} → f leakage per round on the ancilla.
    #[serde(default)]
    pub injected_leakage: f64,
    /// Whether the LRU Stark phase is undone by a virtual Z.
    #[serde(default = "yes")]
    pub lru_corrected: bool,
    #[serde(default)]
    pub durations: Durations,
}

fn yes() -> bool {
    true
}

/// Default ancilla readout: assignment `M` and backaction `Q` combined as
/// `ε[i][m][j] = M[i][m]·Q[i][j]`.
pub fn default_ancilla_measurement() -> MeasurementTensor {
    let m = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.993, 0.006, 0.001, 0.0, //
            0.02, 0.965, 0.012, 0.003, //
            0.01, 0.04, 0.90, 0.05, //
            0.005, 0.01, 0.10, 0.885,
        ],
    );
    let q = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.985, 0.0146, 0.0004, 0.0, //
            0.03, 0.965, 0.0008, 0.0042, //
            0.04, 0.0522, 0.8578, 0.05, //
            0.0, 0.02, 0.10, 0.88,
        ],
    );
    MeasurementTensor::from_assignment_and_qnd(&m, &q).expect("shipped matrices are stochastic")
}

impl NoiseConfig {
    /// Device values for the three transmons.
    pub fn device() -> Self {
        let transmon = |p: Preset, gate_error: f64, r_f: f64, r_h: f64| {
            let s = p.params();
            TransmonNoise {
                t1: s.t1,
                t2: s.t2,
                gate_error,
                r_f,
                r_h,
                stark_phase: 0.0,
            }
        };
        NoiseConfig {
            d1: transmon(Preset::D1, 0.0010, 0.847, 0.0),
            ancilla: transmon(Preset::A, 0.0007, 0.992, 0.961),
            d2: transmon(Preset::D2, 0.0005, 0.803, 0.0),
            cz_leakage: [0.0037, 0.0011],
            cz_error: [0.011, 0.019],
            leakage_mobility: 0.0,
            leaked_cz_phase: std::f64::consts::FRAC_PI_2,
            measurement: default_ancilla_measurement(),
            injected_leakage: 0.0,
            lru_corrected: true,
            durations: Durations::default(),
        }
    }

    /// No decoherence, gate errors, leakage or readout errors.
    pub fn noiseless() -> Self {
        let clean = |r_f: f64, r_h: f64| TransmonNoise {
            t1: f64::INFINITY,
            t2: f64::INFINITY,
            gate_error: 0.0,
            r_f,
            r_h,
            stark_phase: 0.0,
        };
        NoiseConfig {
            d1: clean(0.847, 0.0),
            ancilla: clean(0.992, 0.961),
            d2: clean(0.803, 0.0),
            cz_leakage: [0.0; 2],
            cz_error: [0.0; 2],
            leakage_mobility: 0.0,
            leaked_cz_phase: 0.0,
            measurement: MeasurementTensor::ideal(4),
            injected_leakage: 0.0,
            lru_corrected: true,
            durations: Durations::default(),
        }
    }

    pub fn transmon(&self, site: usize) -> &TransmonNoise {
        match site {
            D1 => &self.d1,
            ANCILLA => &self.ancilla,
            _ => &self.d2,
        }
    }

    /// Probability of |ee⟩ → |fg⟩ for CZ `k`. The quoted leakage is an
    /// average over the four computational inputs, only |ee⟩ of which leaks.
    pub fn ee_leakage(&self, k: usize) -> f64 {
        (4.0 * self.cz_leakage[k]).min(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, v: f64| -> Result<()> {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(format!("{name} = {v} outside [0, 1]")));
            }
            Ok(())
        };
        for (name, t) in [("d1", &self.d1), ("ancilla", &self.ancilla), ("d2", &self.d2)] {
            if !(t.t1 > 0.0 && t.t2 > 0.0) {
                return Err(Error::param(format!("{name}: t1 and t2 must be positive")));
            }
            if t.t2 > 2.0 * t.t1 {
                return Err(Error::param(format!("{name}: t2 exceeds 2·t1")));
            }
            prob(&format!("{name}.gate_error"), t.gate_error)?;
            prob(&format!("{name}.r_f"), t.r_f)?;
            prob(&format!("{name}.r_h"), t.r_h)?;
            if !t.stark_phase.is_finite() {
                return Err(Error::param(format!("{name}: stark_phase must be finite")));
            }
        }
        if self.d1.r_h > 0.0 || self.d2.r_h > 0.0 {
            return Err(Error::param("r_h needs a 4-level transmon; data qubits have 3"));
        }
        for k in 0..2 {
            prob("cz_leakage", self.cz_leakage[k])?;
            prob("cz_error", self.cz_error[k])?;
        }
        prob("leakage_mobility", self.leakage_mobility)?;
        prob("injected_leakage", self.injected_leakage)?;
        if !self.leaked_cz_phase.is_finite() {
            return Err(Error::param("leaked_cz_phase must be finite"));
        }
        if self.measurement.levels() != REGISTER_DIMS[ANCILLA] {
            return Err(Error::DimensionMismatch {
                expected: REGISTER_DIMS[ANCILLA],
                got: self.measurement.levels(),
            });
        }
        let d = &self.durations;
        for (name, v) in [
            ("single_qubit", d.single_qubit),
            ("cz", d.cz),
            ("measurement", d.measurement),
            ("lru", d.lru),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(format!("duration {name} = {v} must be ≥ 0")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_durations() {
        let d = Durations::default();
        assert_eq!(d.round(false), 500.0);
        assert_eq!(d.round(true), 720.0);
    }

    #[test]
    fn presets_validate() {
        NoiseConfig::device().validate().unwrap();
        NoiseConfig::noiseless().validate().unwrap();
        let mut bad = NoiseConfig::device();
        bad.d1.r_h = 0.5;
        assert!(bad.validate().is_err());
        let mut bad = NoiseConfig::device();
        bad.cz_error[1] = -0.1;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn default_measurement_metrics() {
        let labels: Vec<String> = ["g", "e", "f", "h"].iter().map(|s| s.to_string()).collect();
        let d = default_ancilla_measurement().derived_matrices(&labels).unwrap();
        assert!((d.leakage_rate - 0.0006).abs() < 1e-12);
    }

    #[test]
    fn toml_round_trip() {
        let n = NoiseConfig::device();
        let text = toml::to_string(&n).unwrap();
        let back: NoiseConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, n);
    }
}
