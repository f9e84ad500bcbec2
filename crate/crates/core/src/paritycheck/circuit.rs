use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paritycheck::channel::{Channel, ChannelSpec, RotationAxis};
use crate::paritycheck::instrument::Instrument;
use crate::paritycheck::noise::{NoiseConfig, ANCILLA, D1, D2, REGISTER_DIMS};

/// Which transmons receive an LRU each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LruMode {
    None,
    Data,
    Ancilla,
    Both,
}

impl LruMode {
    pub const ALL: [LruMode; 4] = [LruMode::None, LruMode::Data, LruMode::Ancilla, LruMode::Both];

    pub fn name(self) -> &'static str {
        match self {
            LruMode::None => "none",
            LruMode::Data => "data",
            LruMode::Ancilla => "ancilla",
            LruMode::Both => "both",
        }
    }

    pub fn applies_to(self, site: usize) -> bool {
        match self {
            LruMode::None => false,
            LruMode::Data => site != ANCILLA,
            LruMode::Ancilla => site == ANCILLA,
            LruMode::Both => true,
        }
    }
}

impl std::str::FromStr for LruMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LruMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::param(format!("unknown lru mode '{s}'")))
    }
}

/// One parity-check round as circuit elements around the ancilla measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundCircuit {
    pub before_measurement: Vec<ChannelSpec>,
    pub after_measurement: Vec<ChannelSpec>,
    pub duration: f64,
}

fn idle(noise: &NoiseConfig, site: usize, duration: f64) -> ChannelSpec {
    let t = noise.transmon(site);
    ChannelSpec::Idle {
        target: site,
        duration,
        t1: t.t1,
        t2: t.t2,
    }
}

fn y_rotation(noise: &NoiseConfig, site: usize, angle: f64) -> ChannelSpec {
    ChannelSpec::SingleQubitRotation {
        target: site,
        axis: RotationAxis::Y,
        angle,
        error: noise.transmon(site).gate_error,
    }
}

fn echo(noise: &NoiseConfig, site: usize) -> ChannelSpec {
    ChannelSpec::Echo {
        target: site,
        error: noise.transmon(site).gate_error,
    }
}

fn cz(noise: &NoiseConfig, k: usize, high: usize, low: usize) -> ChannelSpec {
    ChannelSpec::Cz {
        high,
        low,
        leakage: noise.ee_leakage(k),
        error: noise.cz_error[k],
        mobility: noise.leakage_mobility,
        leaked_phase: noise.leaked_cz_phase,
    }
}

fn lru(noise: &NoiseConfig, site: usize, duration: f64, injected_leakage: f64) -> ChannelSpec {
    let t = noise.transmon(site);
    ChannelSpec::Lru {
        target: site,
        r_f: t.r_f,
        r_h: t.r_h,
        stark_phase: t.stark_phase,
        corrected: noise.lru_corrected,
        duration,
        t1: t.t1,
        t2: t.t2,
        injected_leakage,
    }
}

/// Data qubits are rotated so the X parity maps to the ancilla; the ancilla
/// is not reset, so its outcome accumulates the parity of every round.
pub fn parity_round_circuit(noise: &NoiseConfig, mode: LruMode, ancilla_flip: bool) -> RoundCircuit {
    let dur = noise.durations;
    let all = [D1, ANCILLA, D2];
    let data = [D1, D2];
    let mut before = Vec::new();
    // Benchmarked gate errors already include decoherence during the gate,
    // so only spectators idle in gate slots.
    for s in all {
        before.push(y_rotation(noise, s, FRAC_PI_2));
    }
    before.push(cz(noise, 0, D1, ANCILLA));
    before.push(idle(noise, D2, dur.cz));
    before.push(cz(noise, 1, ANCILLA, D2));
    before.push(idle(noise, D1, dur.cz));
    for s in all {
        before.push(y_rotation(noise, s, -FRAC_PI_2));
    }
    for s in data {
        before.push(idle(noise, s, 0.5 * dur.measurement));
        before.push(echo(noise, s));
        before.push(idle(noise, s, 0.5 * dur.measurement));
    }
    if ancilla_flip {
        before.push(ChannelSpec::Echo {
            target: ANCILLA,
            error: 0.0,
        });
    }

    let mut after = Vec::new();
    let with_lru = mode != LruMode::None;
    if with_lru {
        for s in data {
            if mode.applies_to(s) {
                after.push(lru(noise, s, 0.5 * dur.lru, 0.0));
            } else {
                after.push(idle(noise, s, 0.5 * dur.lru));
            }
            after.push(echo(noise, s));
            after.push(idle(noise, s, 0.5 * dur.lru));
        }
        if mode.applies_to(ANCILLA) {
            after.push(lru(noise, ANCILLA, dur.lru, noise.injected_leakage));
        } else {
            after.push(idle(noise, ANCILLA, dur.lru));
        }
    }
    if noise.injected_leakage > 0.0 && !mode.applies_to(ANCILLA) {
        after.push(ChannelSpec::LeakageInjection {
            target: ANCILLA,
            probability: noise.injected_leakage,
        });
    }
    RoundCircuit {
        before_measurement: before,
        after_measurement: after,
        duration: dur.round(with_lru),
    }
}

/// Round compiled to Kraus sets.
#[derive(Debug, Clone)]
pub(crate) struct CompiledRound {
    pub before: Vec<Channel>,
    pub instrument: Instrument,
    pub after: Vec<Channel>,
    pub duration: f64,
}

impl CompiledRound {
    pub fn new(noise: &NoiseConfig, mode: LruMode, ancilla_flip: bool) -> Result<Self> {
        noise.validate()?;
        let circuit = parity_round_circuit(noise, mode, ancilla_flip);
        let compile = |specs: &[ChannelSpec]| -> Result<Vec<Channel>> {
            Ok(specs
                .iter()
                .map(|s| s.compile(&REGISTER_DIMS))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .filter(|c| !c.ops.is_empty())
                .collect())
        };
        Ok(CompiledRound {
            before: compile(&circuit.before_measurement)?,
            instrument: Instrument::new(&REGISTER_DIMS, ANCILLA, &noise.measurement)?,
            after: compile(&circuit.after_measurement)?,
            duration: circuit.duration,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_lengths() {
        let n = NoiseConfig::device();
        assert_eq!(parity_round_circuit(&n, LruMode::None, false).duration, 500.0);
        assert_eq!(parity_round_circuit(&n, LruMode::Both, false).duration, 720.0);
    }

    #[test]
    fn lru_placement() {
        let n = NoiseConfig::device();
        let count = |m: LruMode| {
            parity_round_circuit(&n, m, false)
                .after_measurement
                .iter()
                .filter(|s| matches!(s, ChannelSpec::Lru { .. }))
                .count()
        };
        assert_eq!(count(LruMode::None), 0);
        assert_eq!(count(LruMode::Data), 2);
        assert_eq!(count(LruMode::Ancilla), 1);
        assert_eq!(count(LruMode::Both), 3);
        assert_eq!("both".parse::<LruMode>().unwrap(), LruMode::Both);
        assert!("all".parse::<LruMode>().is_err());
    }

    #[test]
    fn compiles_cptp() {
        for m in LruMode::ALL {
            let r = CompiledRound::new(&NoiseConfig::device(), m, false).unwrap();
            for ch in r.before.iter().chain(&r.after) {
                assert!(ch.cptp_defect() < 1e-9);
            }
        }
    }
}
