//! Driven open-system dynamics of a transmon with its readout/Purcell pair.

mod lindblad;
mod pulse;
mod spectroscopy;
mod state;

pub use lindblad::{
    collapse_operators, evolve, evolve_durations, frame_frequency, EvolutionResult, EvolveOptions,
    OpenSystem,
};
pub use pulse::{envelope, PulseParams, DEFAULT_DURATION, DEFAULT_RISE_TIME};
pub use spectroscopy::{find_dips, spectroscopy_sweep, spectroscopy_sweep_with, Dip, SpectroscopyPoint};
pub use state::{DensityState, STATE_TOLERANCE};

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::linalg::{c, CVec};
use crate::model::{level_index, SystemParams};

/// Dressed `|T00⟩` state, or a g/e superposition: `+`, `-`, `+i`, `-i`.
pub fn initial_state(system: &OpenSystem, label: &str) -> Result<DensityState> {
    let basis = system
        .basis()
        .ok_or_else(|| Error::param("initial states need a dressed basis"))?;
    let vacuum = |t: usize| -> Result<CVec> {
        basis
            .vacuum_state(t)
            .map(|k| basis.vector(k))
            .ok_or_else(|| Error::MissingLabel(format!("{}00", crate::model::level_name(t))))
    };
    let psi = match label {
        "+" | "-" | "+i" | "-i" => {
            let phase = match label {
                "+" => c(1.0, 0.0),
                "-" => c(-1.0, 0.0),
                "+i" => c(0.0, 1.0),
                _ => c(0.0, -1.0),
            };
            (vacuum(0)? + vacuum(1)? * phase) * c(FRAC_1_SQRT_2, 0.0)
        }
        other => {
            let t = level_index(other)
                .or_else(|| match other {
                    "0" => Some(0),
                    "1" => Some(1),
                    _ => None,
                })
                .ok_or_else(|| Error::param(format!("unknown initial state '{other}'")))?;
            if t >= system.space().dims()[0] {
                return Err(Error::param(format!("level '{other}' outside the transmon truncation")));
            }
            vacuum(t)?
        }
    };
    DensityState::pure(&psi, system.space().clone())
}

/// Drives the system from a dressed initial state for the longest pulse duration.
pub fn simulate_lru_pulse(
    params: &SystemParams,
    drives: &[PulseParams],
    initial_transmon_state: &str,
) -> Result<EvolutionResult> {
    let system = OpenSystem::new(params)?;
    simulate_lru_pulse_with(&system, drives, initial_transmon_state, &EvolveOptions::sampled(1.0))
}

pub fn simulate_lru_pulse_with(
    system: &OpenSystem,
    drives: &[PulseParams],
    initial_transmon_state: &str,
    opts: &EvolveOptions,
) -> Result<EvolutionResult> {
    if drives.is_empty() {
        return Err(Error::param("an LRU simulation needs at least one drive"));
    }
    let rho0 = initial_state(system, initial_transmon_state)?;
    let t_p = drives.iter().map(|d| d.duration).fold(0.0, f64::max);
    evolve(system, drives, &rho0, t_p, opts)
}
