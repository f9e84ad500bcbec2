//! Process tomography of simulated LRU pulses on the dressed qubit.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{evolve, evolve_durations, initial_state, EvolveOptions, OpenSystem, PulseParams};
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, C64};
use crate::model::PhotonLabel;
use crate::tomography::ptm::{
    apply_virtual_z, average_gate_fidelity, ptm_from_pauli_data, PauliTransferMatrix, ZRotationFit, CARDINAL_STATES,
};
use crate::tomography::stark::unwrap_phases;
use crate::tomography::state::{Mat2, QubitDensityMatrix};

/// Qubit part of a full state, renormalised, with the weight outside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitProjection {
    pub state: QubitDensityMatrix,
    /// Population in transmon levels above |e⟩.
    pub leaked: f64,
}

fn photon_count(p: PhotonLabel) -> usize {
    match p {
        PhotonLabel::Vacuum => 0,
        PhotonLabel::Minus | PhotonLabel::Plus => 1,
        PhotonLabel::Multi { photons, .. } => photons,
    }
}

/// Reduced dressed-qubit state of `rho` (rotating frame at `frame` GHz, time
/// `t` ns), with the free evolution under H₀ removed.
///
/// Resonator content is traced out by summing blocks with matching photon
/// labels.
pub fn qubit_block(system: &OpenSystem, rho: &CMat, t: f64, frame: f64) -> Result<QubitProjection> {
    let basis = system
        .basis()
        .ok_or_else(|| Error::param("qubit tomography needs a dressed basis"))?;
    let rd = basis.vectors.adjoint() * rho * &basis.vectors;
    let rotating_energy = |k: usize| {
        let l = basis.labels[k];
        basis.energies[k] - TAU * frame * (l.transmon + photon_count(l.photons)) as f64
    };
    let mut block = Mat2::zeros();
    let mut total = 0.0;
    for k in 0..basis.dim() {
        total += rd[(k, k)].re;
    }
    for (k, label) in basis.labels.iter().enumerate() {
        if label.transmon != 0 {
            continue;
        }
        let Some(e) = basis.find(1, label.photons) else { continue };
        let phase = C64::from_polar(1.0, (rotating_energy(k) - rotating_energy(e)) * t);
        block[(0, 0)] += rd[(k, k)];
        block[(1, 1)] += rd[(e, e)];
        block[(0, 1)] += rd[(k, e)] * phase;
        block[(1, 0)] += rd[(e, k)] * phase.conj();
    }
    let weight = (block[(0, 0)] + block[(1, 1)]).re;
    if !(weight > 1e-12) {
        return Err(Error::Undefined("no population left in the qubit subspace".into()));
    }
    Ok(QubitProjection {
        state: QubitDensityMatrix {
            rho: block * c(1.0 / weight, 0.0),
        },
        leaked: (total - weight).max(0.0),
    })
}

/// Result of probing an LRU pulse with the six cardinal qubit states.
#[derive(Debug, Clone, Serialize)]
pub struct LruProcess {
    pub ptm: PauliTransferMatrix,
    /// Output per input, in the order of [`CARDINAL_STATES`].
    pub outputs: Vec<QubitProjection>,
    pub duration: f64,
}

impl LruProcess {
    pub fn mean_leakage(&self) -> f64 {
        self.outputs.iter().map(|o| o.leaked).sum::<f64>() / self.outputs.len() as f64
    }
}

/// Process tomography of a pulse set acting on the dressed qubit.
pub fn simulate_lru_process(system: &OpenSystem, drives: &[PulseParams], opts: &EvolveOptions) -> Result<LruProcess> {
    if drives.is_empty() {
        return Err(Error::param("process tomography needs at least one drive"));
    }
    let t_p = drives.iter().map(|d| d.duration).fold(0.0, f64::max);
    let outputs: Vec<QubitProjection> = CARDINAL_STATES
        .par_iter()
        .map(|(label, _)| {
            let rho0 = initial_state(system, label)?;
            let r = evolve(system, drives, &rho0, t_p, opts)?;
            qubit_block(system, &r.final_state.rho, t_p, r.frame_frequency)
        })
        .collect::<Result<_>>()?;
    let inputs: Vec<[f64; 3]> = CARDINAL_STATES.iter().map(|(_, b)| *b).collect();
    let measured: Vec<[f64; 3]> = outputs.iter().map(|o| o.state.bloch()).collect();
    Ok(LruProcess {
        ptm: ptm_from_pauli_data(&inputs, &measured)?,
        outputs,
        duration: t_p,
    })
}

/// Phase of the dressed |+⟩ state after pulses of each duration, unwrapped.
pub fn stark_phases(
    system: &OpenSystem,
    drives: &[PulseParams],
    durations: &[f64],
    opts: &EvolveOptions,
) -> Result<Vec<f64>> {
    if durations.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("durations must be strictly increasing"));
    }
    let rho0 = initial_state(system, "+")?;
    let results = evolve_durations(system, drives, durations, &rho0, opts)?;
    let raw: Vec<f64> = results
        .iter()
        .zip(durations)
        .map(|(r, &t)| {
            let q = qubit_block(system, &r.final_state.rho, t, r.frame_frequency)?;
            let [x, y, _] = q.state.bloch();
            Ok(y.atan2(x))
        })
        .collect::<Result<_>>()?;
    Ok(unwrap_phases(&raw))
}

/// PTM before and after the virtual-Z correction, with fidelities to the
/// identity for both.
#[derive(Debug, Clone, Serialize)]
pub struct LruCharacterization {
    pub process: LruProcess,
    pub z_fit: ZRotationFit,
    pub corrected: PauliTransferMatrix,
    pub fidelity_uncorrected: f64,
    pub fidelity_corrected: f64,
}

pub fn characterize_lru(system: &OpenSystem, drives: &[PulseParams], opts: &EvolveOptions) -> Result<LruCharacterization> {
    let process = simulate_lru_process(system, drives, opts)?;
    let z_fit = process.ptm.z_rotation_fit();
    let corrected = apply_virtual_z(&process.ptm, z_fit.angle);
    let id = PauliTransferMatrix::identity();
    Ok(LruCharacterization {
        fidelity_uncorrected: average_gate_fidelity(&process.ptm, &id),
        fidelity_corrected: average_gate_fidelity(&corrected, &id),
        process,
        z_fit,
        corrected,
    })
}

/// Density matrices as CSV rows `label, re00, im00, re01, im01, re10, im10, re11, im11`.
pub fn write_density_csv<W: std::io::Write>(states: &[(String, QubitDensityMatrix)], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["label", "re00", "im00", "re01", "im01", "re10", "im10", "re11", "im11"])?;
    for (label, s) in states {
        let mut rec = vec![label.clone()];
        for i in 0..2 {
            for j in 0..2 {
                rec.push(crate::fmt_f64(s.rho[(i, j)].re));
                rec.push(crate::fmt_f64(s.rho[(i, j)].im));
            }
        }
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}
