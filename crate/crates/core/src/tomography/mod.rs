//! Qubit-subspace characterisation: state and process tomography, Pauli
//! transfer matrices, AC-Stark fits and virtual-Z correction.

mod process;
mod ptm;
mod stark;
mod state;

pub use process::{
    characterize_lru, qubit_block, simulate_lru_process, stark_phases, write_density_csv, LruCharacterization,
    LruProcess, QubitProjection,
};
pub use ptm::{
    apply_virtual_z, average_gate_fidelity, process_tomography, ptm_from_pauli_data, random_unitary,
    PauliTransferMatrix, ZRotationFit, CARDINAL_STATES,
};
pub use stark::{fit_ac_stark, unwrap_phases, StarkFit};
pub use state::{reconstruct_state_mle, Mat2, QubitDensityMatrix};
