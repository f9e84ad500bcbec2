//! Channel-level simulation of a repeated weight-2 X-type parity check on
//! (D1, A, D2) with leakage, measurement backaction and LRUs.

mod bench;
mod channel;
mod circuit;
mod instrument;
mod noise;
mod register;
mod simulate;

pub use bench::{bell_state_experiment, parity_assignment_experiment, BellBranch, BellResult, ParityAssignment, ParityInput};
pub use channel::{apply_channel, idle_kraus, lru_channel, Channel, ChannelSpec, RotationAxis, CPTP_TOLERANCE};
pub use circuit::{parity_round_circuit, LruMode, RoundCircuit};
pub use instrument::{measurement_instrument, Instrument, InstrumentOutcome};
pub use noise::{default_ancilla_measurement, Durations, NoiseConfig, TransmonNoise, ANCILLA, D1, D2, REGISTER_DIMS};
pub use register::QuditRegister;
pub use simulate::{
    defect_probability, raw_bit, run_parity_rounds, run_parity_rounds_with, write_round_series_csv, DataState,
    LeakagePopulations, RoundSeries, RoundsOptions,
};
