//! Experiment configuration files (TOML).
//!
//! One file fully determines one experiment. Every section is optional and
//! is filled with defaults on resolution; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibration::{Axis, AxisGrid, LeakageRoundModel, CONTOUR_LEVELS};
use crate::dynamics::{EvolveOptions, PulseParams, DEFAULT_DURATION, DEFAULT_RISE_TIME};
use crate::error::{Error, Result};
use crate::model::{dressed_transitions, Preset, SystemParams};
use crate::paritycheck::{DataState, Durations, LruMode, NoiseConfig, TransmonNoise};
use crate::readout::{MeasurementTensor, ReadoutModel};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Subcommand this file was written for; checked when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectroscopy: Option<SpectroscopySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tomography: Option<TomographySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeated_lru: Option<RepeatedLruSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parity_rounds: Option<ParityRoundsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bell: Option<BellSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout: Option<ReadoutSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement_fit: Option<MeasurementFitSection>,
}

/// A device preset with optional per-field overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit_freq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anharmonicity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout_freq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purcell_freq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tr_coupling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rp_coupling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purcell_linewidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_transmon_levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_readout_photons: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_purcell_photons: Option<usize>,
    /// Switch off transmon T1/T2 (resonator decay is kept).
    #[serde(default)]
    pub no_transmon_decoherence: bool,
}

impl SystemSection {
    pub fn preset(&self) -> Preset {
        self.preset.unwrap_or(Preset::A)
    }

    pub fn params(&self) -> Result<SystemParams> {
        let mut p = self.preset().params();
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { p.$f = v; } )* };
        }
        set!(
            qubit_freq,
            anharmonicity,
            readout_freq,
            purcell_freq,
            tr_coupling,
            rp_coupling,
            purcell_linewidth,
            t1,
            t2,
            n_transmon_levels,
            n_readout_photons,
            n_purcell_photons
        );
        if self.no_transmon_decoherence {
            p = p.without_transmon_decoherence();
        }
        p.validate()?;
        Ok(p)
    }

    fn resolved(&self) -> Result<Self> {
        let p = self.params()?;
        Ok(SystemSection {
            preset: Some(self.preset()),
            qubit_freq: Some(p.qubit_freq),
            anharmonicity: Some(p.anharmonicity),
            readout_freq: Some(p.readout_freq),
            purcell_freq: Some(p.purcell_freq),
            tr_coupling: Some(p.tr_coupling),
            rp_coupling: Some(p.rp_coupling),
            purcell_linewidth: Some(p.purcell_linewidth),
            t1: Some(p.t1),
            t2: Some(p.t2),
            n_transmon_levels: Some(p.n_transmon_levels),
            n_readout_photons: Some(p.n_readout_photons),
            n_purcell_photons: Some(p.n_purcell_photons),
            no_transmon_decoherence: false,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    /// Fixed integrator step (ns); automatic when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default)]
    pub check_convergence: bool,
}

impl NumericsSection {
    pub fn options(&self) -> Result<EvolveOptions> {
        if let Some(s) = self.step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("numerics.step must be positive, got {s}")));
            }
        }
        Ok(EvolveOptions {
            step: self.step,
            check_convergence: self.check_convergence,
            ..Default::default()
        })
    }
}

fn default_amplitude() -> f64 {
    0.4
}
fn default_rise() -> f64 {
    DEFAULT_RISE_TIME
}
fn default_duration() -> f64 {
    DEFAULT_DURATION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectroscopySection {
    /// Drive strength (rad/ns).
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_rise")]
    pub rise_time: f64,
    #[serde(default = "default_duration")]
    pub duration: f64,
    /// Sweep window (GHz); defaults to the dressed f-transition pair ± 30 MHz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default = "default_spec_points")]
    pub points: usize,
    #[serde(default = "default_prominence")]
    pub min_prominence: f64,
}

fn default_spec_points() -> usize {
    81
}
fn default_prominence() -> f64 {
    0.01
}

impl Default for SpectroscopySection {
    fn default() -> Self {
        SpectroscopySection {
            amplitude: default_amplitude(),
            rise_time: default_rise(),
            duration: default_duration(),
            start: None,
            stop: None,
            points: default_spec_points(),
            min_prominence: default_prominence(),
        }
    }
}

impl SpectroscopySection {
    fn resolved(&self, params: &SystemParams) -> Result<Self> {
        let mut s = self.clone();
        if s.start.is_none() || s.stop.is_none() {
            let (lo, hi) = dressed_transitions(params)?.f_pair();
            s.start.get_or_insert(lo - 0.03);
            s.stop.get_or_insert(hi + 0.03);
        }
        Ok(s)
    }

    pub fn pulse(&self) -> PulseParams {
        PulseParams {
            amplitude: self.amplitude,
            frequency: self.start.unwrap_or(1.0),
            rise_time: self.rise_time,
            duration: self.duration,
            phase: 0.0,
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        let (a, b) = (self.start.unwrap_or(0.0), self.stop.unwrap_or(0.0));
        AxisGrid::linspace(Axis::Frequency, a, b, self.points).values
    }

    fn validate(&self) -> Result<()> {
        self.pulse().validate()?;
        let (a, b) = (self.start.unwrap_or(0.0), self.stop.unwrap_or(0.0));
        if !(a > 0.0 && b > a) {
            return Err(Error::Config(format!("spectroscopy window [{a}, {b}] is not increasing and positive")));
        }
        if self.points < 5 {
            return Err(Error::Config("spectroscopy.points must be at least 5".into()));
        }
        if !(0.0..1.0).contains(&self.min_prominence) {
            return Err(Error::Config("spectroscopy.min_prominence must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Evenly spaced values along one pulse axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl AxisRange {
    pub fn grid(&self) -> AxisGrid {
        AxisGrid::linspace(self.axis, self.start, self.stop, self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    /// Base pulse; the swept axes override its fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    #[serde(default = "default_cal_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_rise")]
    pub rise_time: f64,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default = "default_axis1")]
    pub axis1: AxisRange,
    #[serde(default = "default_axis2")]
    pub axis2: AxisRange,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
}

fn default_cal_amplitude() -> f64 {
    5.0
}
fn default_axis1() -> AxisRange {
    AxisRange {
        axis: Axis::Duration,
        start: 60.0,
        stop: 300.0,
        points: 20,
    }
}
fn default_axis2() -> AxisRange {
    AxisRange {
        axis: Axis::Amplitude,
        start: 0.25,
        stop: 5.0,
        points: 20,
    }
}
fn default_levels() -> Vec<f64> {
    CONTOUR_LEVELS.to_vec()
}

impl Default for CalibrationSection {
    fn default() -> Self {
        CalibrationSection {
            frequency: None,
            amplitude: default_cal_amplitude(),
            rise_time: default_rise(),
            duration: default_duration(),
            axis1: default_axis1(),
            axis2: default_axis2(),
            levels: default_levels(),
        }
    }
}

/// Default LRU carrier: 30 MHz below the lower dressed f-transition, where
/// strong drives land once Stark shifted.
fn default_lru_frequency(params: &SystemParams) -> Result<f64> {
    Ok(dressed_transitions(params)?.f_pair().0 - 0.03)
}

impl CalibrationSection {
    fn resolved(&self, params: &SystemParams) -> Result<Self> {
        let mut s = self.clone();
        if s.frequency.is_none() {
            s.frequency = Some(default_lru_frequency(params)?);
        }
        Ok(s)
    }

    pub fn base_pulse(&self) -> PulseParams {
        PulseParams {
            amplitude: self.amplitude,
            frequency: self.frequency.unwrap_or(1.0),
            rise_time: self.rise_time,
            duration: self.duration,
            phase: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.axis1.axis == self.axis2.axis {
            return Err(Error::Config("calibration axes must differ".into()));
        }
        for a in [&self.axis1, &self.axis2] {
            if a.points < 2 || !(a.start.is_finite() && a.stop.is_finite()) {
                return Err(Error::Config(format!("axis {} needs ≥ 2 finite points", a.axis.name())));
            }
            let lo = a.start.min(a.stop);
            match a.axis {
                Axis::Amplitude if lo < 0.0 => return Err(Error::Config("amplitudes must be ≥ 0".into())),
                Axis::Frequency if lo <= 0.0 => return Err(Error::Config("frequencies must be > 0".into())),
                Axis::Duration if lo < 2.0 * self.rise_time => {
                    return Err(Error::Config("durations must be at least twice the rise time".into()))
                }
                _ => {}
            }
        }
        if self.levels.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::Config("contour levels must lie in [0, 1]".into()));
        }
        self.base_pulse().validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    #[serde(default = "default_cal_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_rise")]
    pub rise_time: f64,
    #[serde(default = "default_duration")]
    pub duration: f64,
    /// Pulse durations (ns) of the Stark-phase series.
    #[serde(default = "default_stark_durations")]
    pub stark_durations: Vec<f64>,
}

fn default_stark_durations() -> Vec<f64> {
    (0..37).map(|k| 120.0 + 5.0 * k as f64).collect()
}

impl Default for TomographySection {
    fn default() -> Self {
        TomographySection {
            frequency: None,
            amplitude: default_cal_amplitude(),
            rise_time: default_rise(),
            duration: default_duration(),
            stark_durations: default_stark_durations(),
        }
    }
}

impl TomographySection {
    fn resolved(&self, params: &SystemParams) -> Result<Self> {
        let mut s = self.clone();
        if s.frequency.is_none() {
            s.frequency = Some(default_lru_frequency(params)?);
        }
        Ok(s)
    }

    pub fn pulse(&self) -> PulseParams {
        PulseParams {
            amplitude: self.amplitude,
            frequency: self.frequency.unwrap_or(1.0),
            rise_time: self.rise_time,
            duration: self.duration,
            phase: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        self.pulse().validate()?;
        if self.stark_durations.len() < 3 {
            return Err(Error::Config("at least 3 Stark durations are needed".into()));
        }
        if self.stark_durations.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("Stark durations must be strictly increasing".into()));
        }
        if self.stark_durations[0] < 2.0 * self.rise_time {
            return Err(Error::Config("Stark durations must be at least twice the rise time".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepeatedLruSection {
    #[serde(default = "default_l1")]
    pub leakage_rate: f64,
    /// Seepage per round; fitted from `steady_state` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seepage_rate: Option<f64>,
    /// Observed steady state without LRU, used to fit the seepage.
    #[serde(default = "default_steady")]
    pub steady_state: f64,
    #[serde(default = "default_removal")]
    pub lru_removal: f64,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
}

fn default_l1() -> f64 {
    0.02
}
fn default_steady() -> f64 {
    0.16
}
fn default_removal() -> f64 {
    0.99
}
fn default_rounds() -> usize {
    50
}

impl Default for RepeatedLruSection {
    fn default() -> Self {
        RepeatedLruSection {
            leakage_rate: default_l1(),
            seepage_rate: None,
            steady_state: default_steady(),
            lru_removal: default_removal(),
            rounds: default_rounds(),
        }
    }
}

impl RepeatedLruSection {
    fn resolved(&self) -> Result<Self> {
        let mut s = self.clone();
        if s.seepage_rate.is_none() {
            s.seepage_rate = Some(crate::calibration::fit_seepage(s.leakage_rate, s.steady_state)?);
        }
        Ok(s)
    }

    pub fn model(&self) -> Result<LeakageRoundModel> {
        LeakageRoundModel::new(self.leakage_rate, self.seepage_rate.unwrap_or(0.0))?.with_lru(self.lru_removal)
    }

    fn validate(&self) -> Result<()> {
        self.model()?;
        if self.rounds == 0 {
            return Err(Error::Config("repeated_lru.rounds must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoisePreset {
    #[default]
    Device,
    Noiseless,
}

/// Noise preset with optional overrides of individual fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub preset: NoisePreset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1: Option<TransmonNoise>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ancilla: Option<TransmonNoise>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<TransmonNoise>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cz_leakage: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cz_error: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leakage_mobility: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaked_cz_phase: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement: Option<MeasurementTensor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injected_leakage: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lru_corrected: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub durations: Option<Durations>,
}

impl NoiseSection {
    pub fn noise(&self) -> Result<NoiseConfig> {
        let mut n = match self.preset {
            NoisePreset::Device => NoiseConfig::device(),
            NoisePreset::Noiseless => NoiseConfig::noiseless(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { n.$f = v.clone(); } )* };
        }
        set!(
            d1,
            ancilla,
            d2,
            cz_leakage,
            cz_error,
            leakage_mobility,
            leaked_cz_phase,
            measurement,
            injected_leakage,
            lru_corrected,
            durations
        );
        n.validate()?;
        Ok(n)
    }

    fn resolved(&self) -> Result<Self> {
        let n = self.noise()?;
        Ok(NoiseSection {
            preset: self.preset,
            d1: Some(n.d1),
            ancilla: Some(n.ancilla),
            d2: Some(n.d2),
            cz_leakage: Some(n.cz_leakage),
            cz_error: Some(n.cz_error),
            leakage_mobility: Some(n.leakage_mobility),
            leaked_cz_phase: Some(n.leaked_cz_phase),
            measurement: Some(n.measurement),
            injected_leakage: Some(n.injected_leakage),
            lru_corrected: Some(n.lru_corrected),
            durations: Some(n.durations),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParityRoundsSection {
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    /// Monte-Carlo trajectories per mode; 0 runs the exact density-matrix model.
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default = "default_modes")]
    pub lru_modes: Vec<LruMode>,
    #[serde(default)]
    pub data_state: DataState,
}

fn default_trajectories() -> usize {
    10_000
}
fn default_modes() -> Vec<LruMode> {
    LruMode::ALL.to_vec()
}

impl Default for ParityRoundsSection {
    fn default() -> Self {
        ParityRoundsSection {
            rounds: default_rounds(),
            trajectories: default_trajectories(),
            lru_modes: default_modes(),
            data_state: DataState::default(),
        }
    }
}

impl ParityRoundsSection {
    fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("parity_rounds.rounds must be positive".into()));
        }
        if self.lru_modes.is_empty() {
            return Err(Error::Config("parity_rounds.lru_modes is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellSection {
    /// Number of consecutive checks for each Bell run.
    #[serde(default = "default_checks")]
    pub checks: Vec<usize>,
}

fn default_checks() -> Vec<usize> {
    vec![1, 2]
}

impl Default for BellSection {
    fn default() -> Self {
        BellSection { checks: default_checks() }
    }
}

impl BellSection {
    fn validate(&self) -> Result<()> {
        if self.checks.is_empty() || self.checks.iter().any(|c| !(1..=2).contains(c)) {
            return Err(Error::Config("bell.checks must list 1 and/or 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSection {
    /// Classifiers are trained on the first n model states for each n here.
    #[serde(default = "default_state_counts")]
    pub state_counts: Vec<usize>,
    #[serde(default = "default_shots")]
    pub shots_per_state: usize,
    #[serde(default = "ReadoutModel::fitted_preset")]
    pub model: ReadoutModel,
}

fn default_state_counts() -> Vec<usize> {
    vec![2, 3, 4]
}
fn default_shots() -> usize {
    20_000
}

impl Default for ReadoutSection {
    fn default() -> Self {
        ReadoutSection {
            state_counts: default_state_counts(),
            shots_per_state: default_shots(),
            model: ReadoutModel::fitted_preset(),
        }
    }
}

impl ReadoutSection {
    fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.state_counts.is_empty() || self.state_counts.iter().any(|&n| n < 2 || n > self.model.len()) {
            return Err(Error::Config(format!(
                "readout.state_counts must lie in [2, {}]",
                self.model.len()
            )));
        }
        if self.shots_per_state == 0 {
            return Err(Error::Config("readout.shots_per_state must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementFitSection {
    /// Tensor used to simulate the data; the shipped ancilla readout by default.
    #[serde(default = "crate::paritycheck::default_ancilla_measurement")]
    pub tensor: MeasurementTensor,
    /// Measured joint frequencies (`input, m0, m1, frequency`) replacing the simulation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_frequencies: Option<PathBuf>,
    /// Shots per input; 0 fits the exact probabilities.
    #[serde(default = "default_fit_shots")]
    pub shots: usize,
    #[serde(default = "default_starts")]
    pub random_starts: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_fit_shots() -> usize {
    1 << 15
}
fn default_starts() -> usize {
    8
}
fn default_max_iter() -> usize {
    200_000
}

impl Default for MeasurementFitSection {
    fn default() -> Self {
        MeasurementFitSection {
            tensor: crate::paritycheck::default_ancilla_measurement(),
            joint_frequencies: None,
            shots: default_fit_shots(),
            random_starts: default_starts(),
            max_iter: default_max_iter(),
        }
    }
}

impl MeasurementFitSection {
    fn validate(&self) -> Result<()> {
        self.tensor.validate(1e-9)?;
        if self.max_iter == 0 {
            return Err(Error::Config("measurement_fit.max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Experiments runnable from a config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Spectroscopy,
    CalibrateLru,
    LruTomography,
    RepeatedLru,
    ParityRounds,
    BellBench,
    ReadoutSim,
    FitMeasurementModel,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Spectroscopy,
        ExperimentKind::CalibrateLru,
        ExperimentKind::LruTomography,
        ExperimentKind::RepeatedLru,
        ExperimentKind::ParityRounds,
        ExperimentKind::BellBench,
        ExperimentKind::ReadoutSim,
        ExperimentKind::FitMeasurementModel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Spectroscopy => "spectroscopy",
            ExperimentKind::CalibrateLru => "calibrate-lru",
            ExperimentKind::LruTomography => "lru-tomography",
            ExperimentKind::RepeatedLru => "repeated-lru",
            ExperimentKind::ParityRounds => "parity-rounds",
            ExperimentKind::BellBench => "bell-bench",
            ExperimentKind::ReadoutSim => "readout-sim",
            ExperimentKind::FitMeasurementModel => "fit-measurement-model",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks the config for `kind` and fills every default it uses.
    pub fn resolve(&self, kind: ExperimentKind) -> Result<Self> {
        if let Some(e) = &self.experiment {
            if e != kind.name() {
                return Err(Error::Config(format!("config is for '{e}', not '{}'", kind.name())));
            }
        }
        let mut r = self.clone();
        r.experiment = Some(kind.name().to_string());
        r.numerics.options()?;
        let uses_system = matches!(
            kind,
            ExperimentKind::Spectroscopy | ExperimentKind::CalibrateLru | ExperimentKind::LruTomography
        );
        if uses_system {
            r.system = self.system.resolved()?;
        }
        let params = || self.system.params();
        match kind {
            ExperimentKind::Spectroscopy => {
                let s = self.spectroscopy.clone().unwrap_or_default().resolved(&params()?)?;
                s.validate()?;
                r.spectroscopy = Some(s);
            }
            ExperimentKind::CalibrateLru => {
                let s = self.calibration.clone().unwrap_or_default().resolved(&params()?)?;
                s.validate()?;
                r.calibration = Some(s);
            }
            ExperimentKind::LruTomography => {
                let s = self.tomography.clone().unwrap_or_default().resolved(&params()?)?;
                s.validate()?;
                r.tomography = Some(s);
            }
            ExperimentKind::RepeatedLru => {
                let s = self.repeated_lru.clone().unwrap_or_default().resolved()?;
                s.validate()?;
                r.repeated_lru = Some(s);
            }
            ExperimentKind::ParityRounds => {
                let s = self.parity_rounds.clone().unwrap_or_default();
                s.validate()?;
                r.parity_rounds = Some(s);
                r.noise = Some(self.noise.clone().unwrap_or_default().resolved()?);
            }
            ExperimentKind::BellBench => {
                let s = self.bell.clone().unwrap_or_default();
                s.validate()?;
                r.bell = Some(s);
                r.noise = Some(self.noise.clone().unwrap_or_default().resolved()?);
            }
            ExperimentKind::ReadoutSim => {
                let s = self.readout.clone().unwrap_or_default();
                s.validate()?;
                r.readout = Some(s);
            }
            ExperimentKind::FitMeasurementModel => {
                let s = self.measurement_fit.clone().unwrap_or_default();
                s.validate()?;
                r.measurement_fit = Some(s);
            }
        }
        Ok(r)
    }
}
