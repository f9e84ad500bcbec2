//! Driven-pulse behaviour of the transmon model.

use transmon_lru::calibration::pulse_removal;
use transmon_lru::dynamics::{
    evolve_durations, frame_frequency, initial_state, simulate_lru_pulse_with, EvolveOptions, OpenSystem, PulseParams,
};
use transmon_lru::linalg::hermiticity_defect;
use transmon_lru::model::{dressed_transitions, Preset, SystemParams};

fn lru_pulse(p: &SystemParams) -> PulseParams {
    PulseParams::new(5.0, dressed_transitions(p).unwrap().f_pair().0 - 0.03)
}

#[test]
fn driven_states_stay_physical() {
    let p = Preset::A.params();
    let sys = OpenSystem::new(&p).unwrap();
    let rho0 = initial_state(&sys, "f").unwrap();
    let durations: Vec<f64> = (3..=11).map(|k| 20.0 * k as f64).collect();
    let runs = evolve_durations(&sys, &[lru_pulse(&p)], &durations, &rho0, &EvolveOptions::sampled(5.0)).unwrap();
    let nt = p.n_transmon_levels;
    for r in &runs {
        let s = &r.final_state;
        assert!((s.trace() - 1.0).abs() < 1e-7);
        assert!(hermiticity_defect(&s.rho) < 1e-7);
        assert!(s.min_eigenvalue() > -1e-6, "{}", s.min_eigenvalue());
        for row in &r.populations {
            let marginal: f64 = row[row.len() - nt..].iter().sum();
            assert!((marginal - 1.0).abs() < 1e-7);
        }
    }
}

#[test]
fn undriven_f_decays_at_twice_the_qubit_rate() {
    let p = Preset::A.params();
    let sys = OpenSystem::new(&p).unwrap();
    let pulse = lru_pulse(&p).with_amplitude(0.0);
    let r = simulate_lru_pulse_with(&sys, &[pulse], "f", &EvolveOptions::default()).unwrap();
    let expect = (-pulse.duration * 2.0 / p.t1).exp();
    let got = r.final_population("f").unwrap();
    assert!((got - expect).abs() < 1e-3, "{got} vs {expect}");
}

#[test]
fn tuned_pulse_empties_f() {
    let p = Preset::A.params();
    let sys = OpenSystem::new(&p).unwrap();
    let r = simulate_lru_pulse_with(&sys, &[lru_pulse(&p)], "f", &EvolveOptions::default()).unwrap();
    assert!(r.final_population("f").unwrap() <= 0.01);
}

#[test]
fn far_detuned_pulse_barely_removes() {
    let p = Preset::A.params();
    let sys = OpenSystem::new(&p).unwrap();
    let pulse = lru_pulse(&p);
    let detuned = pulse.with_frequency(pulse.frequency + 1.0);
    let step = 0.5 * sys.default_step(frame_frequency(&sys, &[detuned]), &[detuned]);
    let opts = EvolveOptions {
        step: Some(step),
        ..EvolveOptions::checked()
    };
    let r = pulse_removal(&sys, &detuned, &opts).unwrap();
    let baseline = pulse_removal(&sys, &detuned.with_amplitude(0.0), &EvolveOptions::default()).unwrap();
    assert!(r.value < 0.05, "{}", r.value);
    assert!((r.value - baseline.value).abs() < 0.01);
}

/// f- and h-LRU calibrated together in a six-level transmon: with four levels
/// the strong f-drive pushes |h⟩, the top level, by hundreds of MHz.
#[test]
fn h_drive_leaves_f_removal_unchanged() {
    let p = SystemParams {
        n_transmon_levels: 6,
        ..Preset::A.params()
    };
    let sys = OpenSystem::new(&p).unwrap();
    let f = PulseParams::new(5.0, 4.0575);
    let h = PulseParams::new(2.0, 3.405);
    let opts = EvolveOptions::default();
    let only_f = simulate_lru_pulse_with(&sys, &[f], "f", &opts).unwrap();
    let both = simulate_lru_pulse_with(&sys, &[f, h], "f", &opts).unwrap();
    let (a, b) = (only_f.final_population("f").unwrap(), both.final_population("f").unwrap());
    assert!(a < 0.01 && (a - b).abs() < 0.01, "{a} vs {b}");
    let h_left = simulate_lru_pulse_with(&sys, &[f, h], "h", &opts).unwrap();
    assert!(h_left.final_population("h").unwrap() < 0.1);
}
