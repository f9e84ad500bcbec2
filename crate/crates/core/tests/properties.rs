//! Property tests of the model invariants.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;

use transmon_lru::calibration::{removal_fraction, repeated_lru_rounds, repeated_lru_rounds_from, steady_state_leakage, LeakageRoundModel};
use transmon_lru::model::{build_static_hamiltonian, f_transition_frequency, h_transition_frequency, Preset};
use transmon_lru::paritycheck::{
    run_parity_rounds_with, ChannelSpec, LruMode, NoiseConfig, RotationAxis, RoundsOptions, ANCILLA, REGISTER_DIMS,
};
use transmon_lru::readout::{
    assignment_matrix_from_shots, correct_populations, fit_classifier, fit_measurement_tensor,
    simulate_calibration_shots, AssignmentMatrix, FitOptions, MeasurementTensor, ReadoutModel,
};

fn row_stochastic(m: &DMatrix<f64>, tol: f64) -> bool {
    m.iter().all(|v| *v >= -tol) && m.row_iter().all(|r| (r.sum() - 1.0).abs() < tol)
}

fn preset() -> impl Strategy<Value = Preset> {
    prop_oneof![Just(Preset::D1), Just(Preset::A), Just(Preset::D2)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hamiltonian_is_hermitian(
        p in preset(),
        g in 0.01f64..0.3,
        j in 0.001f64..0.05,
        alpha in -0.4f64..-0.1,
        levels in 3usize..5,
    ) {
        let mut s = p.params();
        s.tr_coupling = g;
        s.rp_coupling = j;
        s.anharmonicity = alpha;
        s.n_transmon_levels = levels;
        let h = build_static_hamiltonian(&s).unwrap();
        prop_assert!(h.is_hermitian(1e-12));
    }

    #[test]
    fn h_and_f_transitions_differ_by_twice_alpha(p in preset(), alpha in -0.4f64..-0.1) {
        let mut s = p.params();
        s.anharmonicity = alpha;
        s.n_transmon_levels = 4;
        let d = h_transition_frequency(&s).unwrap() - f_transition_frequency(&s);
        prop_assert!((d - 2.0 * alpha).abs() < 1e-12);
    }

    #[test]
    fn derived_matrices_are_row_stochastic(n in 2usize..5, bias in 0.0f64..20.0, seed in any::<u64>()) {
        let t = MeasurementTensor::random(n, bias, &mut ChaCha8Rng::seed_from_u64(seed));
        let labels: Vec<String> = (0..n).map(transmon_lru::model::level_name).collect();
        let d = t.derived_matrices(&labels).unwrap();
        prop_assert!(row_stochastic(&d.assignment.m, 1e-9));
        prop_assert!(row_stochastic(&d.qnd, 1e-9));
    }

    #[test]
    fn correcting_an_applied_assignment_is_identity(
        n in 2usize..5,
        err in 0.0f64..0.2,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let w: Vec<f64> = (0..n).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
            let s: f64 = (0..n).filter(|&j| j != i).map(|j| w[j]).sum();
            for j in 0..n {
                m[(i, j)] = if i == j { 1.0 - err } else if s > 0.0 { err * w[j] / s } else { err / (n - 1) as f64 };
            }
        }
        let labels: Vec<String> = (0..n).map(|k| k.to_string()).collect();
        let a = AssignmentMatrix::new(labels, m).unwrap();
        let raw: Vec<f64> = (0..n).map(|_| rand::Rng::random::<f64>(&mut rng) + 0.01).collect();
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let back = correct_populations(&a.apply(&p), &a).unwrap();
        prop_assert!(back.clipped < 1e-12);
        for (x, y) in back.values.iter().zip(&p) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn compiled_channels_are_cptp(
        target in 0usize..3,
        angle in -6.3f64..6.3,
        error in 0.0f64..0.2,
        leakage in 0.0f64..0.05,
        mobility in 0.0f64..0.5,
        phase in -3.2f64..3.2,
        r_f in 0.0f64..1.0,
        r_h in 0.0f64..1.0,
        t1 in 1e3f64..1e5,
        t2_frac in 0.1f64..2.0,
        inject in 0.0f64..0.1,
    ) {
        let t2 = t1 * t2_frac;
        let specs = [
            ChannelSpec::SingleQubitRotation { target, axis: RotationAxis::Y, angle, error },
            ChannelSpec::Cz { high: ANCILLA, low: if target == ANCILLA { 0 } else { target }, leakage, error, mobility, leaked_phase: phase },
            ChannelSpec::Idle { target, duration: 340.0, t1, t2 },
            ChannelSpec::Lru {
                target, r_f, r_h: if target == ANCILLA { r_h } else { 0.0 }, stark_phase: phase, corrected: false,
                duration: 220.0, t1, t2, injected_leakage: inject,
            },
            ChannelSpec::Echo { target, error },
            ChannelSpec::LeakageInjection { target, probability: inject },
        ];
        for s in &specs {
            let ch = s.compile(&REGISTER_DIMS).unwrap();
            prop_assert!(ch.cptp_defect() < 1e-9, "{s:?}: {}", ch.cptp_defect());
        }
    }

    #[test]
    fn markov_recursion_reaches_steady_state(
        l1 in 1e-3f64..0.3,
        s in 1e-2f64..0.5,
        r in 0.0f64..1.0,
        lru_on in any::<bool>(),
    ) {
        let m = LeakageRoundModel::new(l1, s).unwrap().with_lru(r).unwrap();
        let p = repeated_lru_rounds(&m, 5000, lru_on);
        let ss = steady_state_leakage(&m, lru_on).unwrap();
        prop_assert!((p.last().unwrap() - ss).abs() < 1e-12);
    }

    #[test]
    fn markov_distance_shrinks_geometrically(
        l1 in 1e-3f64..0.3,
        s in 1e-2f64..0.5,
        r in 0.0f64..1.0,
        p0 in 0.0f64..1.0,
    ) {
        let m = LeakageRoundModel::new(l1, s).unwrap().with_lru(r).unwrap();
        let ss = steady_state_leakage(&m, true).unwrap();
        let ratio = 1.0 - l1 - m.effective_seepage(true);
        let mut prev = p0;
        for p in repeated_lru_rounds_from(&m, p0, 40, true) {
            prop_assert!((p - ss).abs() <= (prev - ss).abs() + 1e-15);
            prop_assert!(((p - ss) - ratio * (prev - ss)).abs() < 1e-12);
            prev = p;
        }
    }

    #[test]
    fn removal_fraction_is_scale_invariant(p0 in 1e-3f64..1.0, frac in 0.0f64..1.0, k in 0.01f64..1.0) {
        let a = removal_fraction(p0, p0 * frac).unwrap().value;
        let b = removal_fraction(k * p0, k * p0 * frac).unwrap().value;
        prop_assert!((a - b).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn tensor_fit_recovers_exact_probabilities(n in 2usize..4, seed in any::<u64>()) {
        let t = MeasurementTensor::random(n, 10.0, &mut ChaCha8Rng::seed_from_u64(seed));
        let data: Vec<_> = (0..n).map(|i| t.joint_probabilities(i)).collect();
        let fit = fit_measurement_tensor(&data, &FitOptions { seed, ..Default::default() }).unwrap();
        for i in 0..n {
            for m in 0..n {
                for j in 0..n {
                    prop_assert!((fit.tensor.get(i, m, j) - t.get(i, m, j)).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn two_gaussian_overlap_matches_erfc(d in 1.0f64..4.0, sigma in 0.5f64..2.0, seed in any::<u64>()) {
        let model = ReadoutModel {
            states: vec!["g".into(), "e".into()],
            means: vec![[0.0, 0.0], [d * sigma, 0.0]],
            covariances: vec![[[sigma * sigma, 0.0], [0.0, sigma * sigma]]; 2],
        };
        let n = 100_000;
        let train = simulate_calibration_shots(&model, n, seed).unwrap();
        let (c, _) = fit_classifier(&train, &model.states).unwrap();
        let test = simulate_calibration_shots(&model, n, seed.wrapping_add(7)).unwrap();
        let m = assignment_matrix_from_shots(&c, &test).unwrap();
        let p = 0.5 * erfc(d / (2.0 * 2f64.sqrt()));
        // Mean of two independent binomial estimates.
        let se = (p * (1.0 - p) / (2.0 * n as f64)).sqrt();
        prop_assert!((m.mean_error() - p).abs() < 3.0 * se, "{} vs {p}", m.mean_error());
    }

    #[test]
    fn removal_lowers_steady_ancilla_leakage(r1 in 0.1f64..0.5, gap in 0.2f64..0.5) {
        let run = |r_f: f64| {
            let mut noise = NoiseConfig::device();
            noise.ancilla.r_f = r_f;
            let s = run_parity_rounds_with(&noise, &RoundsOptions::new(20, LruMode::Both, 0, 0)).unwrap();
            s.leakage.last().unwrap().a_f
        };
        prop_assert!(run(r1 + gap) < run(r1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn trajectories_agree_with_exact_run(seed in any::<u64>(), mode in prop_oneof![Just(LruMode::None), Just(LruMode::Both)]) {
        let noise = NoiseConfig::device();
        let exact = run_parity_rounds_with(&noise, &RoundsOptions::new(12, mode, 0, 0)).unwrap();
        let n = 2000;
        let mc = run_parity_rounds_with(&noise, &RoundsOptions::new(12, mode, n, seed)).unwrap();
        let tol = 3.0 / (n as f64).sqrt();
        for (a, b) in exact.defect_prob.iter().zip(&mc.defect_prob) {
            prop_assert!((a - b).abs() < tol, "{a} vs {b}");
        }
        for (a, b) in exact.leakage.iter().zip(&mc.leakage) {
            prop_assert!((a.d1_f - b.d1_f).abs() < tol);
            prop_assert!((a.a_total() - b.a_total()).abs() < tol);
        }
    }

    #[test]
    fn reduced_simulation_follows_markov_model(l1 in 0.005f64..0.05, r in 0.5f64..1.0) {
        let mut noise = NoiseConfig::noiseless();
        noise.injected_leakage = l1;
        noise.ancilla.r_f = r;
        let rounds = 30;
        let both = run_parity_rounds_with(&noise, &RoundsOptions::new(rounds, LruMode::Both, 0, 0)).unwrap();
        let model = LeakageRoundModel::new(l1, 0.0).unwrap().with_lru(r).unwrap();
        let markov = repeated_lru_rounds(&model, rounds, true);
        for (a, b) in both.leakage.iter().zip(&markov) {
            prop_assert!((a.a_f - b).abs() < 1e-6, "{} vs {b}", a.a_f);
        }
        let none = run_parity_rounds_with(&noise, &RoundsOptions::new(rounds, LruMode::None, 0, 0)).unwrap();
        for (t, a) in none.leakage.iter().enumerate() {
            let expect = 1.0 - (1.0 - l1).powi(t as i32 + 1);
            prop_assert!((a.a_f - expect).abs() < 1e-6, "{} vs {expect}", a.a_f);
        }
    }
}
