//! Experiment pipelines behind each subcommand.
//!
//! Runners only compute; files are produced in memory and written by the
//! caller once the whole experiment has succeeded.

use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::calibration::{
    calibration_map_2d, induced_leakage_rate, repeated_lru_rounds, rotation_for_leakage_rate, steady_state_leakage,
    write_contours_csv,
};
use crate::cli::config::{ExperimentConfig, ExperimentKind};
use crate::dynamics::{find_dips, spectroscopy_sweep_with, OpenSystem};
use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::model::dressed_transitions;
use crate::paritycheck::{
    bell_state_experiment, parity_assignment_experiment, run_parity_rounds_with, write_round_series_csv,
    RoundsOptions,
};
use crate::readout::{
    assignment_matrix_from_shots, fit_classifier, fit_measurement_tensor, simulate_calibration_shots,
    simulate_double_measurement, write_shots_csv, FitOptions, MeasurementTensor,
};
use crate::tomography::{characterize_lru, fit_ac_stark, stark_phases, write_density_csv, CARDINAL_STATES};

/// Result files and summary of one run.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Value,
}

impl Artifacts {
    fn csv(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.files.push((name.to_string(), buf));
        Ok(())
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }
}

fn write_rows(w: &mut Vec<u8>, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header)?;
    for r in rows {
        wr.write_record(&r)?;
    }
    wr.flush()?;
    Ok(())
}

/// Runs the experiment `kind` from a resolved config.
pub fn run_experiment(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<Artifacts> {
    match kind {
        ExperimentKind::Spectroscopy => spectroscopy(cfg),
        ExperimentKind::CalibrateLru => calibrate(cfg),
        ExperimentKind::LruTomography => tomography(cfg),
        ExperimentKind::RepeatedLru => repeated_lru(cfg),
        ExperimentKind::ParityRounds => parity_rounds(cfg),
        ExperimentKind::BellBench => bell(cfg),
        ExperimentKind::ReadoutSim => readout(cfg),
        ExperimentKind::FitMeasurementModel => fit_measurement(cfg),
    }
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T> {
    s.as_ref()
        .ok_or_else(|| Error::Config(format!("section [{name}] missing from resolved config")))
}

fn spectroscopy(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let s = section(&cfg.spectroscopy, "spectroscopy")?;
    let params = cfg.system.params()?;
    let system = OpenSystem::new(&params)?;
    let points = spectroscopy_sweep_with(&system, &s.pulse(), &s.grid(), &cfg.numerics.options()?)?;
    let dips = find_dips(&points, s.min_prominence)?;
    let (lo, hi) = dressed_transitions(&params)?.f_pair();

    let mut out = Artifacts::default();
    out.csv("spectroscopy.csv", |w| {
        write_rows(
            w,
            &["frequency", "p_f"],
            points.iter().map(|p| vec![fmt_f64(p.frequency), fmt_f64(p.p_f)]),
        )
    })?;
    let separation = (dips.len() == 2).then(|| dips[1].frequency - dips[0].frequency);
    out.summary = json!({
        "n_dips": dips.len(),
        "dips": dips,
        "dip_separation": separation,
        "exact_gaps": [lo, hi],
        "min_p_f": points.iter().map(|p| p.p_f).fold(f64::INFINITY, f64::min),
    });
    Ok(out)
}

fn calibrate(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let s = section(&cfg.calibration, "calibration")?;
    let system = OpenSystem::new(&cfg.system.params()?)?;
    let (a1, a2) = (s.axis1.grid(), s.axis2.grid());
    let map = calibration_map_2d(&system, &s.base_pulse(), &a1, &a2, &cfg.numerics.options()?)?;
    let contours = map.contours(&s.levels);
    let (i, j, best) = map.argmax();

    let mut out = Artifacts::default();
    out.csv("calibration_map.csv", |w| map.write_csv(w))?;
    out.csv("contours.csv", |w| write_contours_csv(&contours, a1.axis, a2.axis, w))?;
    let area = |level: f64| {
        let n = map.values.iter().flatten().filter(|&&v| v >= level).count();
        n as f64 / (a1.values.len() * a2.values.len()) as f64
    };
    out.summary = json!({
        "max_removal": best,
        "argmax": { a1.axis.name(): a1.values[i], a2.axis.name(): a2.values[j] },
        "contours": contours.iter().map(|c| json!({
            "level": c.level,
            "polylines": c.polylines.len(),
            "points": c.polylines.iter().map(|p| p.len()).sum::<usize>(),
            "grid_fraction_above": area(c.level),
        })).collect::<Vec<_>>(),
    });
    Ok(out)
}

fn tomography(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let s = section(&cfg.tomography, "tomography")?;
    let system = OpenSystem::new(&cfg.system.params()?)?;
    let opts = cfg.numerics.options()?;
    let pulse = s.pulse();
    let ch = characterize_lru(&system, &[pulse], &opts)?;
    let phases = stark_phases(&system, &[pulse], &s.stark_durations, &opts)?;
    let stark = fit_ac_stark(&s.stark_durations, &phases)?;

    let mut out = Artifacts::default();
    out.csv("ptm.csv", |w| ch.process.ptm.write_csv(w))?;
    out.csv("ptm_corrected.csv", |w| ch.corrected.write_csv(w))?;
    out.csv("stark.csv", |w| {
        write_rows(
            w,
            &["duration", "phase"],
            s.stark_durations
                .iter()
                .zip(&phases)
                .map(|(t, p)| vec![fmt_f64(*t), fmt_f64(*p)]),
        )
    })?;
    let states: Vec<_> = CARDINAL_STATES
        .iter()
        .zip(&ch.process.outputs)
        .map(|((l, _), o)| (l.to_string(), o.state))
        .collect();
    out.csv("density.csv", |w| write_density_csv(&states, w))?;
    out.summary = json!({
        "f_avg": ch.fidelity_corrected,
        "f_avg_uncorrected": ch.fidelity_uncorrected,
        "z_angle": ch.z_fit.angle,
        "z_angle_spread": ch.z_fit.angle_spread,
        "off_block": ch.z_fit.off_block,
        "mean_leakage": ch.process.mean_leakage(),
        "stark_shift_khz": stark.shift,
        "stark_r_squared": stark.r_squared,
    });
    Ok(out)
}

fn repeated_lru(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let s = section(&cfg.repeated_lru, "repeated_lru")?;
    let model = s.model()?;
    let off = repeated_lru_rounds(&model, s.rounds, false);
    let on = repeated_lru_rounds(&model, s.rounds, true);
    let theta = rotation_for_leakage_rate(model.leakage_rate.min(0.5))?;

    let mut out = Artifacts::default();
    out.csv("repeated_lru.csv", |w| {
        write_rows(
            w,
            &["round", "p_f_no_lru", "p_f_lru"],
            off.iter()
                .zip(&on)
                .enumerate()
                .map(|(t, (a, b))| vec![(t + 1).to_string(), fmt_f64(*a), fmt_f64(*b)]),
        )
    })?;
    out.summary = json!({
        "leakage_rate": model.leakage_rate,
        "seepage_rate": model.seepage_rate,
        "lru_removal": model.lru_removal,
        "effective_seepage": model.effective_seepage(true),
        "steady_state_no_lru": steady_state_leakage(&model, false)?,
        "steady_state_lru": steady_state_leakage(&model, true)?,
        "final_no_lru": off.last(),
        "final_lru": on.last(),
        "injection_angle": theta,
        "injection_check": induced_leakage_rate(theta),
    });
    Ok(out)
}

fn parity_rounds(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let s = section(&cfg.parity_rounds, "parity_rounds")?;
    let noise = section(&cfg.noise, "noise")?.noise()?;
    let series = s
        .lru_modes
        .iter()
        .map(|&mode| {
            let mut o = RoundsOptions::new(s.rounds, mode, s.trajectories, cfg.seed);
            o.data_state = s.data_state;
            run_parity_rounds_with(&noise, &o)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = Artifacts::default();
    out.csv("parity_rounds.csv", |w| write_round_series_csv(&series, w))?;
    let tail = |v: &[f64]| {
        let k = v.len().min(5);
        v[v.len() - k..].iter().sum::<f64>() / k as f64
    };
    let mut modes = serde_json::Map::new();
    for sr in &series {
        let last = sr.leakage.last().copied().unwrap_or_default();
        modes.insert(
            sr.lru_mode.name().to_string(),
            json!({
                "round_duration": sr.round_duration,
                "defect_curve": sr.defect_prob,
                "defect_final_mean5": tail(&sr.defect_prob),
                "steady_pf_d1": last.d1_f,
                "steady_pf_d2": last.d2_f,
                "steady_pf_a": last.a_f,
                "steady_ph_a": last.a_h,
            }),
        );
    }
    out.summary = json!({
        "rounds": s.rounds,
        "trajectories": s.trajectories,
        "modes": modes,
    });
    Ok(out)
}

fn bell(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let s = section(&cfg.bell, "bell")?;
    let noise = section(&cfg.noise, "noise")?.noise()?;
    let assignment = parity_assignment_experiment(&noise)?;
    let runs = s
        .checks
        .iter()
        .map(|&n| bell_state_experiment(&noise, n))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Artifacts::default();
    out.csv("parity_assignment.csv", |w| {
        write_rows(
            w,
            &["input", "expected", "mean_outcome", "fidelity"],
            assignment.inputs.iter().map(|i| {
                vec![
                    i.input.clone(),
                    i.expected.to_string(),
                    fmt_f64(i.mean_outcome),
                    fmt_f64(i.fidelity),
                ]
            }),
        )
    })?;
    out.csv("bell.csv", |w| {
        write_rows(
            w,
            &["n_checks", "m1", "probability", "fidelity"],
            runs.iter().flat_map(|r| {
                r.branches.iter().map(move |b| {
                    vec![
                        r.n_checks.to_string(),
                        b.m1.to_string(),
                        fmt_f64(b.probability),
                        fmt_f64(b.fidelity),
                    ]
                })
            }),
        )
    })?;
    out.summary = json!({
        "parity_assignment_fidelity": assignment.mean_fidelity,
        "bell": runs.iter().map(|r| json!({
            "n_checks": r.n_checks,
            "mean_fidelity": r.mean_fidelity,
            "p_m2_plus": r.p_m2_plus,
        })).collect::<Vec<_>>(),
    });
    Ok(out)
}

fn readout(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let s = section(&cfg.readout, "readout")?;
    let mut out = Artifacts::default();
    let mut errors = serde_json::Map::new();
    let mut matrices = Vec::new();
    let largest = *s.state_counts.iter().max().expect("validated non-empty");
    for &n in &s.state_counts {
        let model = s.model.restricted(n)?;
        let train = simulate_calibration_shots(&model, s.shots_per_state, cfg.seed)?;
        let (classifier, _) = fit_classifier(&train, &model.states)?;
        // Independent shots for the confusion matrix.
        let test = simulate_calibration_shots(&model, s.shots_per_state, cfg.seed.wrapping_add(1))?;
        let m = assignment_matrix_from_shots(&classifier, &test)?;
        errors.insert(format!("{n}_state"), json!(m.mean_error()));
        if n == largest {
            out.csv("readout_shots.csv", |w| write_shots_csv(&test, &classifier, w))?;
        }
        matrices.push((n, m));
    }
    out.csv("assignment_matrix.csv", |w| {
        write_rows(
            w,
            &["n_states", "prepared", "declared", "probability"],
            matrices.iter().flat_map(|(n, m)| {
                let labels = &m.labels;
                (0..labels.len()).flat_map(move |i| {
                    (0..labels.len())
                        .map(move |j| vec![n.to_string(), labels[i].clone(), labels[j].clone(), fmt_f64(m.m[(i, j)])])
                })
            }),
        )
    })?;
    out.summary = json!({
        "shots_per_state": s.shots_per_state,
        "mean_assignment_error": errors,
    });
    Ok(out)
}

/// Joint frequencies as rows `input, m0, m1, frequency`.
pub fn read_joint_frequencies<R: std::io::Read>(r: R) -> Result<Vec<DMatrix<f64>>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut rows: Vec<(usize, usize, usize, f64)> = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        if rec.len() != 4 {
            return Err(Error::Config("joint frequency rows need 4 fields".into()));
        }
        let idx = |k: usize| {
            rec[k]
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::Config(format!("bad index '{}': {e}", &rec[k])))
        };
        let v = rec[3]
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::Config(format!("bad frequency '{}': {e}", &rec[3])))?;
        rows.push((idx(0)?, idx(1)?, idx(2)?, v));
    }
    let n = rows.iter().map(|r| r.0.max(r.1).max(r.2) + 1).max().unwrap_or(0);
    if n == 0 {
        return Err(Error::InsufficientData("no joint frequencies".into()));
    }
    let mut out = vec![DMatrix::<f64>::zeros(n, n); n];
    for (i, a, b, v) in rows {
        out[i][(a, b)] = v;
    }
    Ok(out)
}

fn write_joint(w: &mut Vec<u8>, data: &[DMatrix<f64>]) -> Result<()> {
    let n = data.len();
    write_rows(
        w,
        &["input", "m0", "m1", "frequency"],
        (0..n).flat_map(|i| {
            (0..n).flat_map(move |a| {
                (0..n).map(move |b| vec![i.to_string(), a.to_string(), b.to_string(), fmt_f64(data[i][(a, b)])])
            })
        }),
    )
}

fn fit_measurement(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let s = section(&cfg.measurement_fit, "measurement_fit")?;
    let truth: Option<&MeasurementTensor> = s.joint_frequencies.is_none().then_some(&s.tensor);
    let data: Vec<DMatrix<f64>> = match &s.joint_frequencies {
        Some(path) => {
            let f = std::fs::File::open(path)
                .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
            read_joint_frequencies(f)?
        }
        None => (0..s.tensor.levels())
            .map(|i| {
                if s.shots == 0 {
                    Ok(s.tensor.joint_probabilities(i))
                } else {
                    simulate_double_measurement(&s.tensor, i, s.shots, cfg.seed.wrapping_add(i as u64))
                }
            })
            .collect::<Result<_>>()?,
    };
    let fit = fit_measurement_tensor(
        &data,
        &FitOptions {
            random_starts: s.random_starts,
            seed: cfg.seed,
            max_iter: s.max_iter,
        },
    )?;
    let n = fit.tensor.levels();
    let labels: Vec<String> = (0..n).map(crate::model::level_name).collect();
    let derived = fit.tensor.derived_matrices(&labels)?;

    let mut out = Artifacts::default();
    out.csv("joint_frequencies.csv", |w| write_joint(w, &data))?;
    out.csv("measurement_tensor.csv", |w| fit.tensor.write_csv(w))?;
    let max_error = truth.map(|t| {
        let mut worst = 0.0f64;
        for i in 0..n {
            for m in 0..n {
                for j in 0..n {
                    worst = worst.max((t.get(i, m, j) - fit.tensor.get(i, m, j)).abs());
                }
            }
        }
        worst
    });
    out.summary = json!({
        "residual": fit.residual,
        "spread": fit.spread,
        "starts": fit.starts,
        "warning": fit.warning,
        "max_abs_error": max_error,
        "derived": derived,
    });
    Ok(out)
}
