//! End-to-end runs of the `transmon-lru` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

use transmon_lru::cli::{emit_plot_data, from_long, to_long, Table};

const BIN: &str = env!("CARGO_BIN_EXE_transmon-lru");

const FAST_CALIBRATION: &str = r#"
[calibration]
axis1 = { axis = "duration", start = 120.0, stop = 280.0, points = 3 }
axis2 = { axis = "amplitude", start = 1.0, stop = 5.0, points = 3 }
"#;

const FAST_PARITY: &str = r#"
seed = 11
[parity_rounds]
rounds = 6
trajectories = 200
lru_modes = ["none", "both"]
"#;

/// Runs `sub` with `config`, writing into a fresh directory under `dir`.
fn run(sub: &str, dir: &Path, config: &str, extra: &[&str]) -> (i32, PathBuf) {
    let k = fs::read_dir(dir).unwrap().count();
    let cfg = dir.join(format!("{sub}-{k}.toml"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("out-{sub}-{k}"));
    let status = Command::new(BIN)
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    (status.status.code().unwrap(), out)
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn invalid_config_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let (code, out) = run("spectroscopy", dir.path(), "[system]\npurcell_linewidth = -0.02\n", &[]);
    assert_eq!(code, 2);
    assert!(!out.exists());

    let (code, out) = run("spectroscopy", dir.path(), "[spectroscopy]\nbogus = 1\n", &[]);
    assert_eq!(code, 2);
    assert!(!out.exists());

    let (code, out) = run("readout-sim", dir.path(), "experiment = \"bell-bench\"\n", &[]);
    assert_eq!(code, 2);
    assert!(!out.exists());
}

#[test]
fn numerical_failure_leaves_only_a_diagnostic() {
    let dir = TempDir::new().unwrap();
    let cfg = "seed = 5\n[numerics]\nstep = 1.0\n[spectroscopy]\npoints = 5\n";
    let (code, out) = run("spectroscopy", dir.path(), cfg, &[]);
    assert_eq!(code, 3);
    let names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names, ["diagnostic.json"]);
    let d: Value = serde_json::from_str(&fs::read_to_string(out.join("diagnostic.json")).unwrap()).unwrap();
    assert_eq!(d["subcommand"], "spectroscopy");
    assert_eq!(d["seed"], 5);
    assert_eq!(d["kind"], "non_convergent");
}

#[test]
fn same_config_and_seed_give_identical_files() {
    let dir = TempDir::new().unwrap();
    let (a_code, a) = run("parity-rounds", dir.path(), FAST_PARITY, &[]);
    let (b_code, b) = run("parity-rounds", dir.path(), FAST_PARITY, &["--threads", "3"]);
    assert_eq!((a_code, b_code), (0, 0));
    for f in ["parity_rounds.csv", "parity_rounds.plot.csv", "summary.json"] {
        assert!(fs::read(a.join(f)).unwrap() == fs::read(b.join(f)).unwrap(), "{f}");
    }

    let (_, c) = run("parity-rounds", dir.path(), FAST_PARITY, &["--seed", "12"]);
    assert!(fs::read(a.join("parity_rounds.csv")).unwrap() != fs::read(c.join("parity_rounds.csv")).unwrap());
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    let (code, first) = run("readout-sim", dir.path(), "seed = 3\n[readout]\nshots_per_state = 2000\n", &[]);
    assert_eq!(code, 0);
    let resolved = fs::read_to_string(first.join("resolved_config.toml")).unwrap();
    assert!(resolved.contains("experiment = \"readout-sim\""));
    let (code, second) = run("readout-sim", dir.path(), &resolved, &[]);
    assert_eq!(code, 0);
    assert_ne!(first, second);
    for f in ["assignment_matrix.csv", "readout_shots.csv", "summary.json"] {
        assert!(fs::read(first.join(f)).unwrap() == fs::read(second.join(f)).unwrap(), "{f}");
    }
    // Only the output location differs.
    let strip = |p: &Path| {
        fs::read_to_string(p.join("resolved_config.toml"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("output = "))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&first), strip(&second));
}

#[test]
fn plot_files_round_trip_to_the_results() {
    let dir = TempDir::new().unwrap();
    let (code, out) = run("calibrate-lru", dir.path(), FAST_CALIBRATION, &[]);
    assert_eq!(code, 0);
    for f in ["calibration_map", "contours"] {
        let source = fs::read(out.join(format!("{f}.csv"))).unwrap();
        let long = Table::read(fs::read(out.join(format!("{f}.plot.csv"))).unwrap().as_slice()).unwrap();
        assert_eq!(long.header, ["series", "x", "y"]);
        assert_eq!(from_long(&long).unwrap(), Table::read(source.as_slice()).unwrap());
    }
    let s = summary(&out);
    let levels: Vec<f64> = s["contours"].as_array().unwrap().iter().map(|c| c["level"].as_f64().unwrap()).collect();
    assert_eq!(levels, [0.80, 0.90, 0.97]);
    assert!(s["max_removal"].as_f64().unwrap() <= 1.0);
}

#[test]
fn unknown_files_have_no_plot_schema() {
    let t = Table::read("a,b\n1,2\n".as_bytes()).unwrap();
    assert!(to_long("mystery.csv", &t).is_err());
    assert!(emit_plot_data("mystery.csv", b"a,b\n1,2\n").is_err());
}

#[test]
fn every_subcommand_produces_its_files() {
    let dir = TempDir::new().unwrap();
    let cases: [(&str, &str, &[&str]); 6] = [
        ("repeated-lru", "", &["repeated_lru.csv"]),
        ("parity-rounds", FAST_PARITY, &["parity_rounds.csv"]),
        ("bell-bench", "", &["parity_assignment.csv", "bell.csv"]),
        (
            "readout-sim",
            "[readout]\nshots_per_state = 500\nstate_counts = [2, 4]\n",
            &["readout_shots.csv", "assignment_matrix.csv"],
        ),
        (
            "fit-measurement-model",
            "[measurement_fit]\nshots = 4096\nrandom_starts = 2\n",
            &["joint_frequencies.csv", "measurement_tensor.csv"],
        ),
        (
            "lru-tomography",
            "[tomography]\nstark_durations = [120.0, 125.0, 130.0]\n",
            &["ptm.csv", "ptm_corrected.csv", "stark.csv", "density.csv"],
        ),
    ];
    for (sub, cfg, files) in cases {
        let (code, out) = run(sub, dir.path(), cfg, &[]);
        assert_eq!(code, 0, "{sub}");
        for f in files {
            assert!(out.join(f).is_file(), "{sub}: {f}");
            let stem = f.trim_end_matches(".csv");
            assert!(out.join(format!("{stem}.plot.csv")).is_file(), "{sub}: {stem}.plot.csv");
        }
        assert!(out.join("summary.json").is_file());
        assert!(out.join("resolved_config.toml").is_file());
    }
}

#[test]
fn measured_joint_frequencies_can_be_fitted() {
    let dir = TempDir::new().unwrap();
    let (code, sim) = run("fit-measurement-model", dir.path(), "[measurement_fit]\nshots = 0\nrandom_starts = 2\n", &[]);
    assert_eq!(code, 0);
    let data = sim.join("joint_frequencies.csv");
    let cfg = format!("[measurement_fit]\njoint_frequencies = {:?}\nrandom_starts = 2\n", data.display().to_string());
    let (code, out) = run("fit-measurement-model", dir.path(), &cfg, &[]);
    assert_eq!(code, 0);
    let s = summary(&out);
    assert!(s["max_abs_error"].is_null());
    assert!(s["residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn help_lists_all_subcommands() {
    let out = Command::new(BIN).arg("--help").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in [
        "spectroscopy",
        "calibrate-lru",
        "lru-tomography",
        "repeated-lru",
        "parity-rounds",
        "bell-bench",
        "readout-sim",
        "fit-measurement-model",
    ] {
        assert!(text.contains(sub), "{sub}");
    }
}

#[test]
fn shipped_configs_resolve() {
    use transmon_lru::cli::{ExperimentConfig, ExperimentKind};
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for kind in ExperimentKind::ALL {
        let path = dir.join(format!("{}.toml", kind.name()));
        let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.resolve(kind).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
