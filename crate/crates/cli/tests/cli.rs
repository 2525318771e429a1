//! End-to-end checks of the command-line surface: exit codes, output
//! shapes, and bit-identical reruns.

use std::path::Path;
use std::process::Command;

fn pulsegate() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pulsegate"))
}

/// Small three-mode device keeps these tests fast; physics quality is
/// covered by the core suites.
fn tiny_config(extra: &str) -> String {
    format!(
        r#"
schema = 1
seed = 7

[device]
[[device.modes]]
label = "q1"
frequency_ghz = 4.0
anharmonicity_ghz = -0.2
levels = 3

[[device.modes]]
label = "q2"
frequency_ghz = 4.7
anharmonicity_ghz = -0.2
levels = 3

[[device.modes]]
label = "qc"
frequency_ghz = 6.0
anharmonicity_ghz = -0.4
levels = 3

[[device.couplings]]
mode_a = "q1"
mode_b = "qc"
strength_ghz = 0.1

[[device.couplings]]
mode_a = "q2"
mode_b = "qc"
strength_ghz = 0.1

[drives]
amplitude_mhz = 100.0
detuning_mhz = -25.0
frequencies_ghz = [7.575, 6.875]
pair = ["q1", "q2"]
coupler = "qc"

[pulse]
gamma_ns = 30.0
duration_ns = 60.0

[propagation]
rtol = 1e-7
atol = 1e-9

{extra}
"#
    )
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn unknown_keys_are_rejected_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "schema = 1\nbogus_key = 3\n");
    let out = pulsegate()
        .args(["zz-map", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn empty_sweep_range_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let body = tiny_config("[sweep]\nomega1_ghz = [4.0, 4.2]\nomega2_ghz = [4.6, 4.8]\ngrid = [0, 3]\n");
    let cfg = write_config(dir.path(), &body);
    let out = pulsegate()
        .args(["zz-map", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn zz_map_rows_and_deterministic_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let body = tiny_config(
        "[sweep]\nomega1_ghz = [3.9, 4.1]\nomega2_ghz = [4.6, 4.8]\ngrid = [5, 5]\n",
    );
    let cfg = write_config(dir.path(), &body);
    let run = |out_dir: &Path, threads: &str| {
        let st = pulsegate()
            .args(["zz-map", "--threads", threads, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out_dir)
            .status()
            .unwrap();
        assert!(st.success());
        std::fs::read(out_dir.join("zz_map.csv")).unwrap()
    };
    let a = run(&dir.path().join("a"), "1");
    let b = run(&dir.path().join("b"), "1");
    let c = run(&dir.path().join("c"), "2");
    assert_eq!(a, b, "reruns must be bit-identical");
    assert_eq!(a, c, "thread count must not change the output");
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "omega1_GHz,omega2_GHz,zeta_kHz,log10_abs_zeta"
    );
    assert_eq!(lines.count(), 25, "5x5 grid rows");
}

#[test]
fn gate_report_emits_summary_and_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let body = tiny_config("");
    let cfg = write_config(dir.path(), &body);
    let out_dir = dir.path().join("out");
    let st = pulsegate()
        .args(["gate-report", "--no-scan", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(st.success());
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("gate_report.json")).unwrap()).unwrap();
    for key in [
        "scenario",
        "fidelity_raw",
        "fidelity_1q",
        "fidelity_cond",
        "theta1_rad",
        "theta2_rad",
        "phi_rad",
        "leakage_by_initial_state",
        "gate_time_ns",
    ] {
        assert!(summary.get(key).is_some(), "missing key {key}");
    }
    for init in ["00", "01", "10", "11"] {
        let p = out_dir.join(format!("trajectory_init_{init}.csv"));
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("t_ns,"), "{p:?} header");
    }
    // Every emitted file appears in the manifest with a checksum.
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(outputs.len() >= 5);
    for o in outputs {
        assert_eq!(o["sha256"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn j12_scan_emits_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    let body = tiny_config("[j12]\nalpha_c_mhz = [-400.0, 0.0]\npoints = 5\n");
    let cfg = write_config(dir.path(), &body);
    let out_dir = dir.path().join("out");
    let st = pulsegate()
        .args(["j12-scan", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(out_dir.join("j12_scan.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "alpha_c_MHz,J_closed_MHz,J_pathsum_MHz");
    assert_eq!(lines.count(), 5);
}

#[test]
fn scenario_tables_parse_and_resolve() {
    // The shipped tables must stay loadable.
    for table in ["aba", "abc", "threeq", "threeq-q1q3"] {
        let path = Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../../tables")
            .join(format!("{table}.toml"));
        let text = std::fs::read_to_string(&path).unwrap();
        let cfg = pulsegate_cli_config_parse(&text);
        assert!(cfg, "table {table} failed to parse");
    }
}

// The config module is private to the binary; exercise parsing through a
// minimal re-run of the loader logic: any parse/resolve failure would also
// fail the zz-map smoke test above, so here it is enough to check the TOML
// is well-formed against the strict schema by invoking the binary with a
// cheap subcommand and a bad output dir.
fn pulsegate_cli_config_parse(text: &str) -> bool {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.toml");
    std::fs::write(&cfg, text).unwrap();
    // `calibrate` with zero-size window errors out numerically, not with a
    // config error; use exit-code-2 detection as "config invalid".
    let out = pulsegate()
        .args(["j12-scan", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    out.status.code() != Some(2)
}
