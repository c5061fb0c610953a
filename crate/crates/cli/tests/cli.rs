//! End-to-end checks of the `musca` binary: exit codes, output layout
//! and file emission.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str = "scheme,num_slots,n_b,esn0_db,load,frames,throughput,throughput_ci95,plr,plr_ci95";

fn musca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_musca"))
        .args(args)
        .output()
        .expect("failed to spawn the musca binary")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is not UTF-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is not UTF-8")
}

#[test]
fn help_and_version_exit_cleanly() {
    let help = musca(&["--help"]);
    assert!(help.status.success());
    let text = stdout(&help);
    for sub in ["trial", "sweep-load", "sweep-snr", "calibrate", "validate-fer", "export-fer"] {
        assert!(text.contains(sub), "--help does not mention {sub}");
    }
    assert!(musca(&["--version"]).status.success());
}

#[test]
fn sweep_load_prints_csv_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let out = musca(&[
        "sweep-load",
        "--scheme",
        "crdsa",
        "--phy",
        "collision",
        "--slots",
        "25",
        "--frames",
        "200",
        "--loads",
        "0.4,0.8",
        "--format",
        "both",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], HEADER);
    assert_eq!(lines.len(), 3, "expected header plus one row per load");
    assert!(lines[1].starts_with("crdsa,25,3,"));

    let err = stderr(&out);
    assert!(err.contains("peak throughput"), "stderr: {err}");

    let csv = fs::read_to_string(out_dir.join("sweep_load.csv")).unwrap();
    assert_eq!(csv, text, "file CSV must match the stdout CSV");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("sweep_load.json")).unwrap())
            .unwrap();
    assert_eq!(json.as_array().unwrap().len(), 2);
}

#[test]
fn identical_seeds_reproduce_identical_bytes() {
    let args = [
        "sweep-load",
        "--scheme",
        "musca",
        "--slots",
        "20",
        "--frames",
        "150",
        "--loads",
        "0.5,1.0",
        "--seed",
        "42",
    ];
    let a = musca(&args);
    let b = musca(&args);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b), "same seed must reproduce the same bytes");

    let mut other = args;
    other[other.len() - 1] = "43";
    let c = musca(&other);
    assert!(c.status.success());
    assert_ne!(stdout(&a), stdout(&c), "different seeds should move the estimates");
}

#[test]
fn trial_reports_each_user_and_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = musca(&[
        "trial",
        "--scheme",
        "musca",
        "--code",
        "cc-ref-k64",
        "--slots",
        "12",
        "--load",
        "0.5",
        "--esno",
        "12",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("scheme=musca slots=12 users=6"));
    assert!(text.contains("decoded "));
    for u in 0..6 {
        assert!(text.contains(&format!("user {u}: slots")), "missing user {u} line");
    }
    let trace = fs::read_to_string(dir.path().join("trace.jsonl")).unwrap();
    assert!(!trace.is_empty());
    for line in trace.lines() {
        serde_json::from_str::<serde_json::Value>(line).expect("trace line is not JSON");
    }
}

#[test]
fn config_file_drives_the_run_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("experiment.toml");
    fs::write(
        &path,
        "[experiment]\nscheme = \"crdsa\"\nnb = 2\nslots = 30\nload = 0.5\n\n\
         [phy]\nmodel = \"collision\"\n\n\
         [stop]\nmin_frames = 100\nmax_frames = 100\nmin_failures = 0\nbatch = 50\n",
    )
    .unwrap();

    let out = musca(&["sweep-load", "--config", path.to_str().unwrap(), "--loads", "0.5"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.lines().nth(1).unwrap().starts_with("crdsa,30,2,"));

    let out = musca(&[
        "sweep-load",
        "--config",
        path.to_str().unwrap(),
        "--loads",
        "0.5",
        "--slots",
        "40",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).lines().nth(1).unwrap().starts_with("crdsa,40,2,"));
}

#[test]
fn bad_arguments_exit_with_config_error() {
    let out = musca(&["sweep-load", "--scheme", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("error:"));

    // crdsa++ takes 3..=5 replicas; 2 must be rejected before simulating
    let out = musca(&["sweep-load", "--scheme", "crdsa++", "--nb", "2"]);
    assert_eq!(out.status.code(), Some(2));

    let out = musca(&["sweep-load"]);
    assert_eq!(out.status.code(), Some(2), "no scheme and no config must fail");
}

#[test]
fn missing_files_exit_with_io_error() {
    let out = musca(&["validate-fer", "--fer-table", "/nonexistent/table.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("error:"));

    let out = musca(&["sweep-load", "--config", "/nonexistent/experiment.toml"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn export_validate_calibrate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("tables").join("cc.csv");

    let out = musca(&[
        "export-fer",
        "--code",
        "cc-ref-k64",
        "--nb",
        "3",
        "--margin",
        "0.3",
        "--out",
        table.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = fs::read_to_string(&table).unwrap();
    assert!(text.starts_with("code_id,pattern,esn0_db,fer\n"));

    let out = musca(&["validate-fer", "--fer-table", table.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let report = stdout(&out);
    assert!(report.starts_with("ok: code=cc-ref-k64"), "report: {report}");
    assert!(report.contains("warnings=0"), "report: {report}");

    let out = musca(&["calibrate", "--fer-table", table.to_str().unwrap(), "--nb", "3"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let line = stdout(&out);
    assert!(line.starts_with("code=cc-ref-k64 nb=3 margin="), "line: {line}");
    let fitted: f64 = line.trim().rsplit('=').next().unwrap().parse().unwrap();
    assert!(
        (fitted - 0.3).abs() < 0.05,
        "fitted margin {fitted} far from the exported 0.3"
    );
}

#[test]
fn fer_table_phy_runs_from_the_shipped_catalog() {
    // Resolve the workspace-level data directory relative to this crate.
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let catalog = root.join("data/codes.toml");
    let out = musca(&[
        "sweep-load",
        "--registry",
        catalog.to_str().unwrap(),
        "--scheme",
        "musca",
        "--phy",
        "fer-table",
        "--slots",
        "50",
        "--frames",
        "150",
        "--loads",
        "0.8",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.lines().nth(1).unwrap().starts_with("musca,50,3,"));
}
