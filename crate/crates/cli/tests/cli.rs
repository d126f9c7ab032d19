use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nvscope_cli::output::parse_csv;

const LABELS: &str = "schema_version = 1\nprotocol = \"labels\"\n\n[labels]\nstep_khz = 8.0\n";

/// Cheap pair run: coarse grid, fixed readout.
const PAIR: &str =
    "schema_version = 1\nprotocol = \"pair\"\n\n[pair]\nstep_khz = 0.5\nreadout_ms = 0.5\n";

const BATH: &str =
    "schema_version = 1\nprotocol = \"bath-decoupling\"\nseed = 3\n\n[bath]\ncount = 3\nradius_nm = 1.5\npoints = 41\n";

fn nvscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvscope"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_ok(args: &[&str]) -> Output {
    let out = nvscope(args);
    assert!(
        out.status.success(),
        "nvscope {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    v.sort();
    v
}

fn assert_same_files(a: &Path, b: &Path) {
    let names = csv_files(a);
    assert!(!names.is_empty());
    assert_eq!(names, csv_files(b));
    for n in names {
        assert_eq!(
            fs::read(a.join(&n)).unwrap(),
            fs::read(b.join(&n)).unwrap(),
            "{n} differs"
        );
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn dry_run_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "labels.toml", LABELS);
    let out_dir = tmp.path().join("out");
    let out = run_ok(&["run", "-c", s(&cfg), "-o", s(&out_dir), "--dry-run"]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("[labels]"));
    assert!(stdout.contains("omega_khz"), "defaults are filled in");
    assert!(stdout.contains("labels_scan.csv"));
    assert!(!out_dir.exists());

    // Failures during a dry run leave no error report behind either.
    let bad = write_config(
        tmp.path(),
        "bad.toml",
        "schema_version = 1\nprotocol = \"labels\"\nbogus = 1\n",
    );
    let out = nvscope(&["run", "-c", s(&bad), "-o", s(&out_dir), "--dry-run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "labels.toml", LABELS);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_ok(&["run", "-c", s(&cfg), "-o", s(&a)]);
    run_ok(&["run", "-c", s(&cfg), "-o", s(&b), "--jobs", "2"]);
    assert_eq!(
        csv_files(&a),
        ["labels_dips.csv", "labels_scan.csv", "labels_summary.csv"]
    );
    assert_same_files(&a, &b);
    assert_eq!(
        fs::read_to_string(a.join("warnings.json")).unwrap().trim(),
        "[]"
    );
}

#[test]
fn outputs_reproduce_from_their_embedded_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bath.toml", BATH);
    let a = tmp.path().join("a");
    run_ok(&["run", "-c", s(&cfg), "-o", s(&a)]);
    let text = fs::read_to_string(a.join("bath_decoupling.csv")).unwrap();
    let parsed = parse_csv(&text).unwrap();
    assert_eq!(parsed.meta("kind"), Some("trace"));
    assert_eq!(
        parsed.meta("units"),
        Some("t_ms=ms, S_driven=1, S_undriven=1")
    );
    assert_eq!(parsed.headers, ["t_ms", "S_driven", "S_undriven"]);
    assert_eq!(parsed.rows.len(), 41);
    assert!(parsed.config.unwrap().contains("seed = 3"));

    let b = tmp.path().join("b");
    run_ok(&["run", "-c", s(&a.join("bath_decoupling.csv")), "-o", s(&b)]);
    assert_same_files(&a, &b);
}

#[test]
fn seed_flag_changes_the_bath() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bath.toml", BATH);
    let (a, b, c) = (
        tmp.path().join("a"),
        tmp.path().join("b"),
        tmp.path().join("c"),
    );
    run_ok(&["bath-gen", "-c", s(&cfg), "-o", s(&a)]);
    run_ok(&["bath-gen", "-c", s(&cfg), "-o", s(&b), "--seed", "3"]);
    run_ok(&["bath-gen", "-c", s(&cfg), "-o", s(&c), "--seed", "4"]);
    assert_eq!(csv_files(&a), ["bath_sites.csv"]);
    let read = |d: &Path| fs::read_to_string(d.join("bath_sites.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let (pa, pc) = (parse_csv(&read(&a)).unwrap(), parse_csv(&read(&c)).unwrap());
    assert_eq!(pa.rows.len(), 3);
    assert_ne!(pa.rows, pc.rows);
    assert_ne!(pa.meta("config_sha256"), pc.meta("config_sha256"));
}

#[test]
fn schema_errors_exit_with_2_and_report_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let cases = [
        "schema_version = 1\nprotocol = \"labels\"\n[labels]\nomega = 1.0\n",
        "schema_version = 1\nprotocol = \"labels\"\n[pair]\n",
        "schema_version = 9\nprotocol = \"labels\"\n",
        "schema_version = 1\nprotocol = \"labels\"\n[labels]\nreadout_us = -1.0\n",
        "schema_version = 1\nprotocol = \"teleport\"\n",
    ];
    for text in cases {
        let cfg = write_config(tmp.path(), "bad.toml", text);
        let out = nvscope(&["run", "-c", s(&cfg), "-o", s(&out_dir)]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out_dir.join("error.json")).unwrap()).unwrap();
        assert_eq!(report["error"], "schema");
        assert_eq!(report["exit_code"], 2);
        assert!(csv_files(&out_dir).is_empty());
    }
    let out = nvscope(&["run", "--config"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compute_errors_exit_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    // A natural-abundance bath this large exceeds the dense dimension cap.
    let cfg = write_config(
        tmp.path(),
        "big.toml",
        "schema_version = 1\nprotocol = \"bath-decoupling\"\n[bath]\nmode = \"natural-abundance\"\nradius_nm = 3.0\n",
    );
    let out_dir = tmp.path().join("out");
    let out = nvscope(&["run", "-c", s(&cfg), "-o", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(3));
    let report = fs::read_to_string(out_dir.join("error.json")).unwrap();
    assert!(report.contains("\"compute\""));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dense cap"));
}

#[test]
fn missing_input_exits_with_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nvscope(&[
        "run",
        "-c",
        s(&tmp.path().join("absent.toml")),
        "-o",
        s(&tmp.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweeps_do_not_depend_on_the_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "labels.toml", LABELS);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let values = "19000,20000,21000";
    run_ok(&[
        "sweep",
        "-c",
        s(&cfg),
        "-o",
        s(&a),
        "--axis",
        "labels.omega_khz",
        "--values",
        values,
        "--jobs",
        "1",
    ]);
    run_ok(&[
        "sweep",
        "-c",
        s(&cfg),
        "-o",
        s(&b),
        "--axis",
        "labels.omega_khz",
        "--values",
        values,
        "--jobs",
        "2",
    ]);
    assert_same_files(&a, &b);
    let p = parse_csv(&fs::read_to_string(a.join("sweep_labels_summary.csv")).unwrap()).unwrap();
    assert_eq!(p.headers[0], "labels.omega_khz");
    let axis: Vec<&str> = p.rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(axis.first(), Some(&"19000.0"));
    assert_eq!(axis.last(), Some(&"21000.0"));
    assert!(axis
        .windows(2)
        .all(|w| w[0].parse::<f64>().unwrap() <= w[1].parse::<f64>().unwrap()));
}

#[test]
fn single_point_sweep_matches_a_plain_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "labels.toml", LABELS);
    let (run_dir, sweep_dir) = (tmp.path().join("run"), tmp.path().join("sweep"));
    run_ok(&["run", "-c", s(&cfg), "-o", s(&run_dir)]);
    run_ok(&[
        "sweep",
        "-c",
        s(&cfg),
        "-o",
        s(&sweep_dir),
        "--axis",
        "labels.omega_khz",
        "--values",
        "20000",
    ]);
    for name in csv_files(&run_dir) {
        let plain = parse_csv(&fs::read_to_string(run_dir.join(&name)).unwrap()).unwrap();
        let swept =
            parse_csv(&fs::read_to_string(sweep_dir.join(format!("sweep_{name}"))).unwrap())
                .unwrap();
        assert_eq!(swept.headers[1..], plain.headers[..], "{name}");
        let stripped: Vec<Vec<String>> = swept.rows.iter().map(|r| r[1..].to_vec()).collect();
        assert_eq!(stripped, plain.rows, "{name}");
    }
}

#[test]
fn sweep_axis_must_name_a_numeric_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "labels.toml", LABELS);
    let out_dir = tmp.path().join("out");
    for axis in ["labels.nothing", "protocol", "output.dir"] {
        let out = nvscope(&[
            "sweep",
            "-c",
            s(&cfg),
            "-o",
            s(&out_dir),
            "--axis",
            axis,
            "--values",
            "1",
        ]);
        assert_eq!(out.status.code(), Some(2), "{axis}");
    }
    // A value that breaks validation is caught before anything runs.
    let out = nvscope(&[
        "sweep",
        "-c",
        s(&cfg),
        "-o",
        s(&out_dir),
        "--axis",
        "labels.omega_khz",
        "--values",
        "1,-5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(csv_files(&out_dir).is_empty());
}

#[test]
fn inverting_saved_pair_scans_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "pair.toml", PAIR);
    let (run_dir, inv_dir) = (tmp.path().join("run"), tmp.path().join("inv"));
    run_ok(&["run", "-c", s(&cfg), "-o", s(&run_dir)]);
    let scans: Vec<String> = csv_files(&run_dir)
        .into_iter()
        .filter(|n| n.starts_with("pair_scan_"))
        .map(|n| s(&run_dir.join(n)).to_string())
        .collect();
    assert_eq!(scans.len(), 9);
    let mut args = vec!["invert", "-o", s(&inv_dir)];
    args.extend(scans.iter().map(String::as_str));
    run_ok(&args);
    for name in ["pair_deltas.csv", "pair_dips.csv", "pair_geometry.csv"] {
        assert_eq!(
            fs::read(run_dir.join(name)).unwrap(),
            fs::read(inv_dir.join(name)).unwrap(),
            "{name}"
        );
    }
    let geo = parse_csv(&fs::read_to_string(inv_dir.join("pair_geometry.csv")).unwrap()).unwrap();
    let dist = geo.rows.iter().find(|r| r[0] == "distance_nm").unwrap()[1]
        .parse::<f64>()
        .unwrap();
    assert!((dist - 0.1515).abs() < 0.002, "distance {dist}");

    // Eight scans are not enough.
    let mut short = vec!["invert", "-o", s(&inv_dir)];
    short.extend(scans[..8].iter().map(String::as_str));
    assert_eq!(nvscope(&short).status.code(), Some(2));
}

#[test]
fn unresolved_pair_dips_warn_but_succeed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "pair.toml",
        "schema_version = 1\nprotocol = \"pair\"\n[pair]\nstep_khz = 0.5\nreadout_ms = 0.3\n",
    );
    let out_dir = tmp.path().join("out");
    let out = run_ok(&["run", "-c", s(&cfg), "-o", s(&out_dir)]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: direction"));
    let warnings: Vec<String> =
        serde_json::from_str(&fs::read_to_string(out_dir.join("warnings.json")).unwrap()).unwrap();
    assert!(!warnings.is_empty());
    let deltas = parse_csv(&fs::read_to_string(out_dir.join("pair_deltas.csv")).unwrap()).unwrap();
    assert!(deltas.rows.iter().any(|r| r[2] == "true"));
}

#[test]
fn every_protocol_writes_its_planned_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let configs = [
        (
            "position",
            "schema_version = 1\nprotocol = \"position-estimate\"\n[position]\nwith_protons = false\n\
             n_theta = 9\nn_phi = 8\ntrace_points = 41\northogonal_directions = 2\n",
        ),
        (
            "qnd",
            "schema_version = 1\nprotocol = \"qnd\"\n[qnd]\nscan_start_khz = 316000.0\n\
             scan_stop_khz = 316400.0\nscan_step_khz = 100.0\nsamples_per_readout = 5\nreadouts = 2\n",
        ),
        (
            "radical",
            "schema_version = 1\nprotocol = \"radical\"\n[radical]\nhalf_window_khz = 300.0\n\
             step_khz = 100.0\nmonitor_points = 21\n",
        ),
    ];
    for (name, text) in configs {
        let cfg = write_config(tmp.path(), &format!("{name}.toml"), text);
        let dir = tmp.path().join(name);
        let dry = run_ok(&["run", "-c", s(&cfg), "-o", s(&dir), "--dry-run"]);
        let planned: Vec<String> = String::from_utf8(dry.stdout)
            .unwrap()
            .lines()
            .filter_map(|l| l.strip_prefix("# would write "))
            .filter(|l| l.ends_with(".csv"))
            .map(|l| {
                Path::new(l)
                    .file_name()
                    .unwrap()
                    .to_string_lossy()
                    .into_owned()
            })
            .collect();
        run_ok(&["run", "-c", s(&cfg), "-o", s(&dir)]);
        let mut planned_sorted = planned.clone();
        planned_sorted.sort();
        assert_eq!(csv_files(&dir), planned_sorted, "{name}");
    }
    let mon =
        parse_csv(&fs::read_to_string(tmp.path().join("qnd/qnd_monitor.csv")).unwrap()).unwrap();
    // Two readouts of five samples share the boundary sample.
    assert_eq!(mon.rows.len(), 9);
}
