use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use voidfwi::io::NodalField;

fn voidfwi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voidfwi"))
        .args(args)
        .output()
        .unwrap()
}

fn forward_1d(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "forward",
        "--preset",
        "interface1d-p1",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    voidfwi(&args)
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(voidfwi(&[]).status.code(), Some(2));
    assert_eq!(voidfwi(&["invert"]).status.code(), Some(2));
    assert_eq!(
        voidfwi(&["transmogrify", "--preset", "circle-desk"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        voidfwi(&["forward", "--preset", "no-such-preset"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        voidfwi(&["forward", "--config", "/nonexistent/file.toml"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn config_errors_report_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[grid]\nextent_x_mm = 10.0\nelement_size_mm = = 1\n").unwrap();
    let out = voidfwi(&["forward", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3"), "{stderr}");
}

#[test]
fn unstable_time_step_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = forward_1d(dir.path(), &["--set", "time.delta_t_s=0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stability"));
}

#[test]
fn forward_writes_snapshots_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = forward_1d(dir.path(), &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for k in 0..3 {
        let f = NodalField::read(&dir.path().join(format!("snapshot_{k:02}.field"))).unwrap();
        assert_eq!(f.dimension, 1);
    }
    let report = fs::read_to_string(dir.path().join("forward_report.csv")).unwrap();
    assert_eq!(report.lines().count(), 4);
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert_eq!(manifest.lines().count(), 4);
    for line in manifest.lines() {
        let (hash, name) = line.split_once("  ").unwrap();
        assert_eq!(hash.len(), 64);
        assert!(dir.path().join(name).exists());
    }
}

#[test]
fn serial_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(forward_1d(a.path(), &["--threads", "1"]).status.success());
    assert!(forward_1d(b.path(), &["--threads", "1"]).status.success());
    for name in ["forward_report.csv", "snapshot_02.field", "manifest.txt"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap()
        );
    }
}

#[test]
fn export_round_trips_and_converts() {
    let dir = tempfile::tempdir().unwrap();
    assert!(forward_1d(dir.path(), &[]).status.success());
    let field_path = dir.path().join("snapshot_01.field");
    let exported = dir.path().join("export");
    for format in ["csv_grid", "vtk_legacy_ascii"] {
        let out = voidfwi(&[
            "export",
            "--field",
            field_path.to_str().unwrap(),
            "--format",
            format,
            "--out",
            exported.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let field = NodalField::read(&field_path).unwrap();
    let csv = fs::read_to_string(exported.join("snapshot_01.csv")).unwrap();
    let row: Vec<f64> = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .skip(1)
        .map(|c| c.parse().unwrap())
        .collect();
    assert_eq!(row.len(), field.values.len());
    for (a, b) in row.iter().zip(&field.values) {
        assert!((a - b).abs() <= 1e-15 * b.abs().max(1e-300));
    }
    let vtk = fs::read_to_string(exported.join("snapshot_01.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 3.0\n"));

    fs::write(dir.path().join("broken.field"), "name x\ndimension 7\n").unwrap();
    let out = voidfwi(&[
        "export",
        "--field",
        dir.path().join("broken.field").to_str().unwrap(),
        "--format",
        "csv_grid",
        "--out",
        exported.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
