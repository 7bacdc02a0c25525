use std::fs;
use std::process::Command;

use fefd::cli::{dump_fields, run_study, write_study, StudySpec, CSV_HEADER};
use fefd::coupling::ZeroData;
use fefd::geometry::{build_fd_grid, build_fe_mesh, DomainSpec};
use fefd::verification::ManufacturedCase;
use fefd::{run, RunConfig};

fn spec_in(dir: &std::path::Path, text: &str) -> StudySpec {
    let mut spec = StudySpec::parse_config(text).unwrap();
    spec.out = dir.to_path_buf();
    spec
}

#[test]
fn default_study_table_layout() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec_in(dir.path(), "m_values = 2\nlevels = 3,4");
    let report = run_study(&spec).unwrap();
    write_study(&spec, &report).unwrap();
    let csv = fs::read_to_string(dir.path().join("convergence_m2.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("3,128,81,"));
    assert!(lines[1].ends_with(",,"));
    assert!(lines[2].starts_with("4,512,289,"));
    assert_eq!(lines[2].split(',').filter(|c| c.is_empty()).count(), 0);
    let meta = fs::read_to_string(dir.path().join("metadata.txt")).unwrap();
    assert!(meta.contains("build = "));
    assert!(meta.contains("level 3: tau = 3.125000e-3"));
    assert!(meta.contains("unstable = false"));
    assert!(meta.contains("wall_seconds"));
}

#[test]
fn single_level_table_has_no_rates() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec_in(dir.path(), "m_values = 4\nlevels = 3");
    let report = run_study(&spec).unwrap();
    assert_eq!(report.tables[0].rows.len(), 1);
    let row = report.tables[0].rows[0];
    assert!(row.ratio1.is_none() && row.r1.is_none() && row.ratio2.is_none() && row.r2.is_none());
}

#[test]
fn repeated_studies_give_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let spec = spec_in(dir, "m_values = 2,8\nlevels = 3,4");
        write_study(&spec, &run_study(&spec).unwrap()).unwrap();
    }
    for m in [2, 8] {
        let name = format!("convergence_m{m}.csv");
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
    }
}

#[test]
fn unstable_override_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec_in(dir.path(), "m_values = 2\nlevels = 3\ntau_rule = 4*h\nfinal_time = 0.5\nallow_unstable = true");
    let report = run_study(&spec).unwrap();
    assert!(report.unstable());
    write_study(&spec, &report).unwrap();
    let meta = fs::read_to_string(dir.path().join("metadata.txt")).unwrap();
    assert!(meta.contains("unstable = true"));
}

#[test]
fn dump_record_counts_and_zero_field() {
    let spec = DomainSpec::new(3).unwrap();
    let grid = build_fd_grid(spec).unwrap();
    let mesh = build_fe_mesh(spec);
    let case = ManufacturedCase::sine(2).unwrap();
    let history = run(RunConfig::new(3, case.eps().clone()), &ZeroData).unwrap();
    let text = dump_fields(history.last().unwrap(), &grid, &mesh, &case);
    let records: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(records.iter().filter(|l| l.contains(" FD ")).count(), 17 * 17 - 25);
    assert_eq!(records.iter().filter(|l| l.contains(" FE ")).count(), 81);
    for r in &records {
        let cols: Vec<&str> = r.split_whitespace().collect();
        assert_eq!(cols.len(), 8);
        assert_eq!(cols[2].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn fine_dump_peak_matches_exact_peak() {
    let level = 6;
    let spec = DomainSpec::new(level).unwrap();
    let case = ManufacturedCase::sine(8).unwrap();
    let history = run(RunConfig::new(level, case.eps().clone()), &case).unwrap();
    let text = dump_fields(history.last().unwrap(), &build_fd_grid(spec).unwrap(), &build_fe_mesh(spec), &case);
    let (mut peak_h, mut peak) = (0.0f64, 0.0f64);
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let cols: Vec<f64> = line
            .split_whitespace()
            .filter_map(|c| c.parse().ok())
            .collect();
        peak_h = peak_h.max(cols[2]);
        peak = peak.max(cols[5].hypot(cols[6]));
    }
    assert!((peak_h - peak).abs() <= 0.05 * peak, "{peak_h} vs {peak}");
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_fefd");
    let dir = tempfile::tempdir().unwrap();
    let ok = Command::new(exe)
        .args(["--levels", "3", "--m-values", "2", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(ok.code(), Some(0));
    assert!(dir.path().join("convergence_m2.csv").exists());

    let bad = Command::new(exe).args(["--levels", "6,3"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("ascending"));

    let config = dir.path().join("study.conf");
    fs::write(&config, "levels = 3\nspeed = 2\n").unwrap();
    let unknown = Command::new(exe).arg("--config").arg(&config).output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("speed"));

    let cfl = Command::new(exe)
        .args(["--levels", "3", "--tau-rule", "4*h", "--final-time", "0.5"])
        .output()
        .unwrap();
    assert_eq!(cfl.status.code(), Some(2));

    let blow = Command::new(exe)
        .args(["--levels", "3", "--m-values", "2", "--tau-rule", "4*h", "--final-time", "500", "--allow-unstable", "--out"])
        .arg(dir.path().join("unstable"))
        .output()
        .unwrap();
    assert_eq!(blow.status.code(), Some(3));
}
