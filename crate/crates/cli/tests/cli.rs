//! End-to-end runs of the binary: CSV shape, determinism, exit codes, and
//! error reporting.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ztrace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ztrace"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const QUARTIC: &str = r#"{
    "system": {"kind": "quartic_uv", "alpha": 8.0, "omega": 1.0},
    "sweep": {"t_min": 0.1, "t_max": 1.0, "points": 6, "scale": "log"},
    "methods": ["exact", "classical", "sc_harmonic", "sc_higher"]
}"#;

const SHALLOW_DW: &str = r#"{
    "system": {"kind": "double_well", "delta_e": 0.15, "a": 5.0},
    "sweep": {"t_min": 0.02, "t_max": 0.04, "points": 2, "scale": "linear"},
    "methods": ["sc_trace"]
}"#;

const HARMONIC: &str = r#"{
    "system": {"kind": "polynomial_well", "coefficients": [0.0, 0.0, 0.5]},
    "sweep": {"t_min": 0.5, "t_max": 2.0, "points": 3, "scale": "linear"},
    "methods": ["exact", "sc_harmonic"]
}"#;

#[test]
fn sweep_shape_and_determinism() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "q.json", QUARTIC);
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    let r1 = ztrace(&["sweep", "--config", &cfg, "--out", out1.to_str().unwrap()]);
    assert!(r1.status.success(), "{}", String::from_utf8_lossy(&r1.stderr));
    let r2 = ztrace(&["sweep", "--config", &cfg, "--out", out2.to_str().unwrap()]);
    assert!(r2.status.success());
    let a = fs::read(&out1).unwrap();
    let b = fs::read(&out2).unwrap();
    assert_eq!(a, b, "rerun with the same config must be byte-identical");
    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "T,T_star,method,Z,f,u,s,c,Z_harmonic,Z_tunneling,status");
    assert_eq!(lines.len(), 1 + 6 * 4, "one row per temperature per method");
    assert!(lines[1..].iter().all(|l| l.ends_with(",ok")));
    // temperature-major ordering with methods in configured order
    assert!(lines[1].contains(",exact,"));
    assert!(lines[2].contains(",classical,"));
    assert!(lines[3].contains(",sc_harmonic,"));
    assert!(lines[4].contains(",sc_higher,"));
}

#[test]
fn tunneling_column_is_zero_without_librations() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "dw.json", SHALLOW_DW);
    let out = dir.path().join("dw.csv");
    let r = ztrace(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    // T = 0.02 is beta = 50: a libration exists and contributes
    let cold: Vec<&str> = lines[1].split(',').collect();
    let z_tunneling: f64 = cold[9].parse().unwrap();
    assert!(z_tunneling > 0.0);
    // T = 0.04 is beta = 25, below the shortest libration period
    let warm: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(warm[9], "0.0000000000000000e0");
    assert_eq!(warm[10], "ok");
}

#[test]
fn orbits_harmonic_single_trivial_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "h.json", HARMONIC);
    let out = dir.path().join("orbits.csv");
    let r = ztrace(&["orbits", "--config", &cfg, "--beta", "2", "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "kind,well,n,E_shell,S_bar,trM,term,mode,status");
    assert_eq!(lines.len(), 2);
    let row: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(row[0], "trivial");
    // 1 / (2 sinh(1)) for a unit-frequency well at beta = 2
    let term: f64 = row[6].parse().unwrap();
    assert!((term - 0.42545906411966077).abs() < 1e-12);
}

#[test]
fn orbits_shallow_double_well_lists_libration() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "dw.json", SHALLOW_DW);
    let out = dir.path().join("orbits.csv");
    let r = ztrace(&["orbits", "--config", &cfg, "--beta", "60", "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let librations: Vec<&str> = text.lines().filter(|l| l.starts_with("libration")).collect();
    assert!(!librations.is_empty());
    for l in librations {
        let row: Vec<&str> = l.split(',').collect();
        let s_bar: f64 = row[4].parse().unwrap();
        assert!(s_bar > 0.0);
        assert_eq!(row[7], "floored");
    }
}

#[test]
fn spectrum_harmonic_levels() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "h.json", HARMONIC);
    let out = dir.path().join("spec.csv");
    let r =
        ztrace(&["spectrum", "--config", &cfg, "--levels", "3", "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,energy,accuracy");
    assert_eq!(lines.len(), 4);
    for (i, expect) in [(1, 0.5), (2, 1.5), (3, 2.5)] {
        let row: Vec<&str> = lines[i].split(',').collect();
        let e: f64 = row[1].parse().unwrap();
        assert!((e - expect).abs() < 1e-6, "level {i}: {e}");
    }
}

#[test]
fn config_errors_exit_2_with_key_path() {
    let dir = TempDir::new().unwrap();
    let bad = QUARTIC.replace("8.0", "-8.0");
    let cfg = write_config(dir.path(), "bad.json", &bad);
    let out = dir.path().join("x.csv");
    let r = ztrace(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&r.stderr);
    assert!(stderr.contains("system.alpha"), "{stderr}");
    assert!(!out.exists(), "no output file on config error");
}

#[test]
fn missing_config_file_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x.csv");
    let r = ztrace(&["sweep", "--config", "/nonexistent.json", "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn output_path_from_config_key() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("from_config.csv");
    let with_output = QUARTIC.replace(
        "\"methods\"",
        &format!("\"output\": \"{}\", \"methods\"", out.to_str().unwrap()),
    );
    let cfg = write_config(dir.path(), "q.json", &with_output);
    let r = ztrace(&["sweep", "--config", &cfg]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(out.exists());
    // and with neither --out nor the key, a config error
    let cfg2 = write_config(dir.path(), "q2.json", QUARTIC);
    let r = ztrace(&["sweep", "--config", &cfg2]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn literal_mode_marks_singular_librations_failed() {
    let dir = TempDir::new().unwrap();
    let literal = SHALLOW_DW.replace(
        "\"methods\": [\"sc_trace\"]",
        "\"methods\": [\"sc_trace\"], \"orbits\": {\"trm_mode\": \"literal\"}",
    );
    let cfg = write_config(dir.path(), "lit.json", &literal);
    let out = dir.path().join("orbits.csv");
    let r = ztrace(&["orbits", "--config", &cfg, "--beta", "60", "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(3), "singular amplitude is a numerical failure");
    let text = fs::read_to_string(&out).unwrap();
    let lib_rows: Vec<&str> = text.lines().filter(|l| l.starts_with("libration")).collect();
    assert!(!lib_rows.is_empty(), "partial output preserved");
    for l in lib_rows {
        let row: Vec<&str> = l.split(',').collect();
        assert_eq!(row[8], "failed");
        assert!(row[6].is_empty(), "no finite term in literal mode");
        // the raw trace is still reported
        let tr_m: f64 = row[5].parse().unwrap();
        assert!((tr_m - 2.0).abs() < 1e-3);
    }
}
