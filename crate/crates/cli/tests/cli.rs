use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = "[timetrace]\ntraces = 16\nmodes_per_trace = 128\n";

fn cvtp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvtp")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn report(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn budget_reports_both_regimes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("b");
    let o = cvtp(&["budget", "--out-dir", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["schema"], 1);
    assert!((r["quantum"]["n_out"].as_f64().unwrap() - 1.52).abs() < 5e-3);
    assert!((r["quantum"]["n_out_db"].as_f64().unwrap() - 1.82).abs() < 5e-3);
    assert!((r["classical"]["n_out"].as_f64().unwrap() - 3.0).abs() < 5e-3);
    assert!((r["classical"]["n_out_db"].as_f64().unwrap() - 4.77).abs() < 5e-3);
    let ideal = write_config(tmp.path(), "ideal.toml", "[teleporter]\nn_sq = 1.0\neta_bell = 1.0\neta_meas = 1.0\n");
    let out2 = tmp.path().join("b2");
    assert_eq!(code(&cvtp(&["budget", "-c", s(&ideal), "--out-dir", s(&out2)])), 0);
    assert_eq!(report(&out2)["quantum"]["n_out"].as_f64().unwrap(), 3.0);
}

#[test]
fn config_errors_exit_two_and_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    for (text, field) in [
        ("[teleporter]\neta_bell = 0.0\n", "eta_bell"),
        ("[teleporter]\nunknown_key = 1\n", "unknown_key"),
        ("[spectrum]\nbins = \"many\"\n", "spectrum.bins"),
        ("[teleporter\n", "<file>"),
    ] {
        let cfg = write_config(tmp.path(), "c.toml", text);
        let o = cvtp(&["budget", "-c", s(&cfg), "--out-dir", s(&tmp.path().join("x"))]);
        assert_eq!(code(&o), 2, "{text}");
        assert!(String::from_utf8_lossy(&o.stderr).contains(field), "{text}");
        let o = cvtp(&["validate", "-c", s(&cfg)]);
        assert_eq!(code(&o), 2);
    }
    let o = cvtp(&["timetrace", "--traces", "0", "--out-dir", s(&tmp.path().join("t"))]);
    assert_eq!(code(&o), 2);
    let o = cvtp(&["sweep", "--param", "temperature", "--range", "0:1:3", "--out-dir", s(&tmp.path().join("w"))]);
    assert_eq!(code(&o), 2);
    let o = cvtp(&["sweep", "--param", "n_sq", "--range", "0:1", "--out-dir", s(&tmp.path().join("w"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unwritable_output_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write_config(tmp.path(), "plain_file", "");
    let o = cvtp(&["spectrum", "--out-dir", s(&file.join("sub"))]);
    assert_eq!(code(&o), 3);
    let o = cvtp(&["budget", "-c", s(&tmp.path().join("missing.toml"))]);
    assert_eq!(code(&o), 3);
}

#[test]
fn validation_exit_codes() {
    let o = cvtp(&["validate", "--level", "quick"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "off.toml",
        "[teleporter]\ntap_reflectivity = 5e-6\nallow_miscalibrated = true\n",
    );
    let o = cvtp(&["validate", "-c", s(&cfg)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL teleporter:config_unity_gain"));
}

#[test]
fn spectrum_is_byte_reproducible_and_verifiable() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(code(&cvtp(&["spectrum", "--seed", "9", "--out-dir", s(d)])), 0);
        assert_eq!(code(&cvtp(&["verify", s(d)])), 0);
    }
    for f in ["spectrum.csv", "report.json", "config.toml"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(a.join("spectrum.csv")).unwrap();
    assert!(csv.starts_with("omega_thz,vx_db,vp_db\n"));
    assert!(!csv.contains('\r'));
    assert_eq!(csv.lines().count(), 402);
    fs::write(a.join("spectrum.csv"), csv.replacen('1', "2", 1)).unwrap();
    assert_eq!(code(&cvtp(&["verify", s(&a)])), 1);
    fs::remove_file(a.join("manifest.json")).unwrap();
    assert_eq!(code(&cvtp(&["verify", s(&a)])), 3);
}

#[test]
fn classical_spectrum_sits_on_the_classical_plateau() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    assert_eq!(code(&cvtp(&["spectrum", "--regime", "classical", "--out-dir", s(&out)])), 0);
    let r = report(&out);
    for k in ["vx_raw_db", "vp_raw_db"] {
        assert!((r["report"][k].as_f64().unwrap() - 4.77).abs() < 0.02);
    }
}

#[test]
fn timetrace_runs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(code(&cvtp(&["timetrace", "-c", s(&cfg), "--seed", "4", "--out-dir", s(d)])), 0);
        assert_eq!(code(&cvtp(&["verify", s(d)])), 0);
    }
    for f in ["modes.csv", "trace_000.csv", "report.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let modes = fs::read_to_string(a.join("modes.csv")).unwrap();
    assert!(modes.starts_with("trace_id,k,x_k,p_k,in_x_k,in_p_k\n"));
    assert_eq!(modes.lines().count(), 1 + 16 * 128);
    let trace = fs::read_to_string(a.join("trace_000.csv")).unwrap();
    assert!(trace.starts_with("t_ps,x,p,in_x,in_p\n"));
}

#[test]
fn classical_timetrace_stays_below_the_classical_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", "[timetrace]\ntraces = 32\nmodes_per_trace = 256\n");
    let out = tmp.path().join("c");
    assert_eq!(code(&cvtp(&["timetrace", "-c", s(&cfg), "--regime", "classical", "--out-dir", s(&out)])), 0);
    assert!(report(&out)["report"]["f_raw"].as_f64().unwrap() < 0.52);
}

#[test]
fn vacuum_source_reduces_to_vacuum_teleportation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "vac.toml", &format!("{SMALL}[source]\nensemble_var_shot = 0.0\n"));
    let out = tmp.path().join("v");
    assert_eq!(code(&cvtp(&["timetrace", "-c", s(&cfg), "--out-dir", s(&out)])), 0);
    let r = report(&out);
    assert_eq!(r["ensemble_var_shot_estimate"].as_f64().unwrap(), 0.0);
    let rep = &r["report"];
    assert_eq!(rep["f_raw"], rep["f_raw_gain_corrected"]);
    let se = rep["se_db"].as_f64().unwrap();
    let want = r["analytic"]["n_out_db"].as_f64().unwrap();
    assert!((rep["vx_raw_db"].as_f64().unwrap() - want).abs() <= 3.0 * se);
}

fn sweep_column(dir: &Path, col: usize) -> Vec<f64> {
    fs::read_to_string(dir.join("sweep.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn sweeps() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("n");
    assert_eq!(code(&cvtp(&["sweep", "--param", "n_sq", "--range", "1:0.01:12", "--out-dir", s(&out)])), 0);
    let n_out = sweep_column(&out, 1);
    assert!(n_out.windows(2).all(|w| w[1] < w[0]));

    let cfg = write_config(tmp.path(), "cl.toml", "[teleporter]\nn_sq = 1.0\n");
    let out = tmp.path().join("m");
    assert_eq!(code(&cvtp(&["sweep", "-c", s(&cfg), "--param", "eta_meas", "--range", "1:0.9:2", "--out-dir", s(&out)])), 0);
    let n_out = sweep_column(&out, 1);
    let intrinsic = 3.0 + 2.0 * 0.1 / 0.9;
    assert!((n_out[0] - intrinsic).abs() < 1e-12);
    assert!((n_out[1] - (0.9 * intrinsic + 0.1)).abs() < 1e-12);
    assert!((n_out[1] - 3.0).abs() < 1e-12);

    let out = tmp.path().join("g");
    assert_eq!(code(&cvtp(&["sweep", "--param", "ff_gain_db", "--range", "20:60:5", "--out-dir", s(&out)])), 0);
    let analytic = sweep_column(&out, 1);
    let circuit = sweep_column(&out, 4);
    let rel: Vec<f64> = analytic.iter().zip(&circuit).map(|(a, c)| ((c - a) / a).abs()).collect();
    assert!(rel.windows(2).all(|w| w[1] < w[0]));
    assert!(rel[4] < 1e-3);
    assert_eq!(code(&cvtp(&["verify", s(&out)])), 0);
}

#[test]
fn default_run_directory_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_cvtp"))
        .args(["budget"])
        .env("CVTP_RUNS_DIR", tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let entries: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1);
    let name = entries[0].file_name().unwrap().to_str().unwrap().to_string();
    assert!(name.ends_with("-budget"), "{name}");
    for f in ["manifest.json", "config.toml", "report.json"] {
        assert!(entries[0].join(f).exists());
    }
    assert!(!entries[0].join("manifest.json.tmp").exists());
}
