use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ep-transonic"));
    cmd.env_remove("EP_TRANSONIC_OUT");
    cmd
}

fn run(dir: &Path, sub: &str, config: Option<&str>, out: &str, extra: &[&str]) -> (Output, PathBuf) {
    let mut cmd = bin();
    cmd.arg(sub).arg("--out").arg(dir.join(out));
    if let Some(text) = config {
        let path = dir.join(format!("{out}.toml"));
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.args(extra);
    (cmd.output().unwrap(), dir.join(out))
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn check<'a>(checks: &'a Value, name: &str) -> &'a Value {
    checks["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()
}

#[test]
fn tau_and_alpha_together_are_rejected_before_solving() {
    let tmp = TempDir::new().unwrap();
    let (out, dir) = run(tmp.path(), "shock", Some("[params]\nJ = 1\ntau = 1\nalpha = 1\nL = 1\n"), "both", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exactly one of tau and alpha"));
    assert!(!dir.exists());
}

#[test]
fn default_case_validates() {
    let tmp = TempDir::new().unwrap();
    let (out, dir) = run(tmp.path(), "validate", None, "v", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let checks = json(&dir.join("checks.json"));
    assert_eq!(checks["summary"]["fail"], 0);
    assert!(checks["summary"]["pass"].as_u64().unwrap() > 15);
}

#[test]
fn corrupted_jump_fails_the_flux_check_with_its_defect() {
    let tmp = TempDir::new().unwrap();
    let (out, dir) = run(tmp.path(), "shock", Some("[shock]\njump_offset = 0.1\n"), "bad", &[]);
    assert_eq!(out.status.code(), Some(3));
    let checks = json(&dir.join("checks.json"));
    let flux = check(&checks, "rh_flux");
    assert_eq!(flux["status"], "FAIL");
    let report = json(&dir.join("shock.json"));
    let (nm, np) = (report["jump"]["n_minus"].as_f64().unwrap(), report["jump"]["n_plus"].as_f64().unwrap());
    let expected = ((nm + 1.0 / nm) - (np + 1.0 / np)).abs();
    let reported = flux["value"].as_f64().unwrap();
    assert!((reported - expected).abs() < 1e-12 * expected, "{reported} vs {expected}");
    // n⁺ is the exact image shifted by 0.1
    assert!((np - (1.0 / nm + 0.1)).abs() < 1e-14);
    assert_eq!(check(&checks, "rh_field")["status"], "PASS");
}

#[test]
fn zero_amplitude_sweep_gives_a_zero_row() {
    let tmp = TempDir::new().unwrap();
    let (out, dir) = run(tmp.path(), "sweep", Some("[sweep]\neps_list = [0.0]\n"), "z", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(dir.join("sweep.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[0][3].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn modes_with_positive_field_report_the_failed_hypothesis() {
    let tmp = TempDir::new().unwrap();
    let (out, dir) = run(tmp.path(), "modes", None, "m", &[]);
    assert_eq!(out.status.code(), Some(2));
    let report = json(&dir.join("modes.json"));
    assert_eq!(report["status"], "precondition_failed");
    assert_eq!(report["hypothesis"], "E(x0) < 0 at the shock");
    assert!(report["e_at_shock"].as_f64().unwrap() > 0.0);
    assert_eq!(json(&dir.join("checks.json"))["summary"]["fail"], 1);
}

#[test]
fn modes_with_negative_field_find_a_growth_rate() {
    let tmp = TempDir::new().unwrap();
    let cfg = "[params]\nJ = 1\nalpha = 0\nL = 0.5\n\n[shock]\nn_l = 0.5\nE_l = -0.2\nx_target = 0.15\n";
    let (out, dir) = run(tmp.path(), "modes", Some(cfg), "m", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.join("modes.json"));
    let search = &report["growth"]["search"];
    assert_eq!(search["outcome"], "found");
    let nu = search["nu"].as_f64().unwrap();
    assert!(nu > 0.0 && nu < search["nu_max"].as_f64().unwrap());
    let text = fs::read_to_string(dir.join("modes.csv")).unwrap();
    assert!(text.starts_with("x,U,U_x\n"));
}

#[test]
fn empty_portrait_grid_still_draws_axes() {
    let tmp = TempDir::new().unwrap();
    let (out, dir) = run(tmp.path(), "portrait", Some("[portrait]\nseeds_n = 0\nseeds_e = 0\n"), "p", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = fs::read_to_string(dir.join("portrait.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains(r#"id="axes""#) && svg.contains(r#"id="sonic-line""#));
    // only the two separatrices remain
    assert_eq!(svg.matches("<polyline").count(), 2);

    let cfg = "[portrait]\nseeds_n = 0\nseeds_e = 0\nn_min = 1.5\nn_max = 3.0\n";
    let (out, dir) = run(tmp.path(), "portrait", Some(cfg), "q", &[]);
    assert_eq!(out.status.code(), Some(0));
    let svg = fs::read_to_string(dir.join("portrait.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 0);
    assert!(svg.contains(r#"id="axes""#));
    assert_eq!(fs::read_to_string(dir.join("portrait.csv")).unwrap(), "trajectory,origin,class,n,E\n");
}

#[test]
fn portrait_marks_two_smooth_crossings() {
    let tmp = TempDir::new().unwrap();
    let (out, dir) = run(tmp.path(), "portrait", None, "p", &["--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&dir.join("portrait.json"));
    assert_eq!(report["census"]["smooth_crossing"], 2);
    assert!(!dir.join("portrait.svg").exists());
}

#[test]
fn outputs_are_byte_identical_and_reproducible_from_the_manifest() {
    let tmp = TempDir::new().unwrap();
    let (a, dir_a) = run(tmp.path(), "shock", None, "a", &[]);
    let (b, dir_b) = run(tmp.path(), "shock", None, "b", &[]);
    assert!(a.status.success() && b.status.success());
    let manifest = dir_a.join("manifest.json");
    let out = bin().args(["shock", "--config"]).arg(&manifest).arg("--out").arg(tmp.path().join("c")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let files = json(&manifest)["files"].as_array().unwrap().clone();
    assert!(files.len() >= 5);
    for f in files {
        let name = f.as_str().unwrap();
        let first = fs::read(dir_a.join(name)).unwrap();
        assert_eq!(first, fs::read(dir_b.join(name)).unwrap(), "{name}");
        assert_eq!(first, fs::read(tmp.path().join("c").join(name)).unwrap(), "{name}");
    }
}

#[test]
fn solution_csv_duplicates_the_shock_row() {
    let tmp = TempDir::new().unwrap();
    let (out, dir) = run(tmp.path(), "shock", None, "s", &["--format", "csv"]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_path(dir.join("shock.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["x", "n", "E", "regime"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let k = rows.iter().position(|r| &r[3] == "sub").unwrap();
    assert_eq!(&rows[k - 1][3], "sup");
    assert_eq!(rows[k - 1][0], rows[k][0]);
    assert_eq!(rows[k - 1][2], rows[k][2]);
    // 17 significant digits
    assert_eq!(rows[1][1].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
}

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let out = bin().arg("smooth").env("EP_TRANSONIC_OUT", tmp.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("smooth").join("smooth.csv").is_file());
}

#[test]
fn svg_is_only_for_portraits() {
    let tmp = TempDir::new().unwrap();
    let (out, _) = run(tmp.path(), "smooth", None, "s", &["--format", "svg"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tabulated_doping_is_read_relative_to_the_config() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("b.csv"), "x,b\n0,0.5\n0.5,0.52\n1,0.5\n").unwrap();
    let (out, dir) = run(tmp.path(), "shock", Some("[doping]\nfile = \"b.csv\"\n"), "t", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = json(&dir.join("manifest.json"));
    assert_eq!(manifest["config"]["doping"]["values"][1], 0.52);
    assert!(manifest["config"]["doping"].get("file").is_none());
}

#[test]
fn tolerance_scale_is_recorded() {
    let tmp = TempDir::new().unwrap();
    let (out, dir) = run(tmp.path(), "smooth", None, "s", &["--tol-scale", "10"]);
    assert!(out.status.success());
    assert_eq!(json(&dir.join("manifest.json"))["config"]["run"]["tol_scale"], 10.0);
    let (bad, _) = run(tmp.path(), "smooth", None, "s2", &["--tol-scale=-1"]);
    assert_eq!(bad.status.code(), Some(1));
    let (unknown, _) = run(tmp.path(), "smooth", None, "s3", &["--no-such-flag"]);
    assert_eq!(unknown.status.code(), Some(1));
}
