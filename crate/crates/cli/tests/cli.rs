use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const EP_POINT: &str = r#"
[system]
kind = "ep"
horizon = 2.0
[grid]
dt = 1e-3
[initial]
family = "point"
rho0 = 2.0
g0 = -3.0
"#;

const EP_SWEEP: &str = r#"
[system]
kind = "ep"
horizon = 10.0
[grid]
dt = 2e-3
[initial]
family = "point"
[sweep]
axes = [
  { param = "g0", min = -2.5, max = 0.5, count = 6 },
  { param = "rho0", min = 0.25, max = 2.0, count = 5 },
]
jobs = 1
"#;

const RELAX: &str = r#"
[system]
kind = "relax-local"
horizon = 2.0
law = { u = -1.0 }
[grid]
n = 256
half_width = 20.0
[initial]
family = "gaussian-bump"
u_base = 0.5
u_height = 0.1
[output]
snapshot_interval = 0.5
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ct-lab"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn simulate_ep_point_reports_blowup() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "ep.toml", EP_POINT);
    let out = tmp.path().join("out");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("kind=blowup"), "{text}");
    let t_c: f64 = text.lines().find_map(|l| l.strip_prefix("t_c=")).unwrap().parse().unwrap();
    let exact = (3.0 - 5f64.sqrt()) / 2.0;
    assert!((t_c - exact).abs() < 0.02 * exact);
    for f in ["manifest.json", "trajectory.csv", "outcomes.csv", "threshold_report.txt"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
}

#[test]
fn threshold_report_prints_key_values() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "ep.toml", EP_POINT);
    let out = tmp.path().join("out");
    let o =
        run(&["threshold-report", "--system", "ep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("system=ep"), "{text}");
    assert!(out.join("pointwise.csv").exists());
}

#[test]
fn missing_section_is_a_validation_error() {
    let tmp = TempDir::new().unwrap();
    let cfg =
        write_config(tmp.path(), "bad.toml", "[system]\nkind = \"ep\"\nhorizon = 1.0\n[initial]\nfamily = \"point\"\n");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[grid]"));
}

#[test]
fn bad_system_flag_is_a_validation_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "ep.toml", EP_POINT);
    let out = tmp.path().join("o");
    for system in ["plasma", "relax"] {
        let o = run(&[
            "threshold-report",
            "--system",
            system,
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(2), "--system {system}");
    }
}

#[test]
fn unknown_key_reports_its_line() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", &EP_POINT.replace("dt = 1e-3", "dt = 1e-3\nstep = 2"));
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 7:"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unreadable_config_is_a_validation_error() {
    let o = run(&["simulate", "--config", "/nonexistent/ct-lab.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn strict_mode_fails_on_indeterminate_cells() {
    let tmp = TempDir::new().unwrap();
    // rho0 = 0 is rejected by the point family, so the first cell is indeterminate
    let text = EP_POINT.to_string() + "[sweep]\naxes = [{ param = \"rho0\", min = 0.0, max = 1.0, count = 2 }]\n";
    let cfg = write_config(tmp.path(), "sweep.toml", &text);
    let out = tmp.path().join("o");
    let args = ["phase-diagram", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert_eq!(run(&args).status.code(), Some(0));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(run(&strict).status.code(), Some(3));
}

#[test]
fn phase_diagram_is_byte_identical_across_job_counts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "sweep.toml", EP_SWEEP);
    let mut outputs = Vec::new();
    for (k, jobs) in ["1", "4", "4"].iter().enumerate() {
        let out = tmp.path().join(format!("run{k}"));
        let o =
            run(&["phase-diagram", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", jobs]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(files(&out));
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn simulate_reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "relax.toml", RELAX);
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("run{k}"));
        let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(files(&out));
    }
    assert!(outputs[0].iter().any(|(p, _)| p.starts_with("snapshots")));
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn verify_closed_form_prints_table() {
    let tmp = TempDir::new().unwrap();
    let text =
        EP_POINT.to_string() + "[verify]\npoints = [[2.0, 0.0], [2.0, -3.0]]\ndts = [1e-2, 5e-3]\nhorizon = 1.0\n";
    let cfg = write_config(tmp.path(), "v.toml", &text);
    let out = tmp.path().join("o");
    let o = run(&["verify-closed-form", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("excluded (supercritical)"), "{text}");
    assert!(out.join("convergence.csv").exists());
}
