use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const EXAMPLE: &str = "forcing = manufactured\ninitial_data = manufactured\nK = 10\nN = 10\nT = 4\n";

fn wave_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wave-sim")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn summary_value(dir: &Path, key: &str) -> String {
    let text = fs::read_to_string(dir.join("summary.txt")).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")).map(str::to_owned))
        .unwrap_or_else(|| panic!("{key} missing from summary:\n{text}"))
}

#[test]
fn zero_simulation_has_zero_energy() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "forcing = zero\ninitial_data = zero\nK = 8\nN = 12\nT = 2\n");
    let out = tmp.path().join("out");
    let o = wave_sim(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let energy = fs::read_to_string(out.join("energy.csv")).unwrap();
    let mut lines = energy.lines();
    assert_eq!(lines.next(), Some("t,E,H,I1,I2,J,psi,L,Lyap"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 13);
    for row in rows {
        let cells: Vec<_> = row.split(',').collect();
        assert_eq!(cells.len(), 9);
        for (i, c) in cells.iter().enumerate().skip(1) {
            if i == 7 {
                assert!(c.is_empty(), "L must be absent when H(0) = 0");
            } else {
                assert_eq!(c.parse::<f64>().unwrap(), 0.0);
            }
        }
    }
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 1 + 9 * 13);
}

#[test]
fn check_hypotheses_on_example() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), EXAMPLE);
    let out = tmp.path().join("out");
    let o = wave_sim(&["check-hypotheses", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for key in ["eta_star_lt_1", "rho_le_1.563e-3", "E0_lt_0.015", "E_star_lt_0.017"] {
        assert_eq!(summary_value(&out, key), "true", "{key}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), EXAMPLE);
    let out = tmp.path().join("out");
    let args = ["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--emit-surfaces"];
    let read_all = || {
        let mut names: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        names.into_iter().map(|n| (n.clone(), fs::read(out.join(n)).unwrap())).collect::<Vec<_>>()
    };
    assert_eq!(wave_sim(&args).status.code(), Some(0));
    let first = read_all();
    assert_eq!(wave_sim(&args).status.code(), Some(0));
    assert_eq!(first, read_all());
    assert_eq!(first.len(), 4);
}

#[test]
fn flags_override_file() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &format!("mode = verify\n{EXAMPLE}"));
    let out = tmp.path().join("out");
    let o = wave_sim(&["simulate", "--config", &cfg, "--K", "6", "--N", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary_value(&out, "mode"), "simulate");
    assert_eq!(summary_value(&out, "K"), "6");
    assert_eq!(summary_value(&out, "N"), "3");
}

#[test]
fn errors_exit_one_without_output() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();
    let cases = [
        ("simulate", "bogus = 1\n"),
        ("simulate", "K = 10\nK = 12\n"),
        ("simulate", "K = ten\n"),
        ("simulate", "r1 = 3\n"),
        ("verify", "forcing = zero\n"),
        ("verify", "K = 48\nN = 50\n"),
    ];
    for (mode, text) in cases {
        let cfg = write_config(tmp.path(), text);
        let o = wave_sim(&[mode, "--config", &cfg, "--out", out_s]);
        assert_eq!(o.status.code(), Some(1), "{mode} with {text:?}");
        assert!(!o.stderr.is_empty());
        assert!(!out.exists(), "no files on failure for {text:?}");
    }
    let missing = tmp.path().join("nope.cfg");
    assert_eq!(wave_sim(&["simulate", "--config", missing.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(wave_sim(&["nonsense", "--config", "x"]).status.code(), Some(1));
}

#[test]
fn blowup_analysis_flags_inadmissible_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), EXAMPLE);
    let out = tmp.path().join("out");
    let o = wave_sim(&["analyze-blowup", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(summary_value(&out, "hypotheses_ok"), "false");
    assert_eq!(summary_value(&out, "forcing_zero"), "false");
}

#[test]
fn blowup_analysis_on_admissible_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "gamma1 = 1\ngamma2 = 0\nK1 = 4\nK2 = 4\nforcing = zero\ninitial_data = scaled\ninitial_scale = 10\n\
         K = 20\nN = 200\nT = 0.1\nsolver = condensed\nsweeps = 40\nsweep_tol = 1e-12\n",
    );
    let out = tmp.path().join("out");
    let o = wave_sim(&["analyze-blowup", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary_value(&out, "hypotheses_ok"), "true");
    let drop: f64 = summary_value(&out, "max_H_drop").parse().unwrap();
    assert!(drop <= 1e-6);
}

#[test]
fn shipped_configs_parse() {
    use wave_sim::{parse_config, Mode, Overrides};
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let load = |name: &str| parse_config(&fs::read_to_string(root.join(name)).unwrap(), &Overrides::default());
    let verify = load("manufactured.cfg").unwrap();
    assert_eq!(verify.mode, Mode::Verify);
    assert!(verify.is_manufactured());
    let blowup = load("blowup.cfg").unwrap();
    assert_eq!(blowup.mode, Mode::AnalyzeBlowup);
    assert_eq!(blowup.n, 1000);
}
