use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const FREE: &str = "model = free_particle\nperiod = 1\n";
const KP: &str = "# Kronig-Penney\nmodel = kronig_penney\nperiod = 1\nbarrier_height = 10\nbarrier_width = 0.5\n";

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn model(&self, name: &str, text: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn hill(config: &Path, args: &[&str]) -> Output {
    hill_env(config, args, &[])
}

fn hill_env(config: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hill"));
    cmd.args(args).arg("--config").arg(config);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_rows(o: &Output) -> Vec<Vec<String>> {
    stdout(o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn free_particle_band_states() {
    let ws = Workspace::new();
    let out = hill(&ws.model("free.cfg", FREE), &["band-states", "--band", "0", "--cells", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("j,lambda\n"));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 3);
    for (k, row) in rows.iter().enumerate() {
        let j = k + 1;
        assert_eq!(row[0], j.to_string());
        let lambda: f64 = row[1].parse().unwrap();
        let exact = (j as f64 * PI / 4.0).powi(2);
        assert!((lambda - exact).abs() < 1e-12 * exact);
    }
}

#[test]
fn free_particle_discriminant_scan() {
    let ws = Workspace::new();
    let out = hill(
        &ws.model("free.cfg", FREE),
        &["discriminant-scan", "--lmin", "-1", "--lmax", "0", "--points", "2"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = csv_rows(&out);
    let parsed: Vec<(f64, f64)> = rows.iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap())).collect();
    assert_eq!(parsed[0].0, -1.0);
    assert!((parsed[0].1 - 2.0 * 1f64.cosh()).abs() < 1e-12);
    assert_eq!(parsed[1], (0.0, 2.0));
    // 17 significant digits
    assert_eq!(rows[1][1], "2.0000000000000000e0");
}

#[test]
fn kronig_penney_oracle_check_passes() {
    let ws = Workspace::new();
    let out = hill(
        &ws.model("kp.cfg", KP),
        &["oracle-check", "--tau", "0", "--cells", "8", "--bands", "3", "--format", "json"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["status"], "PASS");
    assert!(v["worst_rel_err"].as_f64().unwrap() < 1e-4);
    assert_eq!(v["predicted_count"], 23);
    assert_eq!(v["meta"]["parameters"]["gridsize"], 8192);
}

#[test]
fn oracle_failure_exits_with_three() {
    let ws = Workspace::new();
    let out = hill(
        &ws.model("kp.cfg", KP),
        &["oracle-check", "--tau", "0", "--cells", "2", "--bands", "2", "--rel-tol", "1e-13"],
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).starts_with("FAIL"));
}

#[test]
fn json_artifacts_share_meta_and_reparse() {
    let ws = Workspace::new();
    let cfg = ws.model("kp.cfg", KP);
    let runs: &[&[&str]] = &[
        &["validate"],
        &["discriminant-scan", "--lmin", "0", "--lmax", "50", "--points", "11"],
        &["band-edges", "--gaps", "2"],
        &["band-states", "--band", "1", "--cells", "5"],
        &["gap-states", "--gap", "1", "--tau", "0,0.3"],
        &["spectrum", "--tau", "0.2", "--cells", "4", "--bands", "2"],
        &["tau-sweep", "--gap", "0", "--points", "64"],
        &["eigenfunction", "--lambda", "14.247691628724768", "--tau", "0", "--cells", "2", "--grid-per-cell", "16"],
    ];
    let mut hashes = Vec::new();
    for args in runs {
        let mut a = args.to_vec();
        a.extend(["--format", "json"]);
        let out = hill(&cfg, &a);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", stderr(&out));
        let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
        let meta = &v["meta"];
        assert_eq!(meta["command"], args[0]);
        assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(meta["model"]["kind"], "kronig_penney");
        assert!(meta["tolerances"]["integration_rtol"].as_f64().unwrap() > 0.0);
        hashes.push(meta["model_hash"].as_str().unwrap().to_string());
        // emitting the parsed value again reproduces the document
        assert_eq!(serde_json::to_string_pretty(&v).unwrap() + "\n", stdout(&out));
    }
    assert!(hashes.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(hashes[0].len(), 64);
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let ws = Workspace::new();
    let cfg = ws.model("kp.cfg", KP);
    for args in [
        &["tau-sweep", "--gap", "1", "--points", "96", "--format", "json"][..],
        &["spectrum", "--tau", "0.3", "--cells", "6", "--bands", "3"][..],
    ] {
        let one = hill_env(&cfg, args, &[("HILL_THREADS", "1")]);
        let four = hill_env(&cfg, args, &[("HILL_THREADS", "4")]);
        let again = hill(&cfg, args);
        assert_eq!(one.status.code(), Some(0));
        assert_eq!(one.stdout, four.stdout);
        assert_eq!(one.stdout, again.stdout);
    }
}

#[test]
fn spectrum_csv_schema() {
    let ws = Workspace::new();
    let out = hill(&ws.model("kp.cfg", KP), &["spectrum", "--tau", "0", "--cells", "3", "--bands", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("lambda,type,band_or_gap_index,j_or_subtype,rho_or_blank\n"));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 5);
    let gap: Vec<_> = rows.iter().filter(|r| r[1] == "gap").collect();
    assert_eq!(gap.len(), 1);
    assert_eq!(gap[0][3], "surface_right");
    assert!(rows.iter().filter(|r| r[1] == "band").all(|r| r[4].is_empty()));
    let lambdas: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(lambdas.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn tau_sweep_csv() {
    let ws = Workspace::new();
    let out = hill(&ws.model("kp.cfg", KP), &["tau-sweep", "--gap", "0", "--points", "64"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("tau,lambda,subtype\n"));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 64);
    assert_eq!(rows[63][0].parse::<f64>().unwrap(), 1.0);
    assert!(stderr(&out).contains("1 up(s) and down(s)"));
}

#[test]
fn output_flag_routes_summary_to_stdout() {
    let ws = Workspace::new();
    let target = ws.path("edges.csv");
    let out = hill(
        &ws.model("kp.cfg", KP),
        &["band-edges", "--gaps", "2", "--output", target.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(0));
    let written = std::fs::read_to_string(&target).unwrap();
    assert!(written.starts_with("index,kind,lambda,degenerate\n"));
    assert_eq!(written.lines().count(), 6);
    assert!(stdout(&out).contains("interlacing holds"));
}

#[test]
fn degenerate_edges_are_flagged() {
    let ws = Workspace::new();
    let out = hill(&ws.model("free.cfg", FREE), &["band-edges", "--gaps", "2"]);
    let rows = csv_rows(&out);
    assert_eq!(rows[0][..2], ["0", "nu"]);
    assert_eq!(rows[0][3], "false");
    assert!(rows[1..].iter().all(|r| r[3] == "true"), "{rows:?}");
}

#[test]
fn piecewise_model_validates() {
    let ws = Workspace::new();
    let cfg = ws.model(
        "pc.cfg",
        "model = piecewise_constant\nperiod = 1\nsegment = 0.3, 1, 5, 1\nsegment = 0.7, 2, 0, 1.5\n",
    );
    let out = hill(&cfg, &["validate"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("breakpoints,2"));
}

#[test]
fn validation_errors_exit_with_one() {
    let ws = Workspace::new();
    let free = ws.model("free.cfg", FREE);
    let cases: Vec<(PathBuf, Vec<&str>, &str)> = vec![
        (free.clone(), vec!["band-edges", "--gaps", "0"], "--gaps"),
        (free.clone(), vec!["band-edges", "--gap", "2"], "--gap"),
        (free.clone(), vec!["tau-sweep", "--gap", "0", "--points", "10"], "--points"),
        (free.clone(), vec!["spectrum", "--tau", "0", "--cells", "0", "--bands", "2"], "--cells"),
        (free.clone(), vec!["discriminant-scan", "--lmin", "1", "--lmax", "0", "--points", "3"], "--lmax"),
        (free.clone(), vec!["oracle-check", "--tau", "0", "--cells", "4", "--bands", "2", "--gridsize", "100"], "--gridsize"),
        (ws.model("bad.cfg", "model = mathieu\nperiod = 1\n"), vec!["validate"], "`amplitude`"),
        (ws.model("neg.cfg", "model = piecewise_constant\nperiod = 1\nsegment = 1, -1, 0, 1\n"), vec!["validate"], "p is negative"),
        (ws.path("missing.cfg"), vec!["validate"], "--config"),
    ];
    for (cfg, args, needle) in cases {
        let out = hill(&cfg, &args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", stderr(&out));
        assert!(stderr(&out).contains(needle), "{args:?}: {}", stderr(&out));
    }
    let out = hill_env(&free, &["validate"], &[("HILL_THREADS", "0")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("HILL_THREADS"));
}

#[test]
fn stale_eigenvalue_exits_with_two() {
    let ws = Workspace::new();
    let out = hill(
        &ws.model("free.cfg", FREE),
        &["eigenfunction", "--lambda", "3", "--tau", "0", "--cells", "4"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("endpoint residual"));
}

#[test]
fn eigenfunction_is_a_sine() {
    let ws = Workspace::new();
    let lambda = format!("{}", (PI / 4.0).powi(2));
    let out = hill(
        &ws.model("free.cfg", FREE),
        &["eigenfunction", "--lambda", &lambda, "--tau", "0", "--cells", "4", "--grid-per-cell", "32"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 4 * 32 + 1);
    let last: f64 = rows[128][1].parse().unwrap();
    assert!(last.abs() < 1e-12);
}
