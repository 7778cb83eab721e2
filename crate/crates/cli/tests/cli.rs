use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use isokin_cli::pipeline::read_summary;
use isokin_core::io::{load_record, read_audits_csv, read_snapshot_csv};

fn isokin(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_isokin"));
    cmd.args(args);
    for key in ["ISOKIN_CONFIG", "ISOKIN_OUT", "ISOKIN_DRY_RUN", "ISOKIN_THREADS", "ISOKIN_RECORD"] {
        cmd.env_remove(key);
    }
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

const SHOCK_TUBE: &str = r#"
[grid]
cells = 400
boundary = "outflow"

[scheme]
t_end = 0.2

[initial]
preset = "riemann"
left = { rho = 2.0 }
right = { rho = 1.0 }

[[diagnostics]]
kind = "trace"
curve = { shock = 2, t_from = 0.05 }
trace = { band = 0.05, ladder_top = 0.2, floor = 0.02 }

[[diagnostics]]
kind = "rh"
curve = { shock = 2, t_from = 0.05 }
trace = { band = 0.05, ladder_top = 0.2, floor = 0.02 }
expect = "SHOCK"
"#;

#[test]
fn riemann_run_writes_record_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SHOCK_TUBE);
    let out = tmp.path().join("out");
    let o = isokin(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let (rec, manifest) = load_record(&out).unwrap();
    assert_eq!(rec.grid.n_cells, 400);
    for rel in &manifest.snapshots {
        assert_eq!(read_snapshot_csv(&out.join(rel)).unwrap().field.len(), 400);
    }
    assert_eq!(read_audits_csv(&out.join(&manifest.audits)).unwrap().len(), rec.summary.steps);

    let s = read_summary(&out).unwrap();
    let names: Vec<&str> = s.checks.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["audits", "trace", "rh"]);
    for c in &s.checks {
        for a in &c.artifacts {
            assert!(out.join(a).is_file(), "{a}");
        }
    }
    assert!(out.join("reports/trace_minus_ladder.csv").is_file());
    assert!(out.join("reports/rh_samples.csv").is_file());
    assert_eq!(s.metrics["rh.shock"], 1.0);
}

#[test]
fn repeated_runs_give_identical_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SHOCK_TUBE);
    let read = |dir: &str| {
        let out = tmp.path().join(dir);
        let o = isokin(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "2"], &[]);
        assert_eq!(code(&o), 0);
        fs::read(out.join("summary.json")).unwrap()
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn saved_record_is_reused_by_checker_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SHOCK_TUBE);
    let run = tmp.path().join("run");
    assert_eq!(code(&isokin(&["simulate", "--config", cfg.to_str().unwrap(), "--out", run.to_str().unwrap()], &[])), 0);

    // the config comes from the manifest when --config is absent
    let again = tmp.path().join("again");
    let o = isokin(&["rh", "--record", run.to_str().unwrap(), "--out", again.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (a, b) = (read_summary(&run).unwrap(), read_summary(&again).unwrap());
    assert_eq!(a.checks[2], b.checks[1]);
    assert_eq!(b.command, "rh");
    assert!(!again.join("manifest.json").exists());
}

#[test]
fn failed_checks_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let body = SHOCK_TUBE.replace("expect = \"SHOCK\"", "expect = \"CONTINUOUS\"");
    let cfg = write_config(tmp.path(), "c.toml", &body);
    let out = tmp.path().join("out");
    let o = isokin(&["rh", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 1);
    let s = read_summary(&out).unwrap();
    assert!(!s.checks[1].passed);
    assert_eq!(s.checks[1].metrics["label_ok"], 0.0);
}

#[test]
fn checker_errors_are_recorded_as_failures() {
    let tmp = tempfile::tempdir().unwrap();
    // the curve leaves the domain long before t_end
    let body = SHOCK_TUBE.replace("curve = { shock = 2, t_from = 0.05 }\ntrace = { band = 0.05, ladder_top = 0.2, floor = 0.02 }\n\n", "curve = { x0 = 0.99, speed = 3.0 }\n\n");
    let cfg = write_config(tmp.path(), "c.toml", &body);
    let out = tmp.path().join("out");
    let o = isokin(&["trace", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let s = read_summary(&out).unwrap();
    assert!(s.checks[1].error.is_some());
}

#[test]
fn config_errors_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let base = "[grid]\ncells = 50\n[initial]\npreset = \"constant\"\nstate = { rho = 1.0 }\n";

    let cfg = write_config(tmp.path(), "cfl.toml", &format!("{base}[scheme]\ncfl = 1.5\n"));
    let o = isokin(&["simulate", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("scheme.cfl = 1.5: must lie in (0, 1]"), "{}", stderr(&o));

    let cfg = write_config(tmp.path(), "cflx.toml", &format!("{base}[scheme]\ncflx = 0.5\n"));
    let o = isokin(&["simulate", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("did you mean `cfl`?"), "{}", stderr(&o));

    let o = isokin(&["simulate", "--config", tmp.path().join("missing.toml").to_str().unwrap()], &[]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&isokin(&["simulate"], &[])), 2);
    assert_eq!(code(&isokin(&["frobnicate"], &[])), 2);

    let cfg = write_config(tmp.path(), "empty.toml", &format!("{base}[sweep]\naxis = \"grid.cells\"\nvalues = []\n"));
    let o = isokin(&["sweep", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("empty axis"), "{}", stderr(&o));
}

#[test]
fn dry_run_echoes_defaults_without_simulating() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "[grid]\ncells = 50\n[initial]\npreset = \"constant\"\nstate = { rho = 1.0 }\n");
    let out = tmp.path().join("out");
    let o = isokin(&["simulate", "--dry-run"], &[("ISOKIN_CONFIG", cfg.to_str().unwrap()), ("ISOKIN_OUT", out.to_str().unwrap())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let echo = String::from_utf8(o.stdout).unwrap();
    assert!(echo.contains("cfl = 0.5") && echo.contains("boundary = \"periodic\""), "{echo}");
    assert!(echo.contains(out.to_str().unwrap()));
    assert!(!out.exists());

    let o = isokin(&["simulate"], &[("ISOKIN_CONFIG", cfg.to_str().unwrap()), ("ISOKIN_OUT", out.to_str().unwrap()), ("ISOKIN_DRY_RUN", "1")]);
    assert_eq!(code(&o), 0);
    assert!(!out.exists());
}

#[test]
fn batch_of_ten_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "seed = 5\nbatch = 10\n[grid]\ncells = 100\n[scheme]\nt_end = 0.05\nstride = 5\n[initial]\npreset = \"random_linfty\"\n",
    );
    let out = tmp.path().join("out");
    let o = isokin(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut inits = Vec::new();
    for seed in 5..15 {
        let dir = out.join(format!("seed_{seed}"));
        let (rec, m) = load_record(&dir).unwrap();
        assert_eq!(m.config["seed"], seed);
        inits.push(rec.snapshots[0].clone());
    }
    inits.dedup();
    assert_eq!(inits.len(), 10);

    let mut r = csv::Reader::from_path(out.join("aggregate.csv")).unwrap();
    assert_eq!(r.headers().unwrap().iter().take(2).collect::<Vec<_>>(), ["seed", "status"]);
    let seeds: Vec<String> = r.records().map(|row| row.unwrap()[0].to_string()).collect();
    assert_eq!(seeds, (5..15).map(|s| s.to_string()).collect::<Vec<_>>());
    assert_eq!(read_summary(&out).unwrap().members.len(), 10);
}

#[test]
fn refinement_sweep_emits_slope() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "[grid]\ncells = 100\n[scheme]\nt_end = 0.2\n[initial]\npreset = \"smooth_sine\"\n\
         [[diagnostics]]\nkind = \"mu\"\n\
         [sweep]\naxis = \"grid.cells\"\nvalues = [100, 200, 400, 1]\nfit = { x = \"dx\", y = \"mu.total\" }\n",
    );
    let out = tmp.path().join("out");
    let o = isokin(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    // the last value is invalid: its failure is recorded, the others still run
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let s = read_summary(&out).unwrap();
    let status: Vec<_> = s.members.iter().map(|m| serde_json::to_value(m.status).unwrap()).collect();
    assert_eq!(status, ["ok", "ok", "ok", "error"]);
    assert!(s.members[3].error.as_ref().unwrap().contains("grid.cells = 1"));

    let sweep: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    let slope = sweep["fit"]["slope"].as_f64().unwrap();
    assert!((0.8..1.2).contains(&slope), "slope {slope}");
    assert_eq!(s.metrics["fit.slope"], slope);

    let mut r = csv::Reader::from_path(out.join("aggregate.csv")).unwrap();
    assert_eq!(r.headers().unwrap().iter().take(4).collect::<Vec<_>>(), ["index", "value", "dx", "status"]);
    let dx: Vec<f64> = r.records().take(3).map(|row| row.unwrap()[2].parse().unwrap()).collect();
    assert_eq!(dx, [0.01, 0.005, 0.0025]);
}

#[test]
fn riemann_command_writes_exact_profile() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SHOCK_TUBE);
    let out = tmp.path().join("out");
    let o = isokin(&["riemann", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--tol", "0.05"], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let exact = read_snapshot_csv(&out.join("riemann.csv")).unwrap();
    assert_eq!(exact.field.len(), 400);
    assert_eq!(exact.field.state(0).rho, 2.0);
    let s = read_summary(&out).unwrap();
    assert_eq!(s.checks.iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), ["audits", "riemann"]);
    assert!(s.metrics["riemann.l1_error"] < 0.05);
}
