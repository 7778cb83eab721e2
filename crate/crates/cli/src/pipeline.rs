//! Run orchestration: simulate (or load) a record, run the requested
//! checkers and write `summary.json` plus report files.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use isokin_core::io::{load_record, save_record, write_snapshot_csv};
use isokin_core::solver::{run, SpaceTimeRecord};
use isokin_core::state::ConservedField;

use crate::checks::{riemann_l1, run_check, CheckResult, Context, REPORTS};
use crate::config::{check_names, RunConfig};
use crate::error::{CliError, Result, EXIT_CHECK_FAILED, EXIT_OK};
use crate::presets::{check_bounds, exact_riemann, initial_field};

pub const SUMMARY: &str = "summary.json";
pub const AGGREGATE: &str = "aggregate.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    CheckFailed,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => EXIT_OK,
            _ => EXIT_CHECK_FAILED,
        }
    }

    fn from_checks(checks: &[CheckResult]) -> Self {
        if checks.iter().all(|c| c.passed) {
            Status::Ok
        } else {
            Status::CheckFailed
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub cells: usize,
    pub dx: f64,
    pub t_end: f64,
    pub steps: usize,
    pub snapshots: usize,
    pub mass_drift: f64,
    pub momentum_drift: f64,
    pub total_dissipation: f64,
    pub audits_passed: bool,
}

/// One member of a batch or sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberEntry {
    pub label: String,
    pub dir: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub status: Status,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSummary>,
    #[serde(default)]
    pub checks: Vec<CheckResult>,
    /// Every check metric as `check.metric`.
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<MemberEntry>,
}

/// Which diagnostics a subcommand runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Command {
    Simulate,
    Riemann { tol: f64 },
    Only(&'static [&'static str]),
}

impl Command {
    fn runs(&self, kind: &str) -> bool {
        match self {
            Command::Simulate => true,
            Command::Riemann { .. } => false,
            Command::Only(kinds) => kinds.contains(&kind),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    fs::write(path, s).map_err(|e| CliError::io(path, e))
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    let path = dir.join(SUMMARY);
    let s = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&s).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join(REPORTS)).map_err(|e| CliError::io(dir, e))
}

/// Simulate the configured run with the given seed.
pub fn simulate(cfg: &RunConfig, seed: u64) -> Result<(SpaceTimeRecord, ConservedField)> {
    let grid = cfg.grid.build()?;
    let init = initial_field(&grid, &cfg.grid, &cfg.initial, seed)?;
    check_bounds(cfg, &init)?;
    let rec = run(&grid, &init, &cfg.scheme.build())?;
    Ok((rec, init))
}

/// Config as stored in the manifest: the resolved file with the member seed.
fn manifest_config(cfg: &RunConfig, seed: u64) -> serde_json::Value {
    let mut c = cfg.clone();
    c.seed = seed;
    c.batch = 1;
    c.out = None;
    serde_json::to_value(&c).unwrap_or(serde_json::Value::Null)
}

/// Config saved with a record directory.
pub fn record_config(dir: &Path) -> Result<RunConfig> {
    let (_, manifest) = load_record(dir)?;
    serde_json::from_value(manifest.config).map_err(|e| CliError::Usage(format!("{}: manifest config: {e}", dir.display())))
}

/// One run in `dir`: simulate (or reuse `record`), check, summarize.
pub fn run_single(cfg: &RunConfig, seed: u64, dir: &Path, command: Command, record: Option<&Path>) -> Result<Summary> {
    create_dir(dir)?;
    let rec = match record {
        Some(src) => load_record(src)?.0,
        None => {
            let (rec, _) = simulate(cfg, seed)?;
            save_record(dir, &rec, manifest_config(cfg, seed))?;
            rec
        }
    };
    let exact = exact_riemann(cfg)?;
    let ctx = Context { cfg, record: &rec, exact: exact.as_ref(), dir: Some(dir) };

    let s = &rec.summary;
    let mut checks = vec![CheckResult {
        name: "audits".into(),
        kind: "audits".into(),
        passed: s.passed,
        error: None,
        metrics: BTreeMap::from([
            ("mass_drift".to_string(), s.mass_drift),
            ("momentum_drift".to_string(), s.momentum_drift),
            ("max_lambda1_decrease".to_string(), s.max_lambda1_decrease),
            ("max_lambda2_increase".to_string(), s.max_lambda2_increase),
            ("min_cell_dissipation".to_string(), s.min_cell_dissipation),
            ("total_dissipation".to_string(), s.total_dissipation),
            ("max_energy_increase".to_string(), s.max_energy_increase),
        ]),
        artifacts: Vec::new(),
    }];

    if let Command::Riemann { tol } = command {
        checks.push(riemann_check(&ctx, tol)?);
    }
    let names = check_names(&cfg.diagnostics);
    for (name, d) in names.iter().zip(&cfg.diagnostics) {
        if command.runs(d.kind()) {
            checks.push(run_check(&ctx, name, d)?);
        }
    }

    let metrics = checks
        .iter()
        .flat_map(|c| c.metrics.iter().map(move |(k, v)| (format!("{}.{k}", c.name), *v)))
        .collect();
    let summary = Summary {
        command: command_name(command).into(),
        status: Status::from_checks(&checks),
        seed,
        run: Some(RunSummary {
            cells: rec.grid.n_cells,
            dx: rec.grid.dx(),
            t_end: rec.t_end(),
            steps: s.steps,
            snapshots: rec.snapshots.len(),
            mass_drift: s.mass_drift,
            momentum_drift: s.momentum_drift,
            total_dissipation: s.total_dissipation,
            audits_passed: s.passed,
        }),
        checks,
        metrics,
        members: Vec::new(),
    };
    write_json(&dir.join(SUMMARY), &summary)?;
    Ok(summary)
}

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Simulate => "simulate",
        Command::Riemann { .. } => "riemann",
        Command::Only(kinds) => kinds[0],
    }
}

/// Final snapshot against the exact solution; writes `riemann.csv` and `riemann.json`.
fn riemann_check(ctx: &Context, tol: f64) -> Result<CheckResult> {
    let ex = ctx.exact.ok_or_else(|| CliError::Usage("the riemann command needs the riemann preset".into()))?;
    let (sol, xj) = ex;
    let rec = ctx.record;
    let t = rec.t_end();
    let l1 = riemann_l1(rec, ex);
    let rh = sol.shocks().map(|w| w.rh_residual().iter().fold(0.0f64, |a, r| a.max(r.abs()))).fold(0.0, f64::max);
    let mut artifacts = Vec::new();
    if let Some(dir) = ctx.dir {
        let exact_field = ConservedField::from_states(rec.grid.centers().iter().map(|&x| {
            if t > 0.0 {
                sol.sample((x - xj) / t)
            } else if x < *xj {
                sol.left
            } else {
                sol.right
            }
        }));
        let path = dir.join("riemann.csv");
        write_snapshot_csv(&path, &rec.grid, &exact_field, rec.vacuum_floor)
            .map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display())))?;
        write_json(&dir.join("riemann.json"), sol)?;
        artifacts = vec!["riemann.csv".into(), "riemann.json".into()];
    }
    Ok(CheckResult {
        name: "riemann".into(),
        kind: "riemann".into(),
        passed: l1 <= tol && rh <= 1e-10,
        error: None,
        metrics: BTreeMap::from([
            ("l1_error".to_string(), l1),
            ("max_rh_residual".to_string(), rh),
            ("waves".to_string(), sol.waves.len() as f64),
        ]),
        artifacts,
    })
}

/// Batch of `cfg.batch` seeds in `seed_<n>` subdirectories, run in parallel.
pub fn run_batch(cfg: &RunConfig, out: &Path, command: Command) -> Result<Summary> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let seeds: Vec<u64> = (0..cfg.batch as u64).map(|k| cfg.seed + k).collect();
    let results: Vec<(String, String, Result<Summary>)> = seeds
        .par_iter()
        .map(|&seed| {
            let rel = format!("seed_{seed}");
            let r = run_single(cfg, seed, &out.join(&rel), command, None);
            (seed.to_string(), rel, r)
        })
        .collect();
    let rows: Vec<Row> = results.iter().map(|(label, _, r)| Row::new(vec![label.clone()], r)).collect();
    write_aggregate(&out.join(AGGREGATE), &["seed"], &rows)?;
    let summary = members_summary(command_name(command), cfg.seed, &results, BTreeMap::new());
    write_json(&out.join(SUMMARY), &summary)?;
    Ok(summary)
}

/// Row of an aggregate table.
pub struct Row {
    pub lead: Vec<String>,
    pub status: Status,
    pub metrics: BTreeMap<String, f64>,
}

impl Row {
    pub fn new(lead: Vec<String>, r: &Result<Summary>) -> Self {
        match r {
            Ok(s) => Row { lead, status: s.status, metrics: s.metrics.clone() },
            Err(_) => Row { lead, status: Status::Error, metrics: BTreeMap::new() },
        }
    }
}

/// CSV with the lead columns, `status`, then the union of metric names.
pub fn write_aggregate(path: &Path, lead: &[&str], rows: &[Row]) -> Result<()> {
    let keys: BTreeSet<&String> = rows.iter().flat_map(|r| r.metrics.keys()).collect();
    let to_err = |e: csv::Error| CliError::Internal(format!("writing {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(to_err)?;
    let header: Vec<String> = lead.iter().map(|s| s.to_string()).chain(["status".to_string()]).chain(keys.iter().map(|k| k.to_string())).collect();
    w.write_record(&header).map_err(to_err)?;
    for r in rows {
        let status = serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let rec: Vec<String> = r
            .lead
            .iter()
            .cloned()
            .chain([status])
            .chain(keys.iter().map(|k| r.metrics.get(*k).map_or(String::new(), |v| v.to_string())))
            .collect();
        w.write_record(&rec).map_err(to_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn members_summary(command: &str, seed: u64, results: &[(String, String, Result<Summary>)], metrics: BTreeMap<String, f64>) -> Summary {
    let members: Vec<MemberEntry> = results
        .iter()
        .map(|(label, dir, r)| MemberEntry {
            label: label.clone(),
            dir: dir.clone(),
            status: r.as_ref().map_or(Status::Error, |s| s.status),
            error: r.as_ref().err().map(|e| e.to_string()),
        })
        .collect();
    let status = if members.iter().all(|m| m.status == Status::Ok) { Status::Ok } else { Status::CheckFailed };
    Summary { command: command.into(), status, seed, run: None, checks: Vec::new(), metrics, members }
}

/// Output directory: the flag, then the config, then `isokin-out`.
pub fn resolve_out(flag: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    flag.map(Path::to_path_buf).or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("isokin-out"))
}

/// Echo of the resolved config for `--dry-run`.
pub fn dry_run_echo(cfg: &RunConfig, out: &Path) -> Result<String> {
    let mut c = cfg.clone();
    c.out = Some(out.to_path_buf());
    toml::to_string_pretty(&c).map_err(|e| CliError::Internal(e.to_string()))
}
