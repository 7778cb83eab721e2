//! On-disk layout of a run: CSV snapshots, an audit table and `manifest.json`.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a saved
//! record loads back bit for bit.

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::solver::{AuditSummary, SchemeKind, SpaceTimeRecord, StepAudit};
use crate::state::{ConservedField, Grid1D};

pub const MANIFEST: &str = "manifest.json";
pub const AUDITS: &str = "audits.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub grid: Grid1D,
    pub scheme: SchemeKind,
    pub cfl: f64,
    pub velocity_bound: f64,
    pub vacuum_floor: f64,
    pub stride: usize,
    pub times: Vec<f64>,
    /// Paths relative to the manifest.
    pub snapshots: Vec<String>,
    pub audits: String,
    pub summary: AuditSummary,
    /// Whatever configuration produced the run.
    #[serde(default)]
    pub config: serde_json::Value,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Columns `x, rho, m, lambda1, lambda2`; the invariants are left empty at vacuum.
pub fn write_snapshot_csv(path: &Path, grid: &Grid1D, field: &ConservedField, floor: f64) -> Result<()> {
    field.validate()?;
    if field.len() != grid.n_cells {
        return Err(Error::InvalidData(format!("field has {} cells, grid has {}", field.len(), grid.n_cells)));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "rho", "m", "lambda1", "lambda2"])?;
    for (i, s) in field.states().enumerate() {
        let lam = (!s.is_vacuum(floor)).then(|| {
            let u = s.m / s.rho;
            (u - 0.5 * s.rho, u + 0.5 * s.rho)
        });
        w.write_record(&[
            grid.center(i).to_string(),
            s.rho.to_string(),
            s.m.to_string(),
            opt(lam.map(|l| l.0)),
            opt(lam.map(|l| l.1)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub x: Vec<f64>,
    pub field: ConservedField,
    pub lambda1: Vec<Option<f64>>,
    pub lambda2: Vec<Option<f64>>,
}

fn parse_cell(s: &str, col: &str, line: usize) -> Result<Option<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| Error::InvalidData(format!("line {line}, column {col}: not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(Error::InvalidData(format!("line {line}, column {col}: non-finite value")));
    }
    Ok(Some(v))
}

pub fn read_snapshot_csv(path: &Path) -> Result<Snapshot> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let expected = ["x", "rho", "m", "lambda1", "lambda2"];
    if header != expected {
        return Err(Error::InvalidData(format!("{}: expected header {expected:?}, found {header:?}", path.display())));
    }
    let mut snap = Snapshot { x: vec![], field: ConservedField::new(vec![], vec![])?, lambda1: vec![], lambda2: vec![] };
    let (mut rho, mut m) = (Vec::new(), Vec::new());
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let req = |i: usize| -> Result<f64> {
            parse_cell(&rec[i], expected[i], line)?
                .ok_or_else(|| Error::InvalidData(format!("line {line}, column {}: missing value", expected[i])))
        };
        snap.x.push(req(0)?);
        rho.push(req(1)?);
        m.push(req(2)?);
        snap.lambda1.push(parse_cell(&rec[3], expected[3], line)?);
        snap.lambda2.push(parse_cell(&rec[4], expected[4], line)?);
    }
    snap.field = ConservedField::new(rho, m)?;
    Ok(snap)
}

pub fn write_audits_csv(path: &Path, audits: &[StepAudit]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for a in audits {
        w.serialize(a)?;
    }
    if audits.is_empty() {
        w.write_record([
            "step", "t", "dt", "mass_change", "momentum_change", "lambda1_min", "lambda2_max", "dissipation", "dissipation_min", "energy",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_audits_csv(path: &Path) -> Result<Vec<StepAudit>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|a| a.map_err(Error::from)).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Persists the whole record under `dir` and returns the manifest written.
pub fn save_record(dir: &Path, record: &SpaceTimeRecord, config: serde_json::Value) -> Result<Manifest> {
    record.validate()?;
    fs::create_dir_all(dir.join(SNAPSHOT_DIR))?;
    let mut snapshots = Vec::with_capacity(record.snapshots.len());
    for (k, field) in record.snapshots.iter().enumerate() {
        let rel = format!("{SNAPSHOT_DIR}/snap_{k:05}.csv");
        write_snapshot_csv(&dir.join(&rel), &record.grid, field, record.vacuum_floor)?;
        snapshots.push(rel);
    }
    write_audits_csv(&dir.join(AUDITS), &record.audits)?;
    let manifest = Manifest {
        grid: record.grid.clone(),
        scheme: record.scheme,
        cfl: record.cfl,
        velocity_bound: record.velocity_bound,
        vacuum_floor: record.vacuum_floor,
        stride: record.stride,
        times: record.times.clone(),
        snapshots,
        audits: AUDITS.to_string(),
        summary: record.summary.clone(),
        config,
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

pub fn load_record(dir: &Path) -> Result<(SpaceTimeRecord, Manifest)> {
    let manifest: Manifest = read_json(&dir.join(MANIFEST))?;
    if manifest.snapshots.len() != manifest.times.len() {
        return Err(Error::InvalidData("manifest lists a different number of snapshots and times".into()));
    }
    let mut snapshots = Vec::with_capacity(manifest.snapshots.len());
    for rel in &manifest.snapshots {
        snapshots.push(read_snapshot_csv(&dir.join(rel))?.field);
    }
    let record = SpaceTimeRecord {
        grid: manifest.grid.clone(),
        scheme: manifest.scheme,
        cfl: manifest.cfl,
        velocity_bound: manifest.velocity_bound,
        vacuum_floor: manifest.vacuum_floor,
        stride: manifest.stride,
        times: manifest.times.clone(),
        snapshots,
        audits: read_audits_csv(&dir.join(&manifest.audits))?,
        summary: manifest.summary.clone(),
    };
    record.validate()?;
    Ok((record, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{Boundary, ConservedState};

    #[test]
    fn snapshot_round_trip_with_vacuum() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid1D::new(0.0, 1.0, 3, Boundary::Periodic).unwrap();
        let field = ConservedField::new(vec![1.0 / 3.0, 0.0, 2.5], vec![0.1, 0.0, -1.0 / 7.0]).unwrap();
        let p = dir.path().join("s.csv");
        write_snapshot_csv(&p, &grid, &field, 1e-12).unwrap();
        let snap = read_snapshot_csv(&p).unwrap();
        assert_eq!(snap.field, field);
        assert_eq!(snap.lambda1[1], None);
        let u = field.state(0).velocity();
        assert_eq!(snap.lambda1[0], Some(u - 1.0 / 6.0));
        assert_eq!(snap.x, grid.centers());
    }

    #[test]
    fn rejects_nan_and_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "x,rho,m,lambda1,lambda2\n0.5,NaN,0,,\n").unwrap();
        assert!(read_snapshot_csv(&p).is_err());
        fs::write(&p, "x,rho,mom\n0.5,1,0\n").unwrap();
        assert!(read_snapshot_csv(&p).is_err());
        let grid = Grid1D::new(0.0, 1.0, 2, Boundary::Periodic).unwrap();
        let f = ConservedField::from_states([ConservedState { rho: f64::NAN, m: 0.0 }, ConservedState { rho: 1.0, m: 0.0 }]);
        assert!(write_snapshot_csv(&p, &grid, &f, 1e-12).is_err());
    }
}
