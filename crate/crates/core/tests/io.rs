mod common;

use common::*;
use isokin_core::entropy::{mu_estimate, DissipationBins};
use isokin_core::io::{load_record, read_snapshot_csv, save_record};

#[test]
fn saved_record_loads_back_identically() {
    let rec = one_shock_record(100, 0.1, 7);
    let dir = tempfile::tempdir().unwrap();
    let config = serde_json::json!({ "preset": "one_shock", "cells": 100 });
    let manifest = save_record(dir.path(), &rec, config.clone()).unwrap();
    assert_eq!(manifest.snapshots.len(), rec.times.len());

    let (loaded, m) = load_record(dir.path()).unwrap();
    assert!(loaded == rec, "loaded record differs");
    assert_eq!(m, manifest);
    assert_eq!(m.config, config);
    for (rel, field) in m.snapshots.iter().zip(&rec.snapshots) {
        assert_eq!(&read_snapshot_csv(&dir.path().join(rel)).unwrap().field, field);
    }
}

#[test]
fn dissipation_csv_and_summary_are_written() {
    let rec = one_shock_record(100, 0.1, 1);
    let mu = mu_estimate(&rec, &DissipationBins { t_bins: 2, x_bins: 4, v_bins: 8 }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("mu.csv");
    mu.write_csv(&csv_path).unwrap();
    let mut r = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["t_bin", "x_bin", "v0", "mass"]);
    let total: f64 = r.records().map(|row| row.unwrap()[3].parse::<f64>().unwrap()).sum();
    assert!((total - mu.total()).abs() <= 1e-12 * mu.total().max(1.0));
    mu.write_summary(&dir.path().join("mu.json")).unwrap();
}
