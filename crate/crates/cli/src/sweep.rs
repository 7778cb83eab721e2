//! Parameter sweeps: one independent run per axis value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use isokin_core::regularity::loglog_slope;

use crate::config::{parse_config_str, FitSpec, RunConfig};
use crate::error::{CliError, Result};
use crate::pipeline::{members_summary, run_single, write_aggregate, write_json, Command, Row, Summary, AGGREGATE, SUMMARY};

pub const SWEEP_JSON: &str = "sweep.json";

/// `cfg` with the dotted key `axis` set to `value`, revalidated.
pub fn apply_axis(cfg: &RunConfig, axis: &str, value: &toml::Value) -> Result<RunConfig> {
    let mut root = toml::Table::try_from(cfg).map_err(|e| CliError::Internal(e.to_string()))?;
    root.remove("sweep");
    let missing = || CliError::Usage(format!("sweep.axis `{axis}`: no such key"));
    let segs: Vec<&str> = axis.split('.').collect();
    let (last, path) = segs.split_last().ok_or_else(missing)?;
    let mut node = toml::Value::Table(root);
    {
        let mut cur = &mut node;
        for seg in path {
            cur = match cur {
                toml::Value::Table(t) => t.get_mut(*seg).ok_or_else(missing)?,
                toml::Value::Array(a) => seg.parse::<usize>().ok().and_then(|i| a.get_mut(i)).ok_or_else(missing)?,
                _ => return Err(missing()),
            };
        }
        match cur {
            toml::Value::Table(t) => {
                t.insert(last.to_string(), value.clone());
            }
            toml::Value::Array(a) => *last.parse::<usize>().ok().and_then(|i| a.get_mut(i)).ok_or_else(missing)? = value.clone(),
            _ => return Err(missing()),
        }
    }
    let src = toml::to_string(&node).map_err(|e| CliError::Internal(e.to_string()))?;
    parse_config_str(&src, &format!("(sweep {axis} = {value})"))
}

fn numeric(v: &toml::Value) -> f64 {
    match v {
        toml::Value::Integer(i) => *i as f64,
        toml::Value::Float(f) => *f,
        _ => f64::NAN,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub x: String,
    pub y: String,
    pub points: Vec<[f64; 2]>,
    pub slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub axis: String,
    pub values: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitReport>,
}

/// Run every axis value in `run_<i>/` under `out`; member failures are
/// recorded, not propagated.
pub fn run_sweep(cfg: &RunConfig, out: &Path) -> Result<Summary> {
    let sw = cfg.sweep.as_ref().ok_or_else(|| CliError::Usage("the sweep command needs a [sweep] table".into()))?;
    if sw.values.is_empty() {
        return Err(CliError::Usage(format!("sweep.values: empty axis for `{}`", sw.axis)));
    }
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let results: Vec<(String, String, Result<Summary>, f64)> = sw
        .values
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let rel = format!("run_{i}");
            let r = apply_axis(cfg, &sw.axis, v);
            let dx = r.as_ref().map_or(f64::NAN, |c| c.grid.dx());
            let r = r.and_then(|c| run_single(&c, c.seed, &out.join(&rel), Command::Simulate, None));
            (v.to_string(), rel, r, dx)
        })
        .collect();

    let rows: Vec<Row> = results
        .iter()
        .enumerate()
        .map(|(i, (label, _, r, dx))| Row::new(vec![i.to_string(), label.clone(), dx.to_string()], r))
        .collect();
    write_aggregate(&out.join(AGGREGATE), &["index", "value", "dx"], &rows)?;

    let fit = sw.fit.as_ref().map(|f| fit(f, &sw.values, &results));
    let mut metrics = BTreeMap::new();
    if let Some(s) = fit.as_ref().and_then(|f| f.slope) {
        metrics.insert("fit.slope".to_string(), s);
    }
    let report = SweepReport { axis: sw.axis.clone(), values: sw.values.iter().map(|v| v.to_string()).collect(), fit };
    write_json(&out.join(SWEEP_JSON), &report)?;

    let members: Vec<(String, String, Result<Summary>)> = results.into_iter().map(|(l, d, r, _)| (l, d, r)).collect();
    let summary = members_summary("sweep", cfg.seed, &members, metrics);
    write_json(&out.join(SUMMARY), &summary)?;
    Ok(summary)
}

fn fit(spec: &FitSpec, values: &[toml::Value], results: &[(String, String, Result<Summary>, f64)]) -> FitReport {
    let pick = |key: &str, i: usize, s: &Summary, dx: f64| match key {
        "value" => numeric(&values[i]),
        "dx" => dx,
        m => s.metrics.get(m).copied().unwrap_or(f64::NAN),
    };
    let points: Vec<[f64; 2]> = results
        .iter()
        .enumerate()
        .filter_map(|(i, (_, _, r, dx))| r.as_ref().ok().map(|s| [pick(&spec.x, i, s, *dx), pick(&spec.y, i, s, *dx)]))
        .filter(|p| p[0].is_finite() && p[1].is_finite())
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|p| (p[0], p[1])).unzip();
    FitReport { x: spec.x.clone(), y: spec.y.clone(), slope: loglog_slope(&xs, &ys), points }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_str;

    fn cfg() -> RunConfig {
        parse_config_str(
            "[grid]\ncells = 100\n[initial]\npreset = \"riemann\"\nleft = { rho = 2.0 }\nright = { rho = 1.0 }\n\
             [[diagnostics]]\nkind = \"mu\"\n",
            "t",
        )
        .unwrap()
    }

    #[test]
    fn axis_sets_nested_and_indexed_keys() {
        let c = apply_axis(&cfg(), "grid.cells", &toml::Value::Integer(250)).unwrap();
        assert_eq!(c.grid.cells, 250);
        let c = apply_axis(&cfg(), "initial.left.rho", &toml::Value::Float(1.5)).unwrap();
        assert_eq!(c, apply_axis(&c, "initial.left.rho", &toml::Value::Float(1.5)).unwrap());
        let c = apply_axis(&cfg(), "diagnostics.0.t_bins", &toml::Value::Integer(4)).unwrap();
        assert!(matches!(c.diagnostics[0], crate::config::Diagnostic::Mu { t_bins: 4, .. }));
    }

    #[test]
    fn bad_axis_values_are_reported() {
        assert!(matches!(apply_axis(&cfg(), "grid.nope.x", &toml::Value::Integer(1)), Err(CliError::Usage(_))));
        let err = apply_axis(&cfg(), "grid.cells", &toml::Value::Integer(1)).unwrap_err();
        assert!(err.to_string().contains("grid.cells = 1"), "{err}");
    }
}
