//! One-sided traces of the solution along a Lipschitz curve.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::solver::SpaceTimeRecord;
use crate::state::ConservedState;

use super::curve::LipschitzCurve;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `x > h(t)`
    Plus,
    /// `x < h(t)`
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceParams {
    /// Width `y0` of the band next to the curve averaged into the trace;
    /// `None` means two cells.
    pub band: Option<f64>,
    /// Largest offset of the ladder; `None` means four bands.
    pub ladder_top: Option<f64>,
    /// Number of dyadic ladder levels.
    pub levels: usize,
    /// Offsets below this are left out of the ladder sups. A captured shock is
    /// smeared over a few cells, so with no floor `E` cannot go to zero there.
    #[serde(default)]
    pub floor: Option<f64>,
    /// `E(k_max) ≤ tol` marks the trace as verified.
    pub tol: f64,
}

impl Default for TraceParams {
    fn default() -> Self {
        Self { band: None, ladder_top: None, levels: 6, floor: None, tol: 5e-2 }
    }
}

/// Trace candidate and its error ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub side: Side,
    pub band: f64,
    pub times: Vec<f64>,
    pub h: Vec<f64>,
    pub u_trace: Vec<ConservedState>,
    /// Offset bounds `1/k` of the ladder, decreasing.
    pub ladder: Vec<f64>,
    /// `sup_{y < 1/k} ∫ |u(t, h ± y) − u±(t)| dt`.
    pub e: Vec<f64>,
    /// `∫ sup_{y < 1/k} |u(t, h ± y) − u±(t)| dt`.
    pub uniform_e: Vec<f64>,
    pub tol: f64,
    pub verified: bool,
}

/// Trapezoid weights for a sample grid.
pub(crate) fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let dt = times[k + 1] - times[k];
        w[k] += 0.5 * dt;
        w[k + 1] += 0.5 * dt;
    }
    w
}

/// Average of `u` over the band `(0, band]` on `side` of the curve at each sample.
pub fn band_averages(record: &SpaceTimeRecord, curve: &LipschitzCurve, side: Side, band: f64) -> Result<Vec<ConservedState>> {
    curve
        .times
        .iter()
        .zip(&curve.h)
        .map(|(&t, &h)| match side {
            Side::Plus => record.window_average_at(t, h, h + band),
            Side::Minus => record.window_average_at(t, h - band, h),
        })
        .collect()
}

pub fn extract_trace(record: &SpaceTimeRecord, curve: &LipschitzCurve, side: Side, params: &TraceParams) -> Result<TraceReport> {
    let dx = record.grid.dx();
    let band = params.band.unwrap_or(2.0 * dx);
    if !(band > 0.0) {
        return Err(Error::Config(format!("trace band must be positive, got {band}")));
    }
    let top = params.ladder_top.unwrap_or(4.0 * band);
    if params.levels == 0 || !(top > 0.0) {
        return Err(Error::Config("trace ladder needs at least one level and a positive top".into()));
    }
    let reach = top.max(band);
    match side {
        Side::Plus => curve.check_inside(&record.grid, 0.0, reach)?,
        Side::Minus => curve.check_inside(&record.grid, reach, 0.0)?,
    }
    for &t in &curve.times {
        if !record.contains_time(t) {
            return Err(Error::Geometry(format!("curve time {t} outside the record")));
        }
    }
    let u_trace = band_averages(record, curve, side, band)?;
    let weights = trapezoid_weights(&curve.times);

    let floor = params.floor.unwrap_or(0.0);
    // offsets sampled every half cell
    let dy = 0.5 * dx;
    let ny = (top / dy).floor() as usize;
    let offsets: Vec<f64> = (1..=ny.max(1)).map(|i| i as f64 * dy).filter(|&y| y >= floor).collect();
    let ladder: Vec<f64> = (0..params.levels)
        .map(|j| top * 0.5f64.powi(j as i32))
        .filter(|&y| offsets.first().is_some_and(|&o| o <= y + 1e-15))
        .collect();
    if ladder.is_empty() {
        return Err(Error::Config(format!("trace floor {floor} leaves no offsets below the ladder top {top}")));
    }

    // dev[i][k] = |u(t_k, h ± y_i) − u±(t_k)|
    let s = side.sign();
    let mut integral = vec![0.0; offsets.len()];
    let mut running_sup = vec![vec![0.0f64; curve.len()]; ladder.len()];
    for (k, (&t, &h)) in curve.times.iter().zip(&curve.h).enumerate() {
        for (i, &y) in offsets.iter().enumerate() {
            let u = record
                .state_at(t, h + s * y)
                .ok_or_else(|| Error::Geometry(format!("offset {y} at t = {t} leaves the record")))?;
            let d = u.l1_distance(&u_trace[k]);
            integral[i] += weights[k] * d;
            for (j, &ymax) in ladder.iter().enumerate() {
                if y <= ymax + 1e-15 {
                    running_sup[j][k] = running_sup[j][k].max(d);
                }
            }
        }
    }
    let e: Vec<f64> = ladder
        .iter()
        .map(|&ymax| {
            offsets
                .iter()
                .zip(&integral)
                .filter(|(&y, _)| y <= ymax + 1e-15)
                .map(|(_, &v)| v)
                .fold(0.0, f64::max)
        })
        .collect();
    let uniform_e: Vec<f64> = running_sup
        .iter()
        .map(|sup| sup.iter().zip(&weights).map(|(a, b)| a * b).sum())
        .collect();
    let last = *e.last().unwrap();
    let decreasing = e.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    Ok(TraceReport {
        side,
        band,
        times: curve.times.clone(),
        h: curve.h.clone(),
        u_trace,
        ladder,
        e,
        uniform_e,
        tol: params.tol,
        verified: last <= params.tol && decreasing,
    })
}

impl TraceReport {
    /// Time average of `|u±(t) − target|`.
    pub fn mean_distance(&self, target: &ConservedState) -> f64 {
        let w = trapezoid_weights(&self.times);
        let span: f64 = w.iter().sum();
        if span == 0.0 {
            return self.u_trace[0].l1_distance(target);
        }
        self.u_trace.iter().zip(&w).map(|(u, w)| u.l1_distance(target) * w).sum::<f64>() / span
    }

    /// Largest `|u±(t) − target|` over samples.
    pub fn max_distance(&self, target: &ConservedState) -> f64 {
        self.u_trace.iter().map(|u| u.l1_distance(target)).fold(0.0, f64::max)
    }

    /// Plot data `level, y_max, e, uniform_e`.
    pub fn write_ladder_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["level", "y_max", "e", "uniform_e"])?;
        for (j, ((y, e), u)) in self.ladder.iter().zip(&self.e).zip(&self.uniform_e).enumerate() {
            w.write_record(&[j.to_string(), y.to_string(), e.to_string(), u.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
