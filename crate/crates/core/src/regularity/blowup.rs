//! Blow-up of the solution around a point of a curve.
//!
//! `u_η(τ, y) = u(t + ητ, h(t + ητ) + ηy)`. In this curve-following frame the
//! two half-spaces on either side of the curve become `y > 0` and `y < 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::SpaceTimeRecord;
use crate::state::ConservedState;

use super::curve::LipschitzCurve;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupParams {
    /// Half-length `T̄` of the rescaled time window.
    pub t_bar: f64,
    pub n_tau: usize,
    pub n_y: usize,
    /// Points with `|y| < delta` are excluded from the half-space distances.
    pub delta: f64,
}

impl Default for BlowupParams {
    fn default() -> Self {
        Self { t_bar: 0.5, n_tau: 33, n_y: 80, delta: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupPatch {
    pub t0: f64,
    pub eta: f64,
    pub tau: Vec<f64>,
    pub y: Vec<f64>,
    /// Row-major `[tau][y]`.
    pub values: Vec<ConservedState>,
}

impl BlowupPatch {
    pub fn get(&self, i: usize, j: usize) -> ConservedState {
        self.values[i * self.y.len() + j]
    }

    /// Mean `|u − u⁻|` over `y ≤ −δ` plus mean `|u − u⁺|` over `y ≥ δ`.
    pub fn half_space_distance(&self, minus: &ConservedState, plus: &ConservedState, delta: f64) -> f64 {
        let (mut dm, mut nm, mut dp, mut np) = (0.0, 0usize, 0.0, 0usize);
        for i in 0..self.tau.len() {
            for (j, &y) in self.y.iter().enumerate() {
                let u = self.get(i, j);
                if y <= -delta {
                    dm += u.l1_distance(minus);
                    nm += 1;
                } else if y >= delta {
                    dp += u.l1_distance(plus);
                    np += 1;
                }
            }
        }
        dm / nm.max(1) as f64 + dp / np.max(1) as f64
    }

    /// Largest deviation from the patch mean, a measure of non-constancy.
    pub fn oscillation(&self) -> f64 {
        let n = self.values.len() as f64;
        let mean = self.values.iter().fold(ConservedState::default(), |a, b| a.add(b)).scale(1.0 / n);
        self.values.iter().map(|u| u.l1_distance(&mean)).fold(0.0, f64::max)
    }
}

pub fn blowup_rescale(record: &SpaceTimeRecord, t0: f64, curve: &LipschitzCurve, eta: f64, params: &BlowupParams) -> Result<BlowupPatch> {
    if !(eta > 0.0) || params.n_tau < 2 || params.n_y < 2 {
        return Err(Error::Config("blow-up needs eta > 0 and at least 2 samples per axis".into()));
    }
    let (ta, tb) = (t0 - eta * params.t_bar, t0 + eta * params.t_bar);
    if ta < record.t_start() || tb > record.t_end() {
        return Err(Error::Geometry(format!(
            "rescaled window [{ta}, {tb}] leaves the record [{}, {}]",
            record.t_start(),
            record.t_end()
        )));
    }
    if ta < curve.times[0] || tb > *curve.times.last().unwrap() {
        return Err(Error::Geometry(format!("rescaled window [{ta}, {tb}] leaves the curve")));
    }
    let tau: Vec<f64> = (0..params.n_tau)
        .map(|i| -params.t_bar + 2.0 * params.t_bar * i as f64 / (params.n_tau - 1) as f64)
        .collect();
    // y grid avoids y = 0 exactly
    let y: Vec<f64> = (0..params.n_y).map(|j| -1.0 + 2.0 * (j as f64 + 0.5) / params.n_y as f64).collect();
    let mut values = Vec::with_capacity(tau.len() * y.len());
    for &s in &tau {
        let t = t0 + eta * s;
        let h = curve.position(t);
        if !record.grid.contains_window(h - eta, h + eta) {
            return Err(Error::Geometry(format!("rescaled window around x = {h} leaves the domain")));
        }
        for &yy in &y {
            values.push(
                record
                    .state_at(t, h + eta * yy)
                    .ok_or_else(|| Error::Geometry(format!("sample ({t}, {}) outside the record", h + eta * yy)))?,
            );
        }
    }
    Ok(BlowupPatch { t0, eta, tau, y, values })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupLadder {
    pub etas: Vec<f64>,
    pub distances: Vec<f64>,
    pub oscillations: Vec<f64>,
    /// Distances nonincreasing along the ladder.
    pub decreasing: bool,
}

/// Half-space distances for `η = 8 dx · 2^j`, `j = 0, …, levels − 1`.
///
/// The grid resolves the blow-up only for `η ≫ dx`: the smeared layer has
/// rescaled width `O(dx/η)`, so the distance shrinks along the ladder.
pub fn blowup_ladder(
    record: &SpaceTimeRecord,
    t0: f64,
    curve: &LipschitzCurve,
    minus: &ConservedState,
    plus: &ConservedState,
    levels: usize,
    params: &BlowupParams,
) -> Result<BlowupLadder> {
    let dx = record.grid.dx();
    let etas: Vec<f64> = (0..levels).map(|j| 8.0 * dx * 2f64.powi(j as i32)).collect();
    let mut distances = Vec::with_capacity(levels);
    let mut oscillations = Vec::with_capacity(levels);
    for &eta in &etas {
        let p = blowup_rescale(record, t0, curve, eta, params)?;
        distances.push(p.half_space_distance(minus, plus, params.delta));
        oscillations.push(p.oscillation());
    }
    let decreasing = distances.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    Ok(BlowupLadder { etas, distances, oscillations, decreasing })
}
