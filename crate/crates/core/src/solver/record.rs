//! Stored space-time solution and lookups into it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Boundary, ConservedField, ConservedState, Grid1D};

use super::SchemeKind;

/// Audit of one time step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepAudit {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    /// Change of total mass/momentum in this step, corrected for boundary flux.
    pub mass_change: f64,
    pub momentum_change: f64,
    pub lambda1_min: f64,
    pub lambda2_max: f64,
    /// Sum over cells of the collapse energy drop times dx (kinetic only).
    pub dissipation: f64,
    /// Smallest per-cell collapse drop (kinetic only).
    pub dissipation_min: f64,
    /// Σ η dx after the step.
    pub energy: f64,
}

/// Extremes over all step audits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub steps: usize,
    pub max_step_mass_change: f64,
    pub max_step_momentum_change: f64,
    pub mass_drift: f64,
    pub momentum_drift: f64,
    /// Largest per-step decrease of min λ1 (positive means a violation).
    pub max_lambda1_decrease: f64,
    /// Largest per-step increase of max λ2.
    pub max_lambda2_increase: f64,
    pub min_cell_dissipation: f64,
    pub total_dissipation: f64,
    /// Largest per-step increase of Σ η dx (periodic runs only; 0 otherwise).
    pub max_energy_increase: f64,
    pub passed: bool,
}

/// Tolerances used to mark an audit summary as passed.
pub const STEP_CONSERVATION_TOL: f64 = 1e-12;
pub const INVARIANT_REGION_TOL: f64 = 1e-10;
pub const DISSIPATION_TOL: f64 = 1e-12;
pub const ENERGY_INCREASE_TOL: f64 = 1e-10;

impl AuditSummary {
    pub fn from_audits(audits: &[StepAudit], initial_totals: (f64, f64), final_totals: (f64, f64), boundary_out: [f64; 2], periodic: bool, initial_energy: f64) -> Self {
        let mut s = AuditSummary {
            steps: audits.len(),
            max_step_mass_change: 0.0,
            max_step_momentum_change: 0.0,
            mass_drift: (final_totals.0 + boundary_out[0] - initial_totals.0).abs(),
            momentum_drift: (final_totals.1 + boundary_out[1] - initial_totals.1).abs(),
            max_lambda1_decrease: 0.0,
            max_lambda2_increase: 0.0,
            min_cell_dissipation: 0.0,
            total_dissipation: 0.0,
            max_energy_increase: 0.0,
            passed: true,
        };
        let mut prev_range: Option<(f64, f64)> = None;
        let mut prev_energy = initial_energy;
        for a in audits {
            s.max_step_mass_change = s.max_step_mass_change.max(a.mass_change.abs());
            s.max_step_momentum_change = s.max_step_momentum_change.max(a.momentum_change.abs());
            if let Some((l1, l2)) = prev_range {
                if a.lambda1_min.is_finite() && l1.is_finite() {
                    s.max_lambda1_decrease = s.max_lambda1_decrease.max(l1 - a.lambda1_min);
                }
                if a.lambda2_max.is_finite() && l2.is_finite() {
                    s.max_lambda2_increase = s.max_lambda2_increase.max(a.lambda2_max - l2);
                }
            }
            prev_range = Some((a.lambda1_min, a.lambda2_max));
            s.min_cell_dissipation = s.min_cell_dissipation.min(a.dissipation_min);
            s.total_dissipation += a.dissipation;
            if periodic {
                s.max_energy_increase = s.max_energy_increase.max(a.energy - prev_energy);
            }
            prev_energy = a.energy;
        }
        let scale = initial_totals.0.abs().max(initial_totals.1.abs()).max(1.0);
        s.passed = s.max_step_mass_change <= STEP_CONSERVATION_TOL * scale
            && s.max_step_momentum_change <= STEP_CONSERVATION_TOL * scale
            && s.max_lambda1_decrease <= INVARIANT_REGION_TOL
            && s.max_lambda2_increase <= INVARIANT_REGION_TOL
            && s.min_cell_dissipation >= -DISSIPATION_TOL
            && s.max_energy_increase <= ENERGY_INCREASE_TOL;
        s
    }
}

/// Time history of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeRecord {
    pub grid: Grid1D,
    pub scheme: SchemeKind,
    pub cfl: f64,
    /// Velocity support bound `L` used for the time step.
    pub velocity_bound: f64,
    pub vacuum_floor: f64,
    /// Steps between stored snapshots.
    pub stride: usize,
    pub times: Vec<f64>,
    pub snapshots: Vec<ConservedField>,
    pub audits: Vec<StepAudit>,
    pub summary: AuditSummary,
}

impl SpaceTimeRecord {
    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("record has at least one snapshot")
    }

    pub fn last(&self) -> &ConservedField {
        self.snapshots.last().expect("record has at least one snapshot")
    }

    /// Times strictly increasing, counts consistent, every snapshot valid.
    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() || self.times.len() != self.snapshots.len() {
            return Err(Error::InvalidData(format!(
                "{} times but {} snapshots",
                self.times.len(),
                self.snapshots.len()
            )));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidData("snapshot times are not strictly increasing".into()));
        }
        for (k, s) in self.snapshots.iter().enumerate() {
            if s.len() != self.grid.n_cells {
                return Err(Error::InvalidData(format!("snapshot {k} has {} cells, grid has {}", s.len(), self.grid.n_cells)));
            }
            s.validate().map_err(|e| Error::InvalidData(format!("snapshot {k}: {e}")))?;
        }
        Ok(())
    }

    /// Index `k` with `times[k] ≤ t < times[k+1]` (clamped).
    pub fn time_index(&self, t: f64) -> usize {
        match self.times.binary_search_by(|s| s.partial_cmp(&t).unwrap()) {
            Ok(k) => k,
            Err(0) => 0,
            Err(k) => (k - 1).min(self.times.len() - 1),
        }
    }

    /// Snapshot index closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        let k = self.time_index(t);
        if k + 1 < self.times.len() && (self.times[k + 1] - t) < (t - self.times[k]) {
            k + 1
        } else {
            k
        }
    }

    /// Inclusive, with a few ulps of slack for times built by arithmetic.
    pub fn contains_time(&self, t: f64) -> bool {
        let slack = 1e-12 * self.t_end().abs().max(1.0);
        t >= self.t_start() - slack && t <= self.t_end() + slack
    }

    /// State at `(t, x)`: piecewise constant in x, linear in t between snapshots.
    /// `None` outside the record.
    pub fn state_at(&self, t: f64, x: f64) -> Option<ConservedState> {
        if !self.contains_time(t) {
            return None;
        }
        let i = self.grid.cell_of(x)?;
        let k = self.time_index(t);
        let a = self.snapshots[k].state(i);
        if k + 1 >= self.times.len() {
            return Some(a);
        }
        if t == self.times[k] {
            return Some(a);
        }
        let b = self.snapshots[k + 1].state(i);
        let w = ((t - self.times[k]) / (self.times[k + 1] - self.times[k])).clamp(0.0, 1.0);
        Some(a.scale(1.0 - w).add(&b.scale(w)))
    }

    /// Window average at time `t`, linear in t between snapshots.
    pub fn window_average_at(&self, t: f64, lo: f64, hi: f64) -> Result<ConservedState> {
        if !self.contains_time(t) {
            return Err(Error::Geometry(format!(
                "time {t} outside the record [{}, {}]",
                self.t_start(),
                self.t_end()
            )));
        }
        let k = self.time_index(t);
        let a = self.window_average(k, lo, hi)?;
        if k + 1 >= self.times.len() || t == self.times[k] {
            return Ok(a);
        }
        let b = self.window_average(k + 1, lo, hi)?;
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        Ok(a.scale(1.0 - w).add(&b.scale(w)))
    }

    /// Exact average of snapshot `k` over `[lo, hi]`.
    pub fn window_average(&self, k: usize, lo: f64, hi: f64) -> Result<ConservedState> {
        window_average(&self.grid, &self.snapshots[k], lo, hi)
    }
}

/// Exact average of a piecewise-constant field over `[lo, hi]`.
pub fn window_average(grid: &Grid1D, field: &ConservedField, lo: f64, hi: f64) -> Result<ConservedState> {
    if !(hi > lo) {
        return Err(Error::Geometry(format!("empty averaging window [{lo}, {hi}]")));
    }
    if !grid.contains_window(lo, hi) {
        return Err(Error::Geometry(format!(
            "window [{lo}, {hi}] leaves the domain [{}, {}]",
            grid.x_min, grid.x_max
        )));
    }
    let dx = grid.dx();
    let n = grid.n_cells as isize;
    let first = ((lo - grid.x_min) / dx).floor() as isize;
    let last = ((hi - grid.x_min) / dx).ceil() as isize - 1;
    let mut acc = ConservedState::default();
    for c in first..=last.max(first) {
        let a = grid.x_min + c as f64 * dx;
        let overlap = (hi.min(a + dx) - lo.max(a)).max(0.0);
        if overlap == 0.0 {
            continue;
        }
        let idx = match grid.boundary {
            Boundary::Periodic => c.rem_euclid(n),
            Boundary::Outflow => c.clamp(0, n - 1),
        } as usize;
        acc = acc.add(&field.state(idx).scale(overlap));
    }
    Ok(acc.scale(1.0 / (hi - lo)))
}
