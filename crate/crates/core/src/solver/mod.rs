//! Time integration: transport-collapse kinetic scheme and Godunov reference.

mod godunov;
mod kinetic;
mod record;

pub use godunov::{godunov_step, max_wave_speed};
pub use kinetic::{transport_collapse_step, KineticStep};
pub(crate) use kinetic::{intervals, neighbours};
#[cfg(test)]
pub(crate) use kinetic::transported_kernel;
pub use record::{window_average, AuditSummary, SpaceTimeRecord, StepAudit};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::riemann::energy_pair;
use crate::state::{Boundary, ConservedField, Grid1D, StateBounds, DEFAULT_VACUUM_FLOOR};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    #[default]
    Kinetic,
    Godunov,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Kinetic => "kinetic",
            SchemeKind::Godunov => "godunov",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: SchemeKind,
    pub cfl: f64,
    pub t_end: f64,
    pub stride: usize,
    pub vacuum_floor: f64,
    /// Override for the velocity support bound `L`; defaults to 1.05 times
    /// the largest |λ| of the initial data.
    pub velocity_bound: Option<f64>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeKind::Kinetic,
            cfl: 0.5,
            t_end: 0.0,
            stride: 1,
            vacuum_floor: DEFAULT_VACUUM_FLOOR,
            velocity_bound: None,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if self.scheme == SchemeKind::Godunov && self.cfl > 0.5 {
            return Err(Error::Config(format!("godunov scheme needs cfl <= 0.5, got {}", self.cfl)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("t_end must be finite and >= 0, got {}", self.t_end)));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        if !(self.vacuum_floor >= 0.0) {
            return Err(Error::Config(format!("vacuum_floor must be >= 0, got {}", self.vacuum_floor)));
        }
        if let Some(l) = self.velocity_bound {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::Config(format!("velocity_bound must be positive, got {l}")));
            }
        }
        Ok(())
    }
}

fn total_energy(field: &ConservedField, dx: f64) -> f64 {
    field.states().map(|s| energy_pair(&s).0).sum::<f64>() * dx
}

/// Integrate `initial` to `config.t_end`.
pub fn run(grid: &Grid1D, initial: &ConservedField, config: &SchemeConfig) -> Result<SpaceTimeRecord> {
    config.validate()?;
    initial.validate()?;
    if initial.len() != grid.n_cells {
        return Err(Error::Config(format!(
            "initial field has {} cells, grid has {}",
            initial.len(),
            grid.n_cells
        )));
    }
    let dx = grid.dx();
    let floor = config.vacuum_floor;
    let bound = match config.velocity_bound {
        Some(l) => l,
        None => {
            let l = StateBounds::from_field(initial, floor).velocity_bound;
            if l > 1e-300 { l } else { 1.0 }
        }
    };
    let periodic = grid.boundary == Boundary::Periodic;

    let initial_totals = initial.totals(dx);
    let initial_energy = total_energy(initial, dx);
    let mut times = vec![0.0];
    let mut snapshots = vec![initial.clone()];
    let mut audits = Vec::new();
    let mut boundary_out = [0.0f64; 2];
    let mut cur = initial.clone();
    let mut t = 0.0;
    let mut step = 0;
    let t_eps = 1e-14 * config.t_end.max(1.0);

    while config.t_end - t > t_eps {
        let remaining = config.t_end - t;
        let (next, flux, dissipation, dissipation_min, dt) = match config.scheme {
            SchemeKind::Kinetic => {
                let dt = (config.cfl * dx / bound).min(remaining);
                let st = transport_collapse_step(grid, &cur, dt, bound, floor)
                    .map_err(|e| Error::Step { index: step, source: Box::new(e) })?;
                let total = st.dissipation.iter().sum::<f64>() * dx;
                let min = st.dissipation.iter().copied().fold(f64::INFINITY, f64::min);
                (st.field, st.boundary_flux, total, min, dt)
            }
            SchemeKind::Godunov => {
                let smax = max_wave_speed(&cur).max(1e-12);
                let dt = (config.cfl * dx / smax).min(remaining);
                let (f, flux) =
                    godunov_step(grid, &cur, dt).map_err(|e| Error::Step { index: step, source: Box::new(e) })?;
                (f, flux, 0.0, 0.0, dt)
            }
        };
        let (m0, p0) = cur.totals(dx);
        let (m1, p1) = next.totals(dx);
        let fl = [flux[0] * dt, flux[1] * dt];
        boundary_out[0] += fl[0];
        boundary_out[1] += fl[1];
        let (l1, l2) = next.invariant_range(floor).unwrap_or((f64::NAN, f64::NAN));
        t += dt;
        step += 1;
        audits.push(StepAudit {
            step,
            t,
            dt,
            mass_change: m1 + fl[0] - m0,
            momentum_change: p1 + fl[1] - p0,
            lambda1_min: l1,
            lambda2_max: l2,
            dissipation,
            dissipation_min: if dissipation_min.is_finite() { dissipation_min } else { 0.0 },
            energy: total_energy(&next, dx),
        });
        cur = next;
        let last = config.t_end - t <= t_eps;
        if step % config.stride == 0 || last {
            times.push(t);
            snapshots.push(cur.clone());
        }
    }
    let summary = AuditSummary::from_audits(&audits, initial_totals, cur.totals(dx), boundary_out, periodic, initial_energy);
    Ok(SpaceTimeRecord {
        grid: grid.clone(),
        scheme: config.scheme,
        cfl: config.cfl,
        velocity_bound: bound,
        vacuum_floor: floor,
        stride: config.stride,
        times,
        snapshots,
        audits,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::ConservedState;

    #[test]
    fn zero_end_time_keeps_initial_only() {
        let g = Grid1D::new(0.0, 1.0, 8, Boundary::Periodic).unwrap();
        let f = ConservedField::constant(8, ConservedState::new(1.0, 0.0));
        let rec = run(&g, &f, &SchemeConfig::default()).unwrap();
        assert_eq!(rec.times, vec![0.0]);
        assert_eq!(rec.snapshots.len(), 1);
        assert!(rec.audits.is_empty());
    }

    #[test]
    fn config_validation() {
        let bad = [
            SchemeConfig { cfl: 0.0, ..Default::default() },
            SchemeConfig { cfl: 1.2, ..Default::default() },
            SchemeConfig { scheme: SchemeKind::Godunov, cfl: 0.8, ..Default::default() },
            SchemeConfig { stride: 0, ..Default::default() },
            SchemeConfig { t_end: -1.0, ..Default::default() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn stride_and_final_time() {
        let g = Grid1D::new(0.0, 1.0, 20, Boundary::Periodic).unwrap();
        let f = ConservedField::from_states((0..20).map(|i| ConservedState::new(1.0 + 0.1 * (i % 3) as f64, 0.0)));
        let cfg = SchemeConfig { t_end: 0.1, stride: 3, ..Default::default() };
        let rec = run(&g, &f, &cfg).unwrap();
        rec.validate().unwrap();
        assert!((rec.t_end() - 0.1).abs() < 1e-14);
        assert!(rec.summary.passed, "{:?}", rec.summary);
        assert_eq!(rec.times.len(), 1 + rec.audits.len().div_ceil(3));
    }
}
