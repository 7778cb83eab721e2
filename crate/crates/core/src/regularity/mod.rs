//! Empirical checkers for the regularity of computed entropy solutions.

mod blowup;
mod curve;
mod degiorgi;
mod dichotomy;
mod semicont;
mod trace;

pub use blowup::{blowup_ladder, blowup_rescale, BlowupLadder, BlowupParams, BlowupPatch};
pub use curve::LipschitzCurve;
pub use degiorgi::{
    alpha_from_theta, bump, degiorgi_family, degiorgi_monitor, family_initial, loglog_slope, CutHeight, DeGiorgiParams,
    DeGiorgiReport, Direction, FamilyMember, FamilyReport, FamilySpec, THETA,
};
pub use dichotomy::{rh_dichotomy, DichotomyParams, DichotomyReport, DichotomySample, Label, PairingEstimate};
pub use semicont::{semicontinuity_check, PointReport, RadiusStats, SemicontParams, SemicontReport};
pub use trace::{band_averages, extract_trace, Side, TraceParams, TraceReport};

use crate::error::{Error, Result};
use crate::solver::SpaceTimeRecord;
use crate::state::ConservedState;

/// A record sample inside a space-time ball.
pub(crate) struct BallPoint {
    /// Euclidean distance to the centre in `(t, x)`.
    pub d: f64,
    /// Quadrature weight `dt · dx`.
    pub w: f64,
    pub state: ConservedState,
}

/// All `(snapshot time, cell centre)` pairs within `radius` of `center = (t, x)`.
pub(crate) fn ball_points(record: &SpaceTimeRecord, center: [f64; 2], radius: f64) -> Result<Vec<BallPoint>> {
    let [tc, xc] = center;
    if tc - radius < record.t_start() || tc + radius > record.t_end() {
        return Err(Error::Geometry(format!(
            "ball of radius {radius} around t = {tc} leaves the record [{}, {}]",
            record.t_start(),
            record.t_end()
        )));
    }
    let g = &record.grid;
    if !g.contains_window(xc - radius, xc + radius) {
        return Err(Error::Geometry(format!("ball of radius {radius} around x = {xc} leaves the domain")));
    }
    let dx = g.dx();
    let n = record.times.len();
    let start = record.time_index(tc - radius);
    let mut out = Vec::new();
    for k in start..n {
        let t = record.times[k];
        if t > tc + radius {
            break;
        }
        if (t - tc).abs() > radius {
            continue;
        }
        let lo = if k > 0 { record.times[k - 1] } else { t };
        let hi = if k + 1 < n { record.times[k + 1] } else { t };
        let wt = 0.5 * (hi - lo);
        let half = (radius * radius - (t - tc) * (t - tc)).max(0.0).sqrt();
        let i0 = ((xc - half - g.x_min) / dx).floor() as isize - 1;
        let i1 = ((xc + half - g.x_min) / dx).ceil() as isize + 1;
        for i in i0..=i1 {
            let x = g.x_min + (i as f64 + 0.5) * dx;
            let d = ((t - tc).powi(2) + (x - xc).powi(2)).sqrt();
            if d > radius {
                continue;
            }
            let cell = g.cell_of(x).ok_or_else(|| Error::Geometry(format!("x = {x} outside the domain")))?;
            out.push(BallPoint { d, w: wt * dx, state: record.snapshots[k].state(cell) });
        }
    }
    Ok(out)
}
