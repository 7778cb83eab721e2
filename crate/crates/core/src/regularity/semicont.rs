//! Semicontinuous envelopes and VMO defects on a shrinking radius ladder.
//!
//! At a VMO point the Lebesgue value should coincide with the upper envelope
//! of ρ and λ2 and the lower envelope of λ1; the momentum follows its upper
//! envelope where `λ1 ≥ 0` and its lower envelope where `λ2 ≤ 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::Result;
use crate::solver::SpaceTimeRecord;

use super::ball_points;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemicontParams {
    /// Smallest radius; `None` means two cells.
    pub r0: Option<f64>,
    /// Radii `r0 · 2^j`, `j < levels`.
    pub levels: usize,
    /// Equality tolerance; `None` means `5 √dx`.
    pub tol: Option<f64>,
    /// A defect at or below this is VMO regardless of the ladder.
    pub vmo_abs_tol: f64,
    /// VMO if `defect(r_min) ≤ vmo_ratio · defect(r_max)`.
    pub vmo_ratio: f64,
}

impl Default for SemicontParams {
    fn default() -> Self {
        Self { r0: None, levels: 4, tol: None, vmo_abs_tol: 1e-8, vmo_ratio: 0.35 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusStats {
    pub r: f64,
    pub count: usize,
    pub rho_mean: f64,
    pub rho_max: f64,
    pub rho_min: f64,
    pub m_mean: f64,
    pub m_max: f64,
    pub m_min: f64,
    pub lambda1_mean: f64,
    pub lambda1_min: f64,
    pub lambda2_mean: f64,
    pub lambda2_max: f64,
    /// Mean oscillation of λ1 plus that of λ2.
    pub defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub t: f64,
    pub x: f64,
    pub ladder: Vec<RadiusStats>,
    pub vacuum: bool,
    pub vmo: bool,
    pub defect_decreasing: bool,
    /// `mean ≤ max` and `min ≤ mean` at every radius.
    pub ordering_ok: bool,
    /// Extrapolated `|ρ̂ − ρ̄|`, `|λ̂1 − λ̲1|`, `|λ̂2 − λ̄2|`.
    pub rho_gap: f64,
    pub lambda1_gap: f64,
    pub lambda2_gap: f64,
    /// Momentum gap in the sign regime that applies, if any.
    pub m_gap: Option<f64>,
    /// Equality checks (VMO points only).
    pub passed: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemicontReport {
    pub tol: f64,
    pub radii: Vec<f64>,
    pub points: Vec<PointReport>,
    pub vmo_points: usize,
    pub passed_points: usize,
}

fn stats(record: &SpaceTimeRecord, t: f64, x: f64, r: f64) -> Result<Option<RadiusStats>> {
    let pts = ball_points(record, [t, x], r)?;
    let floor = record.vacuum_floor;
    if pts.is_empty() || pts.iter().any(|p| p.state.rho <= floor) {
        return Ok(None);
    }
    let wsum: f64 = pts.iter().map(|p| p.w).sum();
    let wsum = if wsum > 0.0 { wsum } else { pts.len() as f64 };
    let weight = |p: &super::BallPoint| if wsum == pts.len() as f64 { 1.0 } else { p.w };
    let mut s = RadiusStats {
        r,
        count: pts.len(),
        rho_mean: 0.0,
        rho_max: f64::NEG_INFINITY,
        rho_min: f64::INFINITY,
        m_mean: 0.0,
        m_max: f64::NEG_INFINITY,
        m_min: f64::INFINITY,
        lambda1_mean: 0.0,
        lambda1_min: f64::INFINITY,
        lambda2_mean: 0.0,
        lambda2_max: f64::NEG_INFINITY,
        defect: 0.0,
    };
    let lam: Vec<(f64, f64)> = pts
        .iter()
        .map(|p| {
            let u = p.state.m / p.state.rho;
            (u - 0.5 * p.state.rho, u + 0.5 * p.state.rho)
        })
        .collect();
    for (p, &(l1, l2)) in pts.iter().zip(&lam) {
        let w = weight(p) / wsum;
        s.rho_mean += w * p.state.rho;
        s.m_mean += w * p.state.m;
        s.lambda1_mean += w * l1;
        s.lambda2_mean += w * l2;
        s.rho_max = s.rho_max.max(p.state.rho);
        s.rho_min = s.rho_min.min(p.state.rho);
        s.m_max = s.m_max.max(p.state.m);
        s.m_min = s.m_min.min(p.state.m);
        s.lambda1_min = s.lambda1_min.min(l1);
        s.lambda2_max = s.lambda2_max.max(l2);
    }
    for (p, &(l1, l2)) in pts.iter().zip(&lam) {
        let w = weight(p) / wsum;
        s.defect += w * ((l1 - s.lambda1_mean).abs() + (l2 - s.lambda2_mean).abs());
    }
    Ok(Some(s))
}

/// Linear extrapolation `2 v(r0) − v(r1)` to zero radius.
fn extrapolate(ladder: &[RadiusStats], f: impl Fn(&RadiusStats) -> f64) -> f64 {
    if ladder.len() < 2 {
        return f(&ladder[0]);
    }
    2.0 * f(&ladder[0]) - f(&ladder[1])
}

fn check_point(record: &SpaceTimeRecord, t: f64, x: f64, radii: &[f64], tol: f64, params: &SemicontParams) -> Result<PointReport> {
    let mut ladder = Vec::with_capacity(radii.len());
    for &r in radii {
        match stats(record, t, x, r)? {
            Some(s) => ladder.push(s),
            None => {
                return Ok(PointReport {
                    t,
                    x,
                    ladder,
                    vacuum: true,
                    vmo: false,
                    defect_decreasing: false,
                    ordering_ok: true,
                    rho_gap: f64::NAN,
                    lambda1_gap: f64::NAN,
                    lambda2_gap: f64::NAN,
                    m_gap: None,
                    passed: None,
                })
            }
        }
    }
    let slack = 1e-12;
    let ordering_ok = ladder.iter().all(|s| {
        s.rho_mean <= s.rho_max + slack && s.lambda1_min <= s.lambda1_mean + slack && s.lambda2_mean <= s.lambda2_max + slack
    });
    let defect_decreasing = ladder.windows(2).all(|w| w[0].defect <= w[1].defect * (1.0 + 1e-9) + slack);
    let (d_min, d_max) = (ladder[0].defect, ladder.last().unwrap().defect);
    let vmo = d_min <= params.vmo_abs_tol || d_min <= params.vmo_ratio * d_max;

    let rho_gap = (extrapolate(&ladder, |s| s.rho_max) - extrapolate(&ladder, |s| s.rho_mean)).abs();
    let lambda1_gap = (extrapolate(&ladder, |s| s.lambda1_mean) - extrapolate(&ladder, |s| s.lambda1_min)).abs();
    let lambda2_gap = (extrapolate(&ladder, |s| s.lambda2_max) - extrapolate(&ladder, |s| s.lambda2_mean)).abs();
    let l1_low = extrapolate(&ladder, |s| s.lambda1_min);
    let l2_high = extrapolate(&ladder, |s| s.lambda2_max);
    let m_mean = extrapolate(&ladder, |s| s.m_mean);
    let m_gap = if l1_low >= 0.0 {
        Some((extrapolate(&ladder, |s| s.m_max) - m_mean).abs())
    } else if l2_high <= 0.0 {
        Some((m_mean - extrapolate(&ladder, |s| s.m_min)).abs())
    } else {
        None
    };
    let passed = vmo.then(|| {
        ordering_ok && rho_gap <= tol && lambda1_gap <= tol && lambda2_gap <= tol && m_gap.map_or(true, |g| g <= tol)
    });
    Ok(PointReport {
        t,
        x,
        ladder,
        vacuum: false,
        vmo,
        defect_decreasing,
        ordering_ok,
        rho_gap,
        lambda1_gap,
        lambda2_gap,
        m_gap,
        passed,
    })
}

pub fn semicontinuity_check(record: &SpaceTimeRecord, points: &[[f64; 2]], params: &SemicontParams) -> Result<SemicontReport> {
    let dx = record.grid.dx();
    let r0 = params.r0.unwrap_or(2.0 * dx);
    let radii: Vec<f64> = (0..params.levels.max(1)).map(|j| r0 * 2f64.powi(j as i32)).collect();
    let tol = params.tol.unwrap_or(5.0 * dx.sqrt());
    let reports: Vec<PointReport> = points
        .par_iter()
        .map(|&[t, x]| check_point(record, t, x, &radii, tol, params))
        .collect::<Result<_>>()?;
    Ok(SemicontReport {
        tol,
        radii,
        vmo_points: reports.iter().filter(|p| p.vmo).count(),
        passed_points: reports.iter().filter(|p| p.passed == Some(true)).count(),
        points: reports,
    })
}

impl SemicontReport {
    /// Plot data: one row per point and radius.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "point", "t", "x", "r", "rho_mean", "rho_max", "lambda1_mean", "lambda1_min", "lambda2_mean", "lambda2_max", "defect",
        ])?;
        for (i, p) in self.points.iter().enumerate() {
            for s in &p.ladder {
                w.write_record(&[
                    i.to_string(),
                    p.t.to_string(),
                    p.x.to_string(),
                    s.r.to_string(),
                    s.rho_mean.to_string(),
                    s.rho_max.to_string(),
                    s.lambda1_mean.to_string(),
                    s.lambda1_min.to_string(),
                    s.lambda2_mean.to_string(),
                    s.lambda2_max.to_string(),
                    s.defect.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
