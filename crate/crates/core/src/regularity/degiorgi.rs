//! De Giorgi monitor: truncated kinetic masses on nested balls.
//!
//! For the lower bound on λ1 with reference level `a = λ1(ū)`,
//!
//! ```text
//! V_k = ∫_{B_{r_k}} ∫_{−L}^{a − l_k} f dv = ∫_{B_{r_k}} (min(λ2, a − l_k) − max(λ1, −L))_+
//! r_k = 1 + 2^{−k},   l_k = η (1 − 2^{−k})
//! ```
//!
//! and symmetrically `U_k` above λ2. Balls are Euclidean in `(t, x)` after
//! rescaling by the radius `R0` of `B_1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::solver::{run, SchemeConfig, SpaceTimeRecord};
use crate::state::{from_invariants, ConservedField, ConservedState, Grid1D};

use super::ball_points;

/// Exponent `θ` of the averaging gain used by the iteration.
pub const THETA: f64 = 1.0 / 7.0;

/// `α = θ / (7θ + 2)`.
pub fn alpha_from_theta(theta: f64) -> f64 {
    theta / (7.0 * theta + 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Control `(λ1(ū) − λ1(u))_+`.
    BelowLambda1,
    /// Control `(λ2(u) − λ2(ū))_+`.
    AboveLambda2,
}

/// Cut height `η` of the iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CutHeight {
    Fixed { eta: f64 },
    /// `η = C̃ ε^α`
    Power { c_tilde: f64, alpha: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeGiorgiParams {
    pub theta: f64,
    /// Required lower bound `M` on ρ over `B_2`.
    pub min_density: f64,
    /// Number of iteration levels after `k = 0`.
    pub levels: usize,
    pub cut: CutHeight,
    /// `U_K ≤ truncation_ratio · U_0` counts as truncated.
    pub truncation_ratio: f64,
}

impl Default for DeGiorgiParams {
    fn default() -> Self {
        Self {
            theta: THETA,
            min_density: 0.5,
            levels: 16,
            cut: CutHeight::Power { c_tilde: 1.0, alpha: alpha_from_theta(THETA) },
            truncation_ratio: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeGiorgiReport {
    pub theta0: f64,
    pub alpha: f64,
    pub center: [f64; 2],
    pub radius: f64,
    pub direction: Direction,
    /// `λ1(ū)` or `λ2(ū)`.
    pub level: f64,
    /// One-sided L¹ oscillation on `B_2` in rescaled units.
    pub eps: f64,
    pub eta: f64,
    pub radii: Vec<f64>,
    pub cuts: Vec<f64>,
    /// `V_k` (below λ1) or `U_k` (above λ2).
    pub masses: Vec<f64>,
    /// Grid sup of the one-sided oscillation on `B_1`.
    pub sup_b1: f64,
    pub min_density: f64,
    pub monotone: bool,
    pub truncated: bool,
}

struct BallSample {
    d: f64,
    w: f64,
    l1: f64,
    l2: f64,
    rho: f64,
}

fn ball_samples(record: &SpaceTimeRecord, center: [f64; 2], radius: f64, reach: f64) -> Result<Vec<BallSample>> {
    Ok(ball_points(record, center, reach * radius)?
        .into_iter()
        .map(|p| {
            let s = p.state;
            let (l1, l2) = if s.rho > 0.0 {
                let u = s.m / s.rho;
                (u - 0.5 * s.rho, u + 0.5 * s.rho)
            } else {
                (s.velocity(), s.velocity())
            };
            BallSample { d: p.d / radius, w: p.w / (radius * radius), l1, l2, rho: s.rho }
        })
        .collect())
}

pub fn degiorgi_monitor(
    record: &SpaceTimeRecord,
    center: [f64; 2],
    radius: f64,
    bar_u: &ConservedState,
    direction: Direction,
    params: &DeGiorgiParams,
) -> Result<DeGiorgiReport> {
    if !(radius > 0.0) {
        return Err(Error::Geometry(format!("ball radius must be positive, got {radius}")));
    }
    let (bar1, bar2) = bar_u.invariants()?;
    let samples = ball_samples(record, center, radius, 2.0)?;
    let min_density = samples.iter().map(|s| s.rho).fold(f64::INFINITY, f64::min);
    if !(min_density >= params.min_density) {
        return Err(Error::Vacuum { rho: min_density, floor: params.min_density });
    }
    let l = record.velocity_bound;
    let level = match direction {
        Direction::BelowLambda1 => bar1,
        Direction::AboveLambda2 => bar2,
    };
    let osc = |s: &BallSample| match direction {
        Direction::BelowLambda1 => (level - s.l1).max(0.0),
        Direction::AboveLambda2 => (s.l2 - level).max(0.0),
    };
    let eps: f64 = samples.iter().map(|s| s.w * osc(s)).sum();
    let sup_b1 = samples.iter().filter(|s| s.d <= 1.0).map(osc).fold(0.0, f64::max);
    let alpha = alpha_from_theta(params.theta);
    let eta = match params.cut {
        CutHeight::Fixed { eta } => eta,
        CutHeight::Power { c_tilde, alpha } => c_tilde * eps.powf(alpha),
    };
    let radii: Vec<f64> = (0..=params.levels).map(|k| 1.0 + 0.5f64.powi(k as i32)).collect();
    let cuts: Vec<f64> = (0..=params.levels).map(|k| eta * (1.0 - 0.5f64.powi(k as i32))).collect();
    let masses: Vec<f64> = radii
        .iter()
        .zip(&cuts)
        .map(|(&r, &lk)| {
            samples
                .iter()
                .filter(|s| s.d <= r)
                .map(|s| {
                    let m = match direction {
                        Direction::BelowLambda1 => s.l2.min(level - lk) - s.l1.max(-l),
                        Direction::AboveLambda2 => s.l2.min(l) - s.l1.max(level + lk),
                    };
                    s.w * m.max(0.0)
                })
                .sum()
        })
        .collect();
    let monotone = masses.windows(2).all(|w| w[1] <= w[0] + 1e-15);
    let last = *masses.last().unwrap();
    let truncated = last <= params.truncation_ratio * masses[0] || last == 0.0;
    Ok(DeGiorgiReport {
        theta0: params.theta,
        alpha,
        center,
        radius,
        direction,
        level,
        eps,
        eta,
        radii,
        cuts,
        masses,
        sup_b1,
        min_density,
        monotone,
        truncated,
    })
}

impl DeGiorgiReport {
    /// Plot data `k, r_k, l_k, mass`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["k", "r_k", "l_k", "mass"])?;
        for (k, ((r, l), m)) in self.radii.iter().zip(&self.cuts).zip(&self.masses).enumerate() {
            w.write_record(&[k.to_string(), r.to_string(), l.to_string(), m.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Perturbation family around a constant state: `λ1` is lowered by a smooth
/// bump of amplitude `δ` (or `λ2` raised), the run is monitored on a fixed ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub grid: Grid1D,
    pub scheme: SchemeConfig,
    pub base: ConservedState,
    pub bump_center: f64,
    pub bump_width: f64,
    pub ball_center: [f64; 2],
    pub ball_radius: f64,
    pub direction: Direction,
    pub targets: Vec<f64>,
    /// Factor applied to the fitted constant so the cut dominates every member.
    pub safety: f64,
    /// Relative accuracy to which ε must hit its target.
    pub target_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub target: f64,
    pub amplitude: f64,
    pub report: DeGiorgiReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub members: Vec<FamilyMember>,
    pub alpha_paper: f64,
    pub alpha_fit: f64,
    pub c_tilde: f64,
    /// sup on B_1 increases with ε.
    pub monotone_sup: bool,
    /// Every member satisfies sup ≤ C̃ ε^α_fit.
    pub bound_holds: bool,
    pub all_truncated: bool,
    pub all_monotone: bool,
}

/// `cos²` bump of unit height supported on `|x − c| < w`.
pub fn bump(x: f64, c: f64, w: f64) -> f64 {
    let s = (x - c) / w;
    if s.abs() >= 1.0 {
        0.0
    } else {
        let q = (0.5 * std::f64::consts::PI * s).cos();
        q * q
    }
}

/// Initial data of the family member with amplitude `delta`.
pub fn family_initial(spec: &FamilySpec, delta: f64) -> Result<ConservedField> {
    let (l1, l2) = spec.base.invariants()?;
    let states = spec
        .grid
        .centers()
        .into_iter()
        .map(|x| {
            let b = delta * bump(x, spec.bump_center, spec.bump_width);
            match spec.direction {
                Direction::BelowLambda1 => from_invariants(l1 - b, l2),
                Direction::AboveLambda2 => from_invariants(l1, l2 + b),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConservedField::from_states(states))
}

fn member(spec: &FamilySpec, delta: f64, params: &DeGiorgiParams) -> Result<DeGiorgiReport> {
    let init = family_initial(spec, delta)?;
    let rec = run(&spec.grid, &init, &spec.scheme)?;
    degiorgi_monitor(&rec, spec.ball_center, spec.ball_radius, &spec.base, spec.direction, params)
}

/// Least-squares slope of `log y` against `log x`; pairs with a
/// non-positive entry are skipped.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Calibrate amplitudes so ε hits each target, fit the exponent of the
/// B_1 sup against ε, and rerun the iteration with the calibrated cut.
pub fn degiorgi_family(spec: &FamilySpec, params: &DeGiorgiParams) -> Result<FamilyReport> {
    if spec.targets.is_empty() {
        return Err(Error::Config("De Giorgi family needs at least one target".into()));
    }
    let probe = DeGiorgiParams { cut: CutHeight::Fixed { eta: 0.0 }, ..params.clone() };
    let calibrated: Vec<(f64, f64, DeGiorgiReport)> = spec
        .targets
        .par_iter()
        .map(|&target| {
            let mut delta = target;
            let mut rep = member(spec, delta, &probe)?;
            for _ in 0..8 {
                if rep.eps > 0.0 && ((rep.eps - target) / target).abs() <= spec.target_tol {
                    break;
                }
                if rep.eps <= 0.0 {
                    return Err(Error::InvalidData(format!("perturbation of amplitude {delta} does not reach the ball")));
                }
                delta *= target / rep.eps;
                rep = member(spec, delta, &probe)?;
            }
            if ((rep.eps - target) / target).abs() > spec.target_tol {
                return Err(Error::NoConvergence { iterations: 8, lo: rep.eps, hi: target });
            }
            Ok((target, delta, rep))
        })
        .collect::<Result<_>>()?;

    let eps: Vec<f64> = calibrated.iter().map(|c| c.2.eps).collect();
    let sups: Vec<f64> = calibrated.iter().map(|c| c.2.sup_b1).collect();
    let alpha_fit = loglog_slope(&eps, &sups).unwrap_or(0.0);
    let c_tilde = spec.safety
        * eps
            .iter()
            .zip(&sups)
            .map(|(e, s)| s / e.powf(alpha_fit))
            .fold(0.0, f64::max);
    let cut = CutHeight::Power { c_tilde, alpha: alpha_fit };
    let final_params = DeGiorgiParams { cut, ..params.clone() };
    let members: Vec<FamilyMember> = calibrated
        .par_iter()
        .map(|(target, delta, _)| {
            Ok(FamilyMember { target: *target, amplitude: *delta, report: member(spec, *delta, &final_params)? })
        })
        .collect::<Result<_>>()?;

    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| members[a].report.eps.partial_cmp(&members[b].report.eps).unwrap());
    let monotone_sup = order.windows(2).all(|w| members[w[1]].report.sup_b1 >= members[w[0]].report.sup_b1);
    let bound_holds = members.iter().all(|m| m.report.sup_b1 <= c_tilde * m.report.eps.powf(alpha_fit));
    Ok(FamilyReport {
        alpha_paper: alpha_from_theta(params.theta),
        alpha_fit,
        c_tilde,
        monotone_sup,
        bound_holds,
        all_truncated: members.iter().all(|m| m.report.truncated),
        all_monotone: members.iter().all(|m| m.report.monotone),
        members,
    })
}
