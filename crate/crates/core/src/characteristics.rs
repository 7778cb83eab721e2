//! Generalized characteristics from the mollified ODE
//!
//! ```text
//! ḣ_ε(t) = ∫∫ V(u(t − τ, h_ε(t) − y)) ψ_ε(y) ψ_ε(−τ) dy dτ
//! ```
//!
//! with `V = min(λ1, σ)` (family 1) or `max(λ2, σ)` (family 2). Since
//! `ψ_ε(−τ)` lives on `τ ∈ (−ε, 0)`, the kernel reads the solution at later
//! times, so characteristics are integrated on a stored record.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::regularity::{extract_trace, rh_dichotomy, DichotomyParams, DichotomyReport, LipschitzCurve, Side, TraceParams};
use crate::solver::SpaceTimeRecord;
use crate::state::ConservedState;

fn bump(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        (-1.0 / (s * (1.0 - s))).exp()
    }
}

/// `∫_0^1 exp(−1/(s(1−s))) ds`, computed once by composite Simpson.
fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        let n = 20_000;
        let h = 1.0 / n as f64;
        let mut acc = 0.0;
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * bump(i as f64 * h);
        }
        acc * h / 3.0
    })
}

/// Smooth bump `ψ` on `(0, 1)` with unit mass, rescaled to `ψ_ε(y) = ψ(y/ε)/ε`,
/// together with a quadrature rule whose weights sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct MollifierKernel {
    pub eps: f64,
    nodes: Vec<(f64, f64)>,
}

impl MollifierKernel {
    pub fn new(eps: f64, n: usize) -> Result<Self> {
        if !(eps > 0.0) || n == 0 {
            return Err(Error::Config(format!("mollifier needs eps > 0 and at least one node, got eps = {eps}, n = {n}")));
        }
        let raw: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let s = (i as f64 + 0.5) / n as f64;
                (eps * s, bump(s))
            })
            .collect();
        let total: f64 = raw.iter().map(|p| p.1).sum();
        Ok(Self { eps, nodes: raw.into_iter().map(|(y, w)| (y, w / total)).collect() })
    }

    /// `ψ_ε(y)`.
    pub fn density(&self, y: f64) -> f64 {
        bump(y / self.eps) / (bump_mass() * self.eps)
    }

    /// Quadrature nodes `(y, weight)` on `(0, ε)`.
    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Family {
    pub fn index(self) -> u8 {
        match self {
            Family::One => 1,
            Family::Two => 2,
        }
    }

    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Family::One),
            2 => Ok(Family::Two),
            _ => Err(Error::Config(format!("family must be 1 or 2, got {i}"))),
        }
    }
}

/// Capped characteristic speed `V(u)`; `None` at vacuum.
pub fn capped_speed(u: &ConservedState, family: Family, sigma: f64, floor: f64) -> Option<f64> {
    if u.rho <= floor {
        return None;
    }
    let v = u.m / u.rho;
    Some(match family {
        Family::One => (v - 0.5 * u.rho).min(sigma),
        Family::Two => (v + 0.5 * u.rho).max(sigma),
    })
}

/// Value of the mollified speed and whether vacuum was touched.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MollifiedSpeed {
    pub speed: f64,
    pub vacuum: bool,
}

pub fn mollified_velocity(
    record: &SpaceTimeRecord,
    kernel: &MollifierKernel,
    t: f64,
    x: f64,
    family: Family,
    sigma: f64,
) -> Result<MollifiedSpeed> {
    let eps = kernel.eps;
    if t < record.t_start() || t + eps > record.t_end() * (1.0 + 1e-14) {
        return Err(Error::Geometry(format!(
            "kernel times [{t}, {}] leave the record [{}, {}]",
            t + eps,
            record.t_start(),
            record.t_end()
        )));
    }
    if !record.grid.contains_window(x - eps, x) {
        return Err(Error::Geometry(format!("kernel window [{}, {x}] leaves the domain", x - eps)));
    }
    let floor = record.vacuum_floor;
    let mut acc = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut vacuum = false;
    for &(s, ws) in kernel.nodes() {
        let ts = (t + s).min(record.t_end());
        for &(y, wy) in kernel.nodes() {
            let u = record
                .state_at(ts, x - y)
                .ok_or_else(|| Error::Geometry(format!("kernel sample ({ts}, {}) outside the record", x - y)))?;
            let v = match capped_speed(&u, family, sigma, floor) {
                Some(v) => v,
                None => {
                    vacuum = true;
                    sigma
                }
            };
            lo = lo.min(v);
            hi = hi.max(v);
            acc += ws * wy * v;
        }
    }
    // weights are a convex combination; clamp away rounding
    Ok(MollifiedSpeed { speed: acc.clamp(lo, hi), vacuum })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicParams {
    /// Cap `σ`; `None` means sup λ1 (family 1) or inf λ2 (family 2) over the record.
    pub sigma: Option<f64>,
    /// Mollifier widths, largest first; `None` means `{16, 8, 4} dx`.
    pub eps_ladder: Option<Vec<f64>>,
    pub quadrature_nodes: usize,
    /// Tolerance of the one-sided speed bounds.
    pub bound_tol: f64,
    /// Traces taken along the finest curve in the verification pass.
    pub trace: TraceParams,
    pub dichotomy: DichotomyParams,
}

impl Default for CharacteristicParams {
    fn default() -> Self {
        Self {
            sigma: None,
            eps_ladder: None,
            quadrature_nodes: 24,
            bound_tol: 5e-2,
            trace: TraceParams::default(),
            dichotomy: DichotomyParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsRun {
    pub eps: f64,
    pub times: Vec<f64>,
    pub h: Vec<f64>,
    pub hdot: Vec<f64>,
    pub max_abs_hdot: f64,
    pub vacuum: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSample {
    pub t: f64,
    pub h: f64,
    pub hdot: f64,
    /// λ1(u⁺) for family 1, λ2(u⁻) for family 2.
    pub lambda_trace: f64,
    /// sup λ1 for family 1, inf λ2 for family 2.
    pub lambda_range: f64,
    pub violation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicRun {
    pub family: Family,
    pub sigma: f64,
    pub x0: f64,
    pub eps_ladder: Vec<f64>,
    pub runs: Vec<EpsRun>,
    /// `‖V‖∞` over the record.
    pub v_sup: f64,
    pub hdot_bounded: bool,
    /// `‖h_ε − h_{ε'}‖∞` between consecutive ladder entries.
    pub ladder_norms: Vec<f64>,
    pub ladder_converged: bool,
    pub vacuum: bool,
    pub samples: Vec<BoundSample>,
    pub violation_fraction: f64,
    pub bound_tol: f64,
    pub dichotomy: Option<DichotomyReport>,
}

fn integrate(record: &SpaceTimeRecord, kernel: &MollifierKernel, x0: f64, t0: f64, t1: f64, family: Family, sigma: f64) -> Result<EpsRun> {
    let eps = kernel.eps;
    let steps = ((t1 - t0) / (0.25 * eps)).ceil().max(1.0) as usize;
    let dt = (t1 - t0) / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut h = Vec::with_capacity(steps + 1);
    let mut hdot = Vec::with_capacity(steps + 1);
    let mut vacuum = false;
    let mut f = |t: f64, x: f64| -> Result<f64> {
        let m = mollified_velocity(record, kernel, t, x, family, sigma)?;
        vacuum |= m.vacuum;
        Ok(m.speed)
    };
    let mut x = x0;
    for n in 0..=steps {
        let t = t0 + n as f64 * dt;
        let k1 = f(t, x)?;
        times.push(t);
        h.push(x);
        hdot.push(k1);
        if n == steps {
            break;
        }
        let k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1)?;
        let k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2)?;
        let k4 = f(t + dt, x + dt * k3)?;
        x += dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    }
    let max_abs_hdot = hdot.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    Ok(EpsRun { eps, times, h, hdot, max_abs_hdot, vacuum })
}

fn interp(times: &[f64], values: &[f64], t: f64) -> f64 {
    let n = times.len();
    if t <= times[0] {
        return values[0];
    }
    if t >= times[n - 1] {
        return values[n - 1];
    }
    let k = times.partition_point(|&s| s <= t) - 1;
    let w = (t - times[k]) / (times[k + 1] - times[k]);
    values[k] + w * (values[k + 1] - values[k])
}

/// Integrate the mollified ODE from `(t_start, x0)` for each width of the ladder,
/// then verify the one-sided speed bounds and the trace dichotomy along the
/// finest curve.
pub fn solve_characteristic(record: &SpaceTimeRecord, x0: f64, family: Family, params: &CharacteristicParams) -> Result<CharacteristicRun> {
    let dx = record.grid.dx();
    let floor = record.vacuum_floor;
    let mut ladder = params.eps_ladder.clone().unwrap_or_else(|| vec![16.0 * dx, 8.0 * dx, 4.0 * dx]);
    if ladder.is_empty() || ladder.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Config("eps ladder must be non-empty and positive".into()));
    }
    ladder.sort_by(|a, b| b.partial_cmp(a).unwrap());

    // range of the invariant of this family over the record
    let mut l1_sup = f64::NEG_INFINITY;
    let mut l2_inf = f64::INFINITY;
    for snap in &record.snapshots {
        for s in snap.states().filter(|s| s.rho > floor) {
            let v = s.m / s.rho;
            l1_sup = l1_sup.max(v - 0.5 * s.rho);
            l2_inf = l2_inf.min(v + 0.5 * s.rho);
        }
    }
    if !l1_sup.is_finite() {
        return Err(Error::Vacuum { rho: 0.0, floor });
    }
    let sigma = params.sigma.unwrap_or(match family {
        Family::One => l1_sup,
        Family::Two => l2_inf,
    });
    let mut v_sup: f64 = sigma.abs();
    for snap in &record.snapshots {
        for s in snap.states() {
            if let Some(v) = capped_speed(&s, family, sigma, floor) {
                v_sup = v_sup.max(v.abs());
            }
        }
    }

    let t0 = record.t_start();
    let t1 = record.t_end() - ladder[0];
    if !(t1 > t0) {
        return Err(Error::Geometry(format!(
            "record of length {} is shorter than the widest mollifier {}",
            record.t_end() - t0,
            ladder[0]
        )));
    }
    let runs: Vec<EpsRun> = ladder
        .par_iter()
        .map(|&eps| {
            let kernel = MollifierKernel::new(eps, params.quadrature_nodes)?;
            integrate(record, &kernel, x0, t0, t1, family, sigma)
        })
        .collect::<Result<_>>()?;

    let ladder_norms: Vec<f64> = runs
        .windows(2)
        .map(|w| {
            w[0].times
                .iter()
                .zip(&w[0].h)
                .map(|(&t, &h)| (h - interp(&w[1].times, &w[1].h, t)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let ladder_converged = ladder_norms.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let hdot_bounded = runs.iter().all(|r| r.max_abs_hdot <= v_sup);
    let vacuum = runs.iter().any(|r| r.vacuum);

    // verification along the finest curve
    let fine = runs.last().unwrap();
    let curve = LipschitzCurve::new(fine.times.clone(), fine.h.clone(), v_sup * (1.0 + 1e-9) + 1e-12)?;
    let plus = extract_trace(record, &curve, Side::Plus, &params.trace)?;
    let minus = extract_trace(record, &curve, Side::Minus, &params.trace)?;
    let tol = params.bound_tol;
    let mut samples = Vec::with_capacity(curve.len());
    let mut violations = 0usize;
    for k in 0..curve.len() {
        let hd = fine.hdot[k];
        let (trace_bound, violation) = match family {
            Family::One => {
                let up = plus.u_trace[k];
                let lt = if up.rho > floor { up.m / up.rho - 0.5 * up.rho } else { f64::NEG_INFINITY };
                (lt, hd < lt - tol || hd > l1_sup + tol)
            }
            Family::Two => {
                let um = minus.u_trace[k];
                let lt = if um.rho > floor { um.m / um.rho + 0.5 * um.rho } else { f64::INFINITY };
                (lt, hd > lt + tol || hd < l2_inf - tol)
            }
        };
        violations += violation as usize;
        samples.push(BoundSample {
            t: curve.times[k],
            h: curve.h[k],
            hdot: hd,
            lambda_trace: trace_bound,
            lambda_range: match family {
                Family::One => l1_sup,
                Family::Two => l2_inf,
            },
            violation,
        });
    }
    let dichotomy = rh_dichotomy(record, &curve, &minus, &plus, &params.dichotomy).ok();

    Ok(CharacteristicRun {
        family,
        sigma,
        x0,
        eps_ladder: ladder,
        runs,
        v_sup,
        hdot_bounded,
        ladder_norms,
        ladder_converged,
        vacuum,
        violation_fraction: violations as f64 / samples.len().max(1) as f64,
        samples,
        bound_tol: tol,
        dichotomy,
    })
}

impl CharacteristicRun {
    /// CSV of the verification pass along the finest curve.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        match self.family {
            Family::One => w.write_record(["t", "h", "hdot", "lambda1_plus", "lambda1_sup", "violation_flag"])?,
            Family::Two => w.write_record(["t", "h", "hdot", "lambda2_minus", "lambda2_inf", "violation_flag"])?,
        }
        for s in &self.samples {
            w.write_record(&[
                s.t.to_string(),
                s.h.to_string(),
                s.hdot.to_string(),
                s.lambda_trace.to_string(),
                s.lambda_range.to_string(),
                (s.violation as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Mean `|ḣ − s|` on the finest curve over samples with `t ≥ t_from`.
    pub fn mean_speed_error(&self, s: f64, t_from: f64) -> f64 {
        let fine = self.runs.last().unwrap();
        let errs: Vec<f64> = fine.times.iter().zip(&fine.hdot).filter(|(&t, _)| t >= t_from).map(|(_, &v)| (v - s).abs()).collect();
        if errs.is_empty() {
            return 0.0;
        }
        errs.iter().sum::<f64>() / errs.len() as f64
    }
}
