//! Continuous-or-shock classification of the traces along a curve.

use serde::{Deserialize, Serialize};

use crate::characteristics::MollifierKernel;
use crate::entropy::{entropy_eval, EntropyPair};
use crate::error::{Error, Result};
use crate::solver::SpaceTimeRecord;
use crate::state::ConservedState;

use super::curve::LipschitzCurve;
use super::trace::{trapezoid_weights, Side, TraceReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Continuous,
    Shock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyParams {
    /// `|u⁺ − u⁻| ≤ jump_tol` means CONTINUOUS.
    pub jump_tol: f64,
    /// Allowed positive entropy production residual on SHOCK samples.
    pub entropy_tol: f64,
    /// Number of `v0` values for the one-sided kinetic entropies.
    pub kinetic_samples: usize,
    /// Widths of the pairing mollifier; `None` means `{4, 2, 1}` bands.
    pub pairing_eps: Option<Vec<f64>>,
    /// Relative agreement required between the innermost pairing and the trace jump.
    pub pairing_tol: f64,
    pub quadrature_nodes: usize,
}

impl Default for DichotomyParams {
    fn default() -> Self {
        Self {
            jump_tol: 5e-2,
            entropy_tol: 5e-2,
            kinetic_samples: 9,
            pairing_eps: None,
            pairing_tol: 0.1,
            quadrature_nodes: 24,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomySample {
    pub t: f64,
    pub h: f64,
    pub hdot: f64,
    pub label: Label,
    pub jump: f64,
    /// `ḣ (u⁺ − u⁻) − (F(u⁺) − F(u⁻))`
    pub rh_residual: [f64; 2],
    /// `[q] − ḣ [η]` for the energy pair (≤ 0 for entropic shocks).
    pub energy_residual: f64,
    /// Largest `([q] − ḣ [η]) / (1 + |[η]|)` over the one-sided kinetic
    /// entropies. Many of them produce nothing across a given shock, and for
    /// those the raw residual is just the speed error times `[η]`.
    pub kinetic_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingEstimate {
    pub eps: f64,
    /// Time-averaged `∫ ψ_ε(y) (u(t, h + y) − u(t, h − y)) dy`.
    pub jump: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub label: Label,
    pub samples: Vec<DichotomySample>,
    pub shock_fraction: f64,
    /// Time average of `max |RH residual component|` over SHOCK samples.
    pub mean_rh_residual: f64,
    pub max_rh_residual: f64,
    pub max_energy_residual: f64,
    pub max_kinetic_residual: f64,
    /// Every SHOCK sample satisfies the entropy inequalities up to `entropy_tol`.
    pub entropic: bool,
    /// Time-averaged `u⁺ − u⁻`.
    pub trace_jump: [f64; 2],
    pub pairing: Vec<PairingEstimate>,
    /// `|pairing(ε_min) − trace jump|∞ / max(|trace jump|∞, jump_tol)`.
    pub pairing_error: f64,
    pub pairing_ok: bool,
    pub trace_verified: bool,
}

fn sup_norm(v: [f64; 2]) -> f64 {
    v[0].abs().max(v[1].abs())
}

/// `([q] − s [η], [η])`
fn jump_residuals(minus: &ConservedState, plus: &ConservedState, s: f64, pair: EntropyPair) -> (f64, f64) {
    let (em, qm) = entropy_eval(pair, minus);
    let (ep, qp) = entropy_eval(pair, plus);
    ((qp - qm) - s * (ep - em), ep - em)
}

pub fn rh_dichotomy(
    record: &SpaceTimeRecord,
    curve: &LipschitzCurve,
    minus: &TraceReport,
    plus: &TraceReport,
    params: &DichotomyParams,
) -> Result<DichotomyReport> {
    if minus.side != Side::Minus || plus.side != Side::Plus {
        return Err(Error::Config("rh_dichotomy needs a minus-side and a plus-side trace".into()));
    }
    if minus.times != curve.times || plus.times != curve.times {
        return Err(Error::Config("traces were not extracted along this curve".into()));
    }
    let hdot = curve.hdot();
    let l = record.velocity_bound;
    let v0s: Vec<f64> = (0..params.kinetic_samples)
        .map(|i| -l + 2.0 * l * (i as f64 + 0.5) / params.kinetic_samples as f64)
        .collect();

    let mut samples = Vec::with_capacity(curve.len());
    for k in 0..curve.len() {
        let (um, up) = (minus.u_trace[k], plus.u_trace[k]);
        let s = hdot[k];
        let jump = up.l1_distance(&um);
        let (fm, fp) = (um.flux(), up.flux());
        let rh = [s * (up.rho - um.rho) - (fp[0] - fm[0]), s * (up.m - um.m) - (fp[1] - fm[1])];
        let energy = jump_residuals(&um, &up, s, EntropyPair::Energy).0;
        let kinetic = v0s
            .iter()
            .flat_map(|&v0| [EntropyPair::Plus(v0), EntropyPair::Minus(v0)])
            .map(|p| {
                let (r, de) = jump_residuals(&um, &up, s, p);
                r / (1.0 + de.abs())
            })
            .fold(f64::NEG_INFINITY, f64::max);
        samples.push(DichotomySample {
            t: curve.times[k],
            h: curve.h[k],
            hdot: s,
            label: if jump <= params.jump_tol { Label::Continuous } else { Label::Shock },
            jump,
            rh_residual: rh,
            energy_residual: energy,
            kinetic_residual: kinetic,
        });
    }

    let w = trapezoid_weights(&curve.times);
    let span: f64 = w.iter().sum();
    let avg = |f: &dyn Fn(usize) -> f64| -> f64 {
        if span > 0.0 {
            (0..curve.len()).map(|k| f(k) * w[k]).sum::<f64>() / span
        } else {
            f(0)
        }
    };
    let shock_fraction = avg(&|k| (samples[k].label == Label::Shock) as u8 as f64);
    let mean_rh_residual = if shock_fraction > 0.0 {
        avg(&|k| if samples[k].label == Label::Shock { sup_norm(samples[k].rh_residual) } else { 0.0 }) / shock_fraction
    } else {
        0.0
    };
    let shocks = samples.iter().filter(|s| s.label == Label::Shock);
    let max_rh_residual = shocks.clone().map(|s| sup_norm(s.rh_residual)).fold(0.0, f64::max);
    let max_energy_residual = shocks.clone().map(|s| s.energy_residual).fold(f64::NEG_INFINITY, f64::max);
    let max_kinetic_residual = shocks.clone().map(|s| s.kinetic_residual).fold(f64::NEG_INFINITY, f64::max);
    let entropic = shocks.clone().all(|s| s.energy_residual <= params.entropy_tol && s.kinetic_residual <= params.entropy_tol);

    let trace_jump = [
        avg(&|k| plus.u_trace[k].rho - minus.u_trace[k].rho),
        avg(&|k| plus.u_trace[k].m - minus.u_trace[k].m),
    ];

    let band = plus.band.max(minus.band);
    let mut eps_list = params.pairing_eps.clone().unwrap_or_else(|| vec![4.0 * band, 2.0 * band, band]);
    eps_list.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut pairing = Vec::with_capacity(eps_list.len());
    for &eps in &eps_list {
        curve.check_inside(&record.grid, eps, eps)?;
        let kernel = MollifierKernel::new(eps, params.quadrature_nodes)?;
        let mut acc = [0.0; 2];
        for k in 0..curve.len() {
            let (t, h) = (curve.times[k], curve.h[k]);
            let mut j = [0.0; 2];
            for &(y, wy) in kernel.nodes() {
                let a = record.state_at(t, h + y).ok_or_else(|| Error::Geometry("pairing left the record".into()))?;
                let b = record.state_at(t, h - y).ok_or_else(|| Error::Geometry("pairing left the record".into()))?;
                j[0] += wy * (a.rho - b.rho);
                j[1] += wy * (a.m - b.m);
            }
            let wk = if span > 0.0 { w[k] / span } else { 1.0 };
            acc[0] += wk * j[0];
            acc[1] += wk * j[1];
        }
        pairing.push(PairingEstimate { eps, jump: acc });
    }
    let pairing_error = pairing.last().map_or(0.0, |p| {
        sup_norm([p.jump[0] - trace_jump[0], p.jump[1] - trace_jump[1]]) / sup_norm(trace_jump).max(params.jump_tol)
    });

    Ok(DichotomyReport {
        label: if shock_fraction > 0.5 { Label::Shock } else { Label::Continuous },
        samples,
        shock_fraction,
        mean_rh_residual,
        max_rh_residual,
        max_energy_residual: if max_energy_residual.is_finite() { max_energy_residual } else { 0.0 },
        max_kinetic_residual: if max_kinetic_residual.is_finite() { max_kinetic_residual } else { 0.0 },
        entropic,
        trace_jump,
        pairing,
        pairing_error,
        pairing_ok: pairing_error <= params.pairing_tol,
        trace_verified: minus.verified && plus.verified,
    })
}
