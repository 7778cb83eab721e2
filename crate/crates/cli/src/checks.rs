//! Diagnostic checkers run against a finished record.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use isokin_core::characteristics::solve_characteristic;
use isokin_core::entropy::{mu_estimate, tv_bound_check, DissipationBins};
use isokin_core::regularity::{
    blowup_ladder, degiorgi_family, degiorgi_monitor, extract_trace, rh_dichotomy, semicontinuity_check, FamilySpec, Label,
    LipschitzCurve, Side, TraceReport,
};
use isokin_core::riemann::{energy_pair, RiemannSolution, WaveKind};
use isokin_core::solver::SpaceTimeRecord;
use isokin_core::state::ConservedState;

use crate::config::{CurveSpec, Diagnostic, Preset, RunConfig, SampleSpec};
use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub kind: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub metrics: BTreeMap<String, f64>,
    /// Files written, relative to the run directory.
    #[serde(default)]
    pub artifacts: Vec<String>,
}

pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub record: &'a SpaceTimeRecord,
    /// Exact solution and jump location of a Riemann preset.
    pub exact: Option<&'a (RiemannSolution, f64)>,
    /// Run directory; reports go to `reports/` below it.
    pub dir: Option<&'a Path>,
}

pub const REPORTS: &str = "reports";

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

struct Outcome {
    passed: bool,
    metrics: BTreeMap<String, f64>,
    artifacts: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { passed: true, metrics: BTreeMap::new(), artifacts: Vec::new() }
    }

    fn metric(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.to_string(), v);
    }

    /// Record a pass condition both as a metric and in the verdict.
    fn require(&mut self, key: &str, ok: bool) {
        self.metric(key, flag(ok));
        self.passed &= ok;
    }
}

/// Writes report files under `reports/` when the context has a directory.
struct Writer<'a> {
    dir: Option<&'a Path>,
    name: &'a str,
}

impl Writer<'_> {
    fn path(&self, suffix: &str) -> Option<(PathBuf, String)> {
        let dir = self.dir?;
        let rel = format!("{REPORTS}/{}{suffix}", self.name);
        Some((dir.join(&rel), rel))
    }

    fn json<T: Serialize>(&self, out: &mut Outcome, suffix: &str, value: &T) -> Result<()> {
        if let Some((path, rel)) = self.path(suffix) {
            crate::pipeline::write_json(&path, value)?;
            out.artifacts.push(rel);
        }
        Ok(())
    }

    fn with<F>(&self, out: &mut Outcome, suffix: &str, f: F) -> Result<()>
    where
        F: FnOnce(&Path) -> isokin_core::Result<()>,
    {
        if let Some((path, rel)) = self.path(suffix) {
            f(&path).map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display())))?;
            out.artifacts.push(rel);
        }
        Ok(())
    }
}

/// Run one diagnostic. Checker errors make the check fail; failures to
/// write its artifacts are returned as errors.
pub fn run_check(ctx: &Context, name: &str, diag: &Diagnostic) -> Result<CheckResult> {
    let w = Writer { dir: ctx.dir, name };
    let (passed, error, metrics, artifacts) = match check(ctx, &w, diag) {
        Ok(o) => (o.passed, None, o.metrics, o.artifacts),
        Err(CliError::Core(e)) => (false, Some(e.to_string()), BTreeMap::new(), Vec::new()),
        Err(CliError::Usage(msg)) => (false, Some(msg), BTreeMap::new(), Vec::new()),
        Err(e) => return Err(e),
    };
    Ok(CheckResult { name: name.to_string(), kind: diag.kind().to_string(), passed, error, metrics, artifacts })
}

fn check(ctx: &Context, w: &Writer, diag: &Diagnostic) -> Result<Outcome> {
    match diag {
        Diagnostic::Trace { curve, trace, oracle_tol, .. } => {
            let c = build_curve(ctx, curve)?;
            let p = trace.params();
            let mut out = Outcome::new();
            let mut all_verified = true;
            for (side, tag) in [(Side::Minus, "minus"), (Side::Plus, "plus")] {
                let tr = extract_trace(ctx.record, &c, side, &p)?;
                out.metric(&format!("{tag}.band"), tr.band);
                out.metric(&format!("{tag}.e_first"), tr.e[0]);
                out.metric(&format!("{tag}.e_last"), *tr.e.last().unwrap_or(&f64::NAN));
                out.metric(&format!("{tag}.uniform_e_last"), *tr.uniform_e.last().unwrap_or(&f64::NAN));
                out.metric(&format!("{tag}.verified"), flag(tr.verified));
                all_verified &= tr.verified;
                if let Some(ex) = ctx.exact {
                    let d = oracle_distance(&tr, ex, side);
                    out.metric(&format!("{tag}.oracle_distance"), d);
                    if let Some(tol) = oracle_tol {
                        out.require(&format!("{tag}.oracle_ok"), d <= *tol);
                    }
                }
                w.with(&mut out, &format!("_{tag}_ladder.csv"), |path| tr.write_ladder_csv(path))?;
                w.json(&mut out, &format!("_{tag}.json"), &tr)?;
            }
            // an exact oracle supersedes the decay of the ladder
            if oracle_tol.is_none() || ctx.exact.is_none() {
                out.passed &= all_verified;
            }
            Ok(out)
        }
        Diagnostic::Rh { curve, trace, dichotomy, expect, blowup, .. } => {
            let c = build_curve(ctx, curve)?;
            let p = trace.params();
            let minus = extract_trace(ctx.record, &c, Side::Minus, &p)?;
            let plus = extract_trace(ctx.record, &c, Side::Plus, &p)?;
            let d = rh_dichotomy(ctx.record, &c, &minus, &plus, &dichotomy.params())?;
            let mut out = Outcome::new();
            out.metric("shock", flag(d.label == Label::Shock));
            out.metric("shock_fraction", d.shock_fraction);
            out.metric("mean_rh_residual", d.mean_rh_residual);
            out.metric("max_rh_residual", d.max_rh_residual);
            out.metric("max_energy_residual", d.max_energy_residual);
            out.metric("max_kinetic_residual", d.max_kinetic_residual);
            out.metric("pairing_error", d.pairing_error);
            out.metric("trace_verified", flag(d.trace_verified));
            if let Some(want) = expect {
                out.require("label_ok", d.label == *want);
            }
            if d.label == Label::Shock {
                out.require("entropic", d.entropic);
                out.require("pairing_ok", d.pairing_ok);
            }
            if let Some(b) = blowup {
                let k = minus.times.iter().position(|&t| t >= b.t0).unwrap_or(minus.times.len() - 1);
                let ladder = blowup_ladder(ctx.record, b.t0, &c, &minus.u_trace[k], &plus.u_trace[k], b.levels, &b.params())?;
                out.metric("blowup.first_distance", ladder.distances[0]);
                out.metric("blowup.last_distance", *ladder.distances.last().unwrap());
                out.require("blowup.decreasing", ladder.decreasing);
                w.json(&mut out, "_blowup.json", &ladder)?;
            }
            write_dichotomy_csv(w, &mut out, &d)?;
            w.json(&mut out, ".json", &d)?;
            Ok(out)
        }
        Diagnostic::Semicont { points, sample, shock_points, .. } => {
            let params = diag.semicont_params().expect("semicont");
            let shocks = exact_shocks(ctx);
            let mut off = points.clone();
            if let Some(s) = sample {
                off.extend(sample_points(s, &shocks));
            }
            let mut out = Outcome::new();
            if !off.is_empty() {
                let rep = semicontinuity_check(ctx.record, &off, &params)?;
                let ok = |p: &isokin_core::regularity::PointReport| p.passed == Some(true) && p.defect_decreasing && p.ordering_ok;
                let good = rep.points.iter().filter(|p| ok(p)).count();
                out.metric("tol", rep.tol);
                out.metric("off.points", off.len() as f64);
                out.metric("off.vmo", rep.vmo_points as f64);
                out.metric("off.passed", good as f64);
                out.metric("off.max_rho_gap", max_of(rep.points.iter().map(|p| p.rho_gap)));
                out.metric("off.max_lambda1_gap", max_of(rep.points.iter().map(|p| p.lambda1_gap)));
                out.metric("off.max_lambda2_gap", max_of(rep.points.iter().map(|p| p.lambda2_gap)));
                out.passed &= good == off.len();
                w.with(&mut out, "_off.csv", |path| rep.write_csv(path))?;
                w.json(&mut out, "_off.json", &rep)?;
            }
            if *shock_points > 0 {
                let &(x0, s) = shocks.first().ok_or_else(|| CliError::Usage("shock_points: the exact solution has no shock".into()))?;
                let t = sample.as_ref().map_or([0.25 * ctx.record.t_end(), 0.75 * ctx.record.t_end()], |s| s.t);
                let on: Vec<[f64; 2]> = (0..*shock_points)
                    .map(|i| {
                        let tt = t[0] + (t[1] - t[0]) * (i as f64 + 0.5) / *shock_points as f64;
                        [tt, x0 + s * tt]
                    })
                    .collect();
                let rep = semicontinuity_check(ctx.record, &on, &params)?;
                out.metric("on.points", on.len() as f64);
                out.metric("on.vmo", rep.vmo_points as f64);
                out.require("on.all_flagged", rep.vmo_points == 0);
                w.with(&mut out, "_on.csv", |path| rep.write_csv(path))?;
                w.json(&mut out, "_on.json", &rep)?;
            }
            Ok(out)
        }
        Diagnostic::Degiorgi { center, radius, reference, direction, eps_threshold, params, .. } => {
            let bar = match (reference, &ctx.cfg.initial) {
                (Some(r), _) => r.state(),
                (None, Preset::Constant { state }) => state.state(),
                (None, Preset::Bump { base, .. }) => base.state(),
                _ => return Err(CliError::Usage("degiorgi: no reference state".into())),
            };
            let rep = degiorgi_monitor(ctx.record, *center, *radius, &bar, *direction, &params.params())?;
            let mut out = Outcome::new();
            out.metric("eps", rep.eps);
            out.metric("eta", rep.eta);
            out.metric("sup_b1", rep.sup_b1);
            out.metric("alpha", rep.alpha);
            out.metric("u0", rep.masses[0]);
            out.metric("u_last", *rep.masses.last().unwrap());
            out.metric("truncated", flag(rep.truncated));
            out.require("monotone", rep.monotone);
            if rep.eps <= *eps_threshold {
                out.require("truncated_below_threshold", rep.truncated);
            }
            w.with(&mut out, ".csv", |path| rep.write_csv(path))?;
            w.json(&mut out, ".json", &rep)?;
            Ok(out)
        }
        Diagnostic::DegiorgiFamily { ball_center, ball_radius, targets, safety, target_tol, min_alpha, params, .. } => {
            let Preset::Bump { base, center, width, direction, .. } = &ctx.cfg.initial else {
                return Err(CliError::Usage("degiorgi_family needs the bump preset".into()));
            };
            let spec = FamilySpec {
                grid: ctx.cfg.grid.build()?,
                scheme: ctx.cfg.scheme.build(),
                base: base.state(),
                bump_center: center.unwrap_or(ctx.cfg.grid.midpoint()),
                bump_width: *width,
                ball_center: *ball_center,
                ball_radius: *ball_radius,
                direction: *direction,
                targets: targets.clone(),
                safety: *safety,
                target_tol: *target_tol,
            };
            let rep = degiorgi_family(&spec, &params.params())?;
            let mut out = Outcome::new();
            out.metric("alpha_fit", rep.alpha_fit);
            out.metric("alpha_paper", rep.alpha_paper);
            out.metric("c_tilde", rep.c_tilde);
            for (i, m) in rep.members.iter().enumerate() {
                out.metric(&format!("member{i}.eps"), m.report.eps);
                out.metric(&format!("member{i}.sup_b1"), m.report.sup_b1);
                out.metric(&format!("member{i}.amplitude"), m.amplitude);
            }
            out.require("alpha_ok", rep.alpha_fit >= *min_alpha);
            out.require("monotone_sup", rep.monotone_sup);
            out.require("bound_holds", rep.bound_holds);
            out.require("all_truncated", rep.all_truncated);
            out.require("all_monotone", rep.all_monotone);
            w.with(&mut out, "_members.csv", |path| {
                let mut wr = csv::Writer::from_path(path)?;
                wr.write_record(["target", "amplitude", "eps", "eta", "sup_b1", "u0", "u_last", "truncated", "monotone"])?;
                for m in &rep.members {
                    let r = &m.report;
                    wr.write_record([
                        m.target.to_string(),
                        m.amplitude.to_string(),
                        r.eps.to_string(),
                        r.eta.to_string(),
                        r.sup_b1.to_string(),
                        r.masses[0].to_string(),
                        r.masses.last().unwrap().to_string(),
                        r.truncated.to_string(),
                        r.monotone.to_string(),
                    ])?;
                }
                wr.flush()?;
                Ok(())
            })?;
            w.json(&mut out, ".json", &rep)?;
            Ok(out)
        }
        Diagnostic::Characteristic { max_violation, expect_speed, speed_tol, speed_from, .. } => {
            let (x0, family, params) = diag.characteristic_params().expect("characteristic");
            let c = solve_characteristic(ctx.record, x0, family, &params)?;
            let mut out = Outcome::new();
            out.metric("sigma", c.sigma);
            out.metric("v_sup", c.v_sup);
            out.metric("max_abs_hdot", max_of(c.runs.iter().map(|r| r.max_abs_hdot)));
            out.metric("final_h", *c.runs.last().and_then(|r| r.h.last()).unwrap_or(&f64::NAN));
            out.metric("ladder_converged", flag(c.ladder_converged));
            out.metric("violation_fraction", c.violation_fraction);
            out.require("hdot_bounded", c.hdot_bounded);
            out.require("violations_ok", c.violation_fraction <= *max_violation);
            if let Some(d) = &c.dichotomy {
                out.metric("shock", flag(d.label == Label::Shock));
            }
            if let Some(s) = expect_speed {
                let err = c.mean_speed_error(*s, *speed_from);
                out.metric("speed_error", err);
                out.require("speed_ok", err <= *speed_tol);
            }
            w.with(&mut out, ".csv", |path| c.write_csv(path))?;
            w.json(&mut out, ".json", &c)?;
            Ok(out)
        }
        Diagnostic::Mu { t_bins, x_bins, v_bins, rate_from, rate_tol, .. } => {
            let mu = mu_estimate(ctx.record, &DissipationBins { t_bins: *t_bins, x_bins: *x_bins, v_bins: *v_bins })?;
            let summary = mu.summary();
            let mut out = Outcome::new();
            out.metric("total", summary.total_mass);
            out.metric("min_bin", summary.min_bin);
            out.require("nonnegative", summary.min_bin >= -1e-12);
            out.require("inside_support", summary.mass_outside_support == 0.0);
            let times = &ctx.record.times;
            if let Some(k0) = times.iter().position(|&t| t >= *rate_from).filter(|&k| k + 1 < times.len()) {
                let rate = mu.step_mass[k0..].iter().sum::<f64>() / (ctx.record.t_end() - times[k0]);
                out.metric("rate", rate);
                if let Some((sol, _)) = ctx.exact {
                    let oracle: f64 = sol
                        .shocks()
                        .map(|wv| {
                            let ((el, ql), (er, qr)) = (energy_pair(&wv.left), energy_pair(&wv.right));
                            wv.speed_lo * (er - el) - (qr - ql)
                        })
                        .sum();
                    out.metric("oracle_rate", oracle);
                    if oracle > 0.0 {
                        let rel = ((rate - oracle) / oracle).abs();
                        out.metric("rate_error", rel);
                        if let Some(tol) = rate_tol {
                            out.require("rate_ok", rel <= *tol);
                        }
                    }
                }
            }
            w.with(&mut out, ".csv", |path| mu.write_csv(path))?;
            w.with(&mut out, "_summary.json", |path| mu.write_summary(path))?;
            Ok(out)
        }
        Diagnostic::TvBound { center, r, big_r, a, side, .. } => {
            let rep = tv_bound_check(ctx.record, *center, *r, *big_r, *a, *side)?;
            let mut out = Outcome::new();
            out.metric("numerator", rep.numerator);
            out.metric("denominator", rep.denominator);
            out.metric("ratio", rep.ratio);
            out.require("finite", rep.ratio.is_finite() && rep.numerator >= -1e-12);
            w.json(&mut out, ".json", &rep)?;
            Ok(out)
        }
    }
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

/// Shock lines `(x0, s)` of the exact solution, if any.
fn exact_shocks(ctx: &Context) -> Vec<(f64, f64)> {
    ctx.exact.map_or(Vec::new(), |(sol, x0)| sol.shocks().map(|w| (*x0, w.speed_lo)).collect())
}

fn build_curve(ctx: &Context, spec: &CurveSpec) -> Result<LipschitzCurve> {
    let (x0, t0, speed) = match spec.shock {
        Some(f) => {
            let (sol, xj) = ctx.exact.ok_or_else(|| CliError::Usage("curve.shock needs the riemann preset".into()))?;
            let w = sol
                .waves
                .iter()
                .find(|w| w.family == f && w.kind == WaveKind::Shock)
                .ok_or_else(|| CliError::Usage(format!("the exact solution has no {f}-shock")))?;
            (*xj, 0.0, w.speed_lo)
        }
        None => (spec.x0.unwrap_or(0.0), spec.t0, spec.speed),
    };
    let t_to = spec.t_to.unwrap_or(f64::INFINITY);
    let times: Vec<f64> = ctx.record.times.iter().copied().filter(|&t| t >= spec.t_from && t <= t_to).collect();
    if times.len() < 2 {
        return Err(CliError::Usage(format!("curve: fewer than two record times in [{}, {t_to}]", spec.t_from)));
    }
    Ok(LipschitzCurve::line(&times, x0, t0, speed))
}

/// Mean L¹ distance of a trace to the exact state just beside the curve.
fn oracle_distance(tr: &TraceReport, (sol, xj): &(RiemannSolution, f64), side: Side) -> f64 {
    let d: Vec<f64> = tr
        .times
        .iter()
        .zip(&tr.h)
        .zip(&tr.u_trace)
        .filter(|((t, _), _)| **t > 0.0)
        .map(|((t, h), u)| u.l1_distance(&sol.sample((h - xj) / t + side.sign() * 1e-9)))
        .collect();
    d.iter().sum::<f64>() / d.len().max(1) as f64
}

/// Additive-recurrence sample of a space-time box, skipping points near shock lines.
pub fn sample_points(spec: &SampleSpec, shocks: &[(f64, f64)]) -> Vec<[f64; 2]> {
    const A: f64 = 0.618034;
    const B: f64 = 0.414214;
    let mut pts = Vec::with_capacity(spec.count);
    let mut k = 0u64;
    while pts.len() < spec.count && k < 1000 * spec.count as u64 + 1000 {
        k += 1;
        let t = spec.t[0] + (spec.t[1] - spec.t[0]) * ((k as f64 * A) % 1.0);
        let x = spec.x[0] + (spec.x[1] - spec.x[0]) * ((k as f64 * B) % 1.0);
        if shocks.iter().all(|&(x0, s)| (x - x0 - s * t).abs() > spec.avoid_shock) {
            pts.push([t, x]);
        }
    }
    pts
}

fn write_dichotomy_csv(w: &Writer, out: &mut Outcome, d: &isokin_core::regularity::DichotomyReport) -> Result<()> {
    w.with(out, "_samples.csv", |path| {
        let mut wr = csv::Writer::from_path(path)?;
        wr.write_record(["t", "h", "hdot", "label", "jump", "rh_rho", "rh_m", "energy_residual", "kinetic_residual"])?;
        for s in &d.samples {
            let label = match s.label {
                Label::Shock => "SHOCK",
                Label::Continuous => "CONTINUOUS",
            };
            wr.write_record([
                s.t.to_string(),
                s.h.to_string(),
                s.hdot.to_string(),
                label.to_string(),
                s.jump.to_string(),
                s.rh_residual[0].to_string(),
                s.rh_residual[1].to_string(),
                s.energy_residual.to_string(),
                s.kinetic_residual.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    })
}

/// L¹ distance of the final snapshot to the exact Riemann solution.
pub fn riemann_l1(record: &SpaceTimeRecord, (sol, xj): &(RiemannSolution, f64)) -> f64 {
    let t = record.t_end();
    let dx = record.grid.dx();
    record
        .grid
        .centers()
        .iter()
        .zip(record.last().states())
        .map(|(&x, u)| u.l1_distance(&if t > 0.0 { sol.sample((x - xj) / t) } else { exact_at_zero(sol, x - xj) }) * dx)
        .sum()
}

fn exact_at_zero(sol: &RiemannSolution, d: f64) -> ConservedState {
    if d < 0.0 {
        sol.left
    } else {
        sol.right
    }
}
