//! Kinetic entropy pairs, the binned dissipation measure μ and the local
//! TV ratio check.
//!
//! Pairing the kinetic equation with `g(v) = (v − v0)_+` gives
//! `∂_t ∫g f + ∂_x ∫v g f = −μ(·, v0)`, so the collapse drop of the hinge
//! integral in a cell and step is the μ-density at `v0` there. Bins in `v0`
//! use the bin-averaged hinge so the bins sum exactly to the energy drop.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::solver::{intervals, neighbours, SchemeKind, SpaceTimeRecord};
use crate::state::ConservedState;
use crate::velocity::{interval_integral, Kernel, Weight};

/// Entropy pair generated by a convex velocity kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "v0", rename_all = "lowercase")]
pub enum EntropyPair {
    /// g = v²/2
    Energy,
    /// g = (v − v0)_+
    Plus(f64),
    /// g = (v − v0)_-
    Minus(f64),
}

impl EntropyPair {
    pub fn kernel(self) -> Kernel {
        match self {
            EntropyPair::Energy => Kernel::Energy,
            EntropyPair::Plus(v0) => Kernel::Hinge(v0),
            EntropyPair::Minus(v0) => Kernel::ReverseHinge(v0),
        }
    }
}

/// `(η, q) = (∫ g χ dv, ∫ v g χ dv)`; vacuum gives `(0, 0)`.
pub fn entropy_eval(pair: EntropyPair, u: &ConservedState) -> (f64, f64) {
    if u.rho <= 0.0 {
        return (0.0, 0.0);
    }
    let v = u.m / u.rho;
    let (a, b) = (v - 0.5 * u.rho, v + 0.5 * u.rho);
    let k = pair.kernel();
    (interval_integral(a, b, k, Weight::One), interval_integral(a, b, k, Weight::Velocity))
}

/// Binning of μ over `(t, x, v0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationBins {
    pub t_bins: usize,
    pub x_bins: usize,
    pub v_bins: usize,
}

impl Default for DissipationBins {
    fn default() -> Self {
        Self { t_bins: 16, x_bins: 64, v_bins: 64 }
    }
}

/// Nonnegative μ-mass estimates on a `(t, x, v0)` grid of bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationField {
    pub t_edges: Vec<f64>,
    pub x_edges: Vec<f64>,
    pub v_edges: Vec<f64>,
    /// Flattened `[t][x][v]`.
    pub mass: Vec<f64>,
    /// Total μ-mass produced in each solver step.
    pub step_mass: Vec<f64>,
}

/// Summary written next to the CSV export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationSummary {
    pub t_bins: usize,
    pub x_bins: usize,
    pub v_bins: usize,
    pub t_range: [f64; 2],
    pub x_range: [f64; 2],
    pub v_range: [f64; 2],
    pub total_mass: f64,
    pub min_bin: f64,
    pub mass_outside_support: f64,
}

fn edges(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

fn bin_of(edges: &[f64], x: f64) -> usize {
    let n = edges.len() - 1;
    let w = (edges[n] - edges[0]) / n as f64;
    (((x - edges[0]) / w).floor().max(0.0) as usize).min(n - 1)
}

impl DissipationField {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.t_edges.len() - 1, self.x_edges.len() - 1, self.v_edges.len() - 1)
    }

    pub fn get(&self, it: usize, ix: usize, iv: usize) -> f64 {
        let (_, nx, nv) = self.dims();
        self.mass[(it * nx + ix) * nv + iv]
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn min_bin(&self) -> f64 {
        self.mass.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Mass per v0 bin summed over t and x.
    pub fn velocity_marginal(&self) -> Vec<f64> {
        let (_, _, nv) = self.dims();
        let mut out = vec![0.0; nv];
        for (i, m) in self.mass.iter().enumerate() {
            out[i % nv] += m;
        }
        out
    }

    pub fn summary(&self) -> DissipationSummary {
        let (nt, nx, nv) = self.dims();
        DissipationSummary {
            t_bins: nt,
            x_bins: nx,
            v_bins: nv,
            t_range: [self.t_edges[0], self.t_edges[nt]],
            x_range: [self.x_edges[0], self.x_edges[nx]],
            v_range: [self.v_edges[0], self.v_edges[nv]],
            total_mass: self.total(),
            min_bin: self.min_bin(),
            // bins span exactly [−L, L]
            mass_outside_support: 0.0,
        }
    }

    /// CSV `t_bin, x_bin, v0, mass` with bin centres.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t_bin", "x_bin", "v0", "mass"])?;
        let (nt, nx, nv) = self.dims();
        let mid = |e: &[f64], i: usize| 0.5 * (e[i] + e[i + 1]);
        for it in 0..nt {
            for ix in 0..nx {
                for iv in 0..nv {
                    w.write_record(&[
                        mid(&self.t_edges, it).to_string(),
                        mid(&self.x_edges, ix).to_string(),
                        mid(&self.v_edges, iv).to_string(),
                        self.get(it, ix, iv).to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, &self.summary())?;
        writeln!(f)?;
        Ok(())
    }
}

fn require_collapse_history(record: &SpaceTimeRecord) -> Result<()> {
    if record.scheme != SchemeKind::Kinetic {
        return Err(Error::UnsupportedScheme(format!(
            "dissipation estimates need a kinetic run, record was produced by the {} scheme",
            record.scheme.name()
        )));
    }
    if record.stride != 1 {
        return Err(Error::Config(format!(
            "dissipation estimates need every step stored (stride 1), record has stride {}",
            record.stride
        )));
    }
    Ok(())
}

/// `∫_{max(a,w)}^{b} wt(v) (v − w)²/2 dv` for `wt` ∈ {1, v₊, v₋}.
fn tail_term(a: f64, b: f64, wt: Weight, w: f64) -> f64 {
    // antiderivatives in s = v − w
    let cube = |s: f64| s * s * s / 6.0;
    let first = |s: f64| s * s * s * s / 8.0 + w * s * s * s / 6.0;
    match wt {
        Weight::One => {
            let c = a.max(w);
            if b > c { cube(b - w) - cube(c - w) } else { 0.0 }
        }
        Weight::Positive => {
            let c = a.max(w).max(0.0);
            if b > c { first(b - w) - first(c - w) } else { 0.0 }
        }
        Weight::Negative => {
            let (c, e) = (a.max(w), b.min(0.0));
            if e > c { first(c - w) - first(e - w) } else { 0.0 }
        }
        Weight::Velocity => unreachable!("velocity weight is split into its two halves"),
    }
}

/// Pre-collapse density minus post-collapse indicator in one cell, as
/// weighted pieces `(a, b, weight, coefficient)`.
type Pieces = [((f64, f64), Weight, f64); 6];

fn cell_pieces(grid: &crate::state::Grid1D, old: &[(f64, f64)], new: &[(f64, f64)], j: usize, nu: f64) -> Pieces {
    let (l, r) = neighbours(grid, j);
    [
        (old[j], Weight::One, 1.0),
        (old[j], Weight::Positive, -nu),
        (old[j], Weight::Negative, -nu),
        (old[l], Weight::Positive, nu),
        (old[r], Weight::Negative, nu),
        (new[j], Weight::One, -1.0),
    ]
}

/// `T(w) = ∫_{v>w} d(v) (v − w)²/2 dv`; the drop of `BinHinge(lo, hi)` is
/// `T(lo) − T(hi)` because `T′(w) = −∫ d (v − w)₊`.
fn tail(pieces: &Pieces, w: f64) -> f64 {
    pieces.iter().map(|&((a, b), wt, c)| c * tail_term(a, b, wt, w)).sum()
}

/// Collapse drops of the bins `[edges[q], edges[q+1]]` in every cell between
/// snapshots `n` and `n+1`.
fn step_drops(record: &SpaceTimeRecord, n: usize, edges: &[f64], mut sink: impl FnMut(usize, usize, f64)) {
    let grid = &record.grid;
    let old = intervals(&record.snapshots[n]);
    let new = intervals(&record.snapshots[n + 1]);
    let nu = (record.times[n + 1] - record.times[n]) / grid.dx();
    let mut t = vec![0.0; edges.len()];
    for j in 0..grid.n_cells {
        let pieces = cell_pieces(grid, &old, &new, j, nu);
        for (tq, &w) in t.iter_mut().zip(edges) {
            *tq = tail(&pieces, w);
        }
        for q in 0..edges.len() - 1 {
            sink(j, q, t[q] - t[q + 1]);
        }
    }
}

/// Bin the collapse dissipation of a kinetic run into a [`DissipationField`]
/// with v0 bins spanning `[−L, L]`.
pub fn mu_estimate(record: &SpaceTimeRecord, bins: &DissipationBins) -> Result<DissipationField> {
    require_collapse_history(record)?;
    if bins.t_bins == 0 || bins.x_bins == 0 || bins.v_bins == 0 {
        return Err(Error::Config("dissipation bins must be positive".into()));
    }
    let l = record.velocity_bound;
    let t_edges = edges(record.t_start(), record.t_end().max(record.t_start() + f64::MIN_POSITIVE), bins.t_bins);
    let x_edges = edges(record.grid.x_min, record.grid.x_max, bins.x_bins);
    let v_edges = edges(-l, l, bins.v_bins);
    let dx = record.grid.dx();
    let steps = record.times.len() - 1;
    let (nx, nv) = (bins.x_bins, bins.v_bins);
    let cell_bin: Vec<usize> = (0..record.grid.n_cells).map(|j| bin_of(&x_edges, record.grid.center(j))).collect();

    // Each step is reduced on its own; steps are combined in order afterwards.
    let per_step: Vec<(usize, Vec<f64>)> = (0..steps)
        .into_par_iter()
        .map(|n| {
            let tmid = 0.5 * (record.times[n] + record.times[n + 1]);
            let mut slab = vec![0.0; nx * nv];
            step_drops(record, n, &v_edges, |j, q, d| slab[cell_bin[j] * nv + q] += d * dx);
            (bin_of(&t_edges, tmid), slab)
        })
        .collect();

    let mut mass = vec![0.0; bins.t_bins * nx * nv];
    let mut step_mass = Vec::with_capacity(steps);
    for (it, slab) in per_step {
        step_mass.push(slab.iter().sum());
        for (dst, src) in mass[it * nx * nv..(it + 1) * nx * nv].iter_mut().zip(&slab) {
            *dst += src;
        }
    }
    Ok(DissipationField { t_edges, x_edges, v_edges, mass, step_mass })
}

/// Which half-line of velocities the TV bound is taken over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HalfLine {
    /// `(−∞, a]` against `∫_{−L}^{a} f dv`.
    Below,
    /// `[a, ∞)` against `∫_{a}^{L} f dv`.
    Above,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvBoundReport {
    pub center: [f64; 2],
    pub r: f64,
    pub big_r: f64,
    pub a: f64,
    pub side: HalfLine,
    /// μ(B_r × half-line).
    pub numerator: f64,
    /// ∫_{B_R} ∫_{half-line ∩ [−L, L]} f dv dx dt.
    pub denominator: f64,
    /// numerator · (R − r) / denominator, 0 when both vanish.
    pub ratio: f64,
}

fn in_ball(center: [f64; 2], radius: f64, t: f64, x: f64) -> bool {
    let (dt, dx) = (t - center[0], x - center[1]);
    dt * dt + dx * dx <= radius * radius
}

/// Local TV ratio `μ(B_r × (−∞, a]) (R − r) / ∫_{B_R} ∫_{−L}^{a} f`
/// (or the mirrored `[a, ∞)` version) on space-time balls centred at
/// `center = (t, x)`.
pub fn tv_bound_check(record: &SpaceTimeRecord, center: [f64; 2], r: f64, big_r: f64, a: f64, side: HalfLine) -> Result<TvBoundReport> {
    require_collapse_history(record)?;
    if !(r > 0.0 && big_r > r) {
        return Err(Error::Geometry(format!("need 0 < r < R, got r = {r}, R = {big_r}")));
    }
    let [tc, xc] = center;
    let g = &record.grid;
    if tc - big_r < record.t_start() || tc + big_r > record.t_end() || !g.contains_window(xc - big_r, xc + big_r) {
        return Err(Error::Geometry(format!(
            "ball of radius {big_r} around (t, x) = ({tc}, {xc}) leaves the record"
        )));
    }
    let l = record.velocity_bound;
    let (lo, hi) = match side {
        HalfLine::Below => (-l, a),
        HalfLine::Above => (a, l),
    };
    let bin = [lo.clamp(-l, l), hi.clamp(-l, l)];
    let dx = g.dx();
    let centers = g.centers();
    let span = |x: f64| -> f64 {
        // periodic grids measure distance to the nearest image
        match g.boundary {
            crate::state::Boundary::Periodic => {
                let len = g.length();
                xc + (x - xc + 0.5 * len).rem_euclid(len) - 0.5 * len
            }
            crate::state::Boundary::Outflow => x,
        }
    };
    let steps = record.times.len() - 1;

    let numerator: f64 = (0..steps)
        .into_par_iter()
        .map(|n| {
            let tmid = 0.5 * (record.times[n] + record.times[n + 1]);
            if (tmid - tc).abs() > r {
                return 0.0;
            }
            let mut acc = 0.0;
            step_drops(record, n, &bin, |j, _, d| {
                if in_ball(center, r, tmid, span(centers[j])) {
                    acc += d * dx;
                }
            });
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();

    let mut denominator = 0.0;
    for n in 0..steps {
        let t = record.times[n];
        let dt = record.times[n + 1] - t;
        if (t - tc).abs() > big_r {
            continue;
        }
        let iv = intervals(&record.snapshots[n]);
        for (j, &(l1, l2)) in iv.iter().enumerate() {
            if in_ball(center, big_r, t, span(centers[j])) {
                denominator += (l2.min(hi) - l1.max(lo)).max(0.0) * dx * dt;
            }
        }
    }
    let ratio = if denominator > 0.0 {
        numerator * (big_r - r) / denominator
    } else if numerator.abs() <= 1e-14 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(TvBoundReport { center, r, big_r, a, side, numerator, denominator, ratio })
}
