//! TOML run configuration.
//!
//! Every table rejects unknown keys. Parse errors carry the line and column
//! of the offending key and, for misspelled names, the closest valid one.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use isokin_core::characteristics::{CharacteristicParams, Family};
use isokin_core::entropy::HalfLine;
use isokin_core::regularity::{
    alpha_from_theta, BlowupParams, CutHeight, DeGiorgiParams, DichotomyParams, Direction, Label, SemicontParams, TraceParams, THETA,
};
use isokin_core::solver::{SchemeConfig, SchemeKind};
use isokin_core::state::{Boundary, ConservedState, Grid1D, DEFAULT_VACUUM_FLOOR};

use crate::error::{CliError, Result};

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Seed of randomized presets; batch member `k` uses `seed + k`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub batch: usize,
    pub grid: GridConfig,
    #[serde(default)]
    pub scheme: SchemeSection,
    pub initial: Preset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub x_min: f64,
    #[serde(default = "unit")]
    pub x_max: f64,
    pub cells: usize,
    #[serde(default)]
    pub boundary: Boundary,
}

fn unit() -> f64 {
    1.0
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid1D> {
        Ok(Grid1D::new(self.x_min, self.x_max, self.cells, self.boundary)?)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.cells as f64
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.x_min + self.x_max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    #[serde(default)]
    pub kind: SchemeKind,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default = "default_floor")]
    pub vacuum_floor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity_bound: Option<f64>,
}

fn default_cfl() -> f64 {
    0.5
}
fn default_t_end() -> f64 {
    0.1
}
fn default_floor() -> f64 {
    DEFAULT_VACUUM_FLOOR
}

impl Default for SchemeSection {
    fn default() -> Self {
        Self {
            kind: SchemeKind::Kinetic,
            cfl: default_cfl(),
            t_end: default_t_end(),
            stride: 1,
            vacuum_floor: default_floor(),
            velocity_bound: None,
        }
    }
}

impl SchemeSection {
    pub fn build(&self) -> SchemeConfig {
        SchemeConfig {
            scheme: self.kind,
            cfl: self.cfl,
            t_end: self.t_end,
            stride: self.stride,
            vacuum_floor: self.vacuum_floor,
            velocity_bound: self.velocity_bound,
        }
    }
}

/// A state given as `{ rho, m }` or `{ rho, u }`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub rho: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
}

impl StateSpec {
    pub fn state(&self) -> ConservedState {
        match (self.m, self.u) {
            (Some(m), _) => ConservedState::new(self.rho, m),
            (None, Some(u)) => ConservedState::from_velocity(self.rho, u),
            (None, None) => ConservedState::new(self.rho, 0.0),
        }
    }

    fn check(&self, key: &str, errors: &mut Vec<String>) {
        if !(self.rho.is_finite() && self.rho >= 0.0) {
            errors.push(format!("{key}.rho = {}: density must be finite and >= 0", self.rho));
        }
        if self.m.is_some() && self.u.is_some() {
            errors.push(format!("{key}: give either m or u, not both"));
        }
        if self.m.is_some_and(|m| !m.is_finite()) || self.u.is_some_and(|u| !u.is_finite()) {
            errors.push(format!("{key}: non-finite momentum or velocity"));
        }
        if self.rho == 0.0 && self.m.is_some_and(|m| m != 0.0) {
            errors.push(format!("{key}: vacuum state must have m = 0"));
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    /// Two constant states separated at `x0` (default: domain midpoint).
    Riemann {
        left: StateSpec,
        right: StateSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<f64>,
    },
    /// `ρ = rho0 + amplitude · sin(2π waves (x − x_min)/length)`, velocity constant.
    SmoothSine {
        #[serde(default = "unit")]
        rho0: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default)]
        velocity: f64,
        #[serde(default = "one")]
        waves: usize,
    },
    /// Colliding flows `±speed` meeting at `x0`; emits a 1-shock and a 2-shock.
    ShockPair {
        #[serde(default = "unit")]
        rho: f64,
        #[serde(default = "default_pair_speed")]
        speed: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<f64>,
    },
    /// Piecewise-constant random data drawn from the run seed.
    RandomLinfty {
        #[serde(default = "default_pieces")]
        pieces: usize,
        #[serde(default = "default_rho_range")]
        rho: [f64; 2],
        #[serde(default = "default_velocity_range")]
        velocity: [f64; 2],
    },
    Constant {
        state: StateSpec,
    },
    /// `λ1` lowered (or `λ2` raised) by a `cos²` bump around a constant base.
    Bump {
        base: StateSpec,
        amplitude: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<f64>,
        #[serde(default = "default_bump_width")]
        width: f64,
        #[serde(default = "default_direction")]
        direction: Direction,
    },
}

fn default_amplitude() -> f64 {
    0.1
}
fn default_pair_speed() -> f64 {
    0.5
}
fn default_pieces() -> usize {
    16
}
fn default_rho_range() -> [f64; 2] {
    [0.5, 2.0]
}
fn default_velocity_range() -> [f64; 2] {
    [-0.5, 0.5]
}
fn default_bump_width() -> f64 {
    0.2
}
fn default_direction() -> Direction {
    Direction::BelowLambda1
}

impl Preset {
    pub fn id(&self) -> &'static str {
        match self {
            Preset::Riemann { .. } => "riemann",
            Preset::SmoothSine { .. } => "smooth_sine",
            Preset::ShockPair { .. } => "shock_pair",
            Preset::RandomLinfty { .. } => "random_linfty",
            Preset::Constant { .. } => "constant",
            Preset::Bump { .. } => "bump",
        }
    }
}

/// Optional `StateBounds` the initial data must respect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    /// Bound on `‖ρ‖∞ + ‖m/ρ‖∞`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Lower density bound `M`.
    #[serde(default)]
    pub min_density: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Dotted key of the varied parameter, e.g. `grid.cells`.
    pub axis: String,
    pub values: Vec<toml::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSpec>,
}

/// Log-log slope of metric `y` against `x` (`value`, `dx` or a metric name).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    #[serde(default = "default_fit_x")]
    pub x: String,
    pub y: String,
}

fn default_fit_x() -> String {
    "value".into()
}

/// Line `x = x0 + speed (t − t0)` sampled on the record times in
/// `[t_from, t_to]`, or the exact shock of a Riemann preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    /// Follow the exact shock of this family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shock: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default)]
    pub speed: f64,
    #[serde(default)]
    pub t0: f64,
    #[serde(default)]
    pub t_from: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_to: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder_top: Option<f64>,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_levels() -> usize {
    6
}
fn default_tol() -> f64 {
    5e-2
}

impl Default for TraceSpec {
    fn default() -> Self {
        Self { band: None, ladder_top: None, levels: default_levels(), floor: None, tol: default_tol() }
    }
}

impl TraceSpec {
    pub fn params(&self) -> TraceParams {
        TraceParams { band: self.band, ladder_top: self.ladder_top, levels: self.levels, floor: self.floor, tol: self.tol }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DichotomySpec {
    #[serde(default = "default_tol")]
    pub jump_tol: f64,
    #[serde(default = "default_tol")]
    pub entropy_tol: f64,
    #[serde(default = "default_kinetic_samples")]
    pub kinetic_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing_eps: Option<Vec<f64>>,
    #[serde(default = "default_pairing_tol")]
    pub pairing_tol: f64,
    #[serde(default = "default_nodes")]
    pub quadrature_nodes: usize,
}

fn default_kinetic_samples() -> usize {
    9
}
fn default_pairing_tol() -> f64 {
    0.1
}
fn default_nodes() -> usize {
    24
}

impl Default for DichotomySpec {
    fn default() -> Self {
        Self {
            jump_tol: default_tol(),
            entropy_tol: default_tol(),
            kinetic_samples: default_kinetic_samples(),
            pairing_eps: None,
            pairing_tol: default_pairing_tol(),
            quadrature_nodes: default_nodes(),
        }
    }
}

impl DichotomySpec {
    pub fn params(&self) -> DichotomyParams {
        DichotomyParams {
            jump_tol: self.jump_tol,
            entropy_tol: self.entropy_tol,
            kinetic_samples: self.kinetic_samples,
            pairing_eps: self.pairing_eps.clone(),
            pairing_tol: self.pairing_tol,
            quadrature_nodes: self.quadrature_nodes,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupSpec {
    pub t0: f64,
    #[serde(default = "default_blowup_levels")]
    pub levels: usize,
    #[serde(default = "default_t_bar")]
    pub t_bar: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_blowup_levels() -> usize {
    4
}
fn default_t_bar() -> f64 {
    0.5
}
fn default_delta() -> f64 {
    0.1
}

impl BlowupSpec {
    pub fn params(&self) -> BlowupParams {
        BlowupParams { t_bar: self.t_bar, delta: self.delta, ..Default::default() }
    }
}

/// Low-discrepancy sample of `count` points in a space-time box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub count: usize,
    pub t: [f64; 2],
    pub x: [f64; 2],
    /// Skip points closer than this to an exact shock line.
    #[serde(default)]
    pub avoid_shock: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CutSpec {
    Fixed { eta: f64 },
    Power { c_tilde: f64, alpha: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeGiorgiSpec {
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_min_density")]
    pub min_density: f64,
    #[serde(default = "default_dg_levels")]
    pub levels: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut: Option<CutSpec>,
    #[serde(default = "default_truncation")]
    pub truncation_ratio: f64,
}

fn default_theta() -> f64 {
    THETA
}
fn default_min_density() -> f64 {
    0.5
}
fn default_dg_levels() -> usize {
    16
}
fn default_truncation() -> f64 {
    1e-3
}

impl Default for DeGiorgiSpec {
    fn default() -> Self {
        Self {
            theta: default_theta(),
            min_density: default_min_density(),
            levels: default_dg_levels(),
            cut: None,
            truncation_ratio: default_truncation(),
        }
    }
}

impl DeGiorgiSpec {
    pub fn params(&self) -> DeGiorgiParams {
        DeGiorgiParams {
            theta: self.theta,
            min_density: self.min_density,
            levels: self.levels,
            cut: match &self.cut {
                Some(CutSpec::Fixed { eta }) => CutHeight::Fixed { eta: *eta },
                Some(CutSpec::Power { c_tilde, alpha }) => CutHeight::Power { c_tilde: *c_tilde, alpha: *alpha },
                None => CutHeight::Power { c_tilde: 1.0, alpha: alpha_from_theta(self.theta) },
            },
            truncation_ratio: self.truncation_ratio,
        }
    }
}

fn default_half_line() -> HalfLine {
    HalfLine::Below
}
fn default_family() -> u8 {
    1
}
fn default_max_violation() -> f64 {
    0.01
}
fn default_bins_t() -> usize {
    16
}
fn default_bins_xv() -> usize {
    64
}
fn default_safety() -> f64 {
    2.0
}
fn default_target_tol() -> f64 {
    0.05
}
fn default_min_alpha() -> f64 {
    0.2
}
fn default_eps_threshold() -> f64 {
    1e-2
}
fn default_semicont_levels() -> usize {
    4
}
fn default_vmo_ratio() -> f64 {
    0.35
}
fn default_vmo_abs() -> f64 {
    1e-8
}

/// One checker request; `name` defaults to the kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Diagnostic {
    Trace {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        curve: CurveSpec,
        #[serde(default)]
        trace: TraceSpec,
        /// With a Riemann preset: required closeness of both traces to the exact states.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        oracle_tol: Option<f64>,
    },
    Rh {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        curve: CurveSpec,
        #[serde(default)]
        trace: TraceSpec,
        #[serde(default)]
        dichotomy: DichotomySpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<Label>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        blowup: Option<BlowupSpec>,
    },
    Semicont {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        points: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sample: Option<SampleSpec>,
        /// Points placed on exact shock lines; each must come out non-VMO.
        #[serde(default)]
        shock_points: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r0: Option<f64>,
        #[serde(default = "default_semicont_levels")]
        levels: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
        #[serde(default = "default_vmo_abs")]
        vmo_abs_tol: f64,
        #[serde(default = "default_vmo_ratio")]
        vmo_ratio: f64,
    },
    Degiorgi {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        center: [f64; 2],
        radius: f64,
        /// Reference state `ū`; defaults to the base of a constant or bump preset.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference: Option<StateSpec>,
        #[serde(default = "default_direction")]
        direction: Direction,
        /// Truncation is required once `ε` is below this.
        #[serde(default = "default_eps_threshold")]
        eps_threshold: f64,
        #[serde(default)]
        params: DeGiorgiSpec,
    },
    DegiorgiFamily {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        ball_center: [f64; 2],
        ball_radius: f64,
        targets: Vec<f64>,
        #[serde(default = "default_safety")]
        safety: f64,
        #[serde(default = "default_target_tol")]
        target_tol: f64,
        #[serde(default = "default_min_alpha")]
        min_alpha: f64,
        #[serde(default)]
        params: DeGiorgiSpec,
    },
    Characteristic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        x0: f64,
        #[serde(default = "default_family")]
        family: u8,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps_ladder: Option<Vec<f64>>,
        #[serde(default = "default_nodes")]
        quadrature_nodes: usize,
        #[serde(default = "default_tol")]
        bound_tol: f64,
        #[serde(default = "default_max_violation")]
        max_violation: f64,
        /// Expected limit speed and the tolerance on the mean `|ḣ − s|` after `speed_from`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect_speed: Option<f64>,
        #[serde(default = "default_tol")]
        speed_tol: f64,
        #[serde(default)]
        speed_from: f64,
        #[serde(default)]
        trace: TraceSpec,
        #[serde(default)]
        dichotomy: DichotomySpec,
    },
    Mu {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default = "default_bins_t")]
        t_bins: usize,
        #[serde(default = "default_bins_xv")]
        x_bins: usize,
        #[serde(default = "default_bins_xv")]
        v_bins: usize,
        /// Dissipation rate is measured over steps after this time.
        #[serde(default)]
        rate_from: f64,
        /// With a Riemann preset: allowed relative gap to the shock energy bracket.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate_tol: Option<f64>,
    },
    TvBound {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        center: [f64; 2],
        r: f64,
        big_r: f64,
        a: f64,
        #[serde(default = "default_half_line")]
        side: HalfLine,
    },
}

impl Diagnostic {
    pub fn kind(&self) -> &'static str {
        match self {
            Diagnostic::Trace { .. } => "trace",
            Diagnostic::Rh { .. } => "rh",
            Diagnostic::Semicont { .. } => "semicont",
            Diagnostic::Degiorgi { .. } => "degiorgi",
            Diagnostic::DegiorgiFamily { .. } => "degiorgi_family",
            Diagnostic::Characteristic { .. } => "characteristic",
            Diagnostic::Mu { .. } => "mu",
            Diagnostic::TvBound { .. } => "tv_bound",
        }
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Diagnostic::Trace { name, .. }
            | Diagnostic::Rh { name, .. }
            | Diagnostic::Semicont { name, .. }
            | Diagnostic::Degiorgi { name, .. }
            | Diagnostic::DegiorgiFamily { name, .. }
            | Diagnostic::Characteristic { name, .. }
            | Diagnostic::Mu { name, .. }
            | Diagnostic::TvBound { name, .. } => name.as_deref(),
        }
    }

    /// Needs every step of a kinetic run.
    fn needs_collapse_history(&self) -> bool {
        matches!(self, Diagnostic::Mu { .. } | Diagnostic::TvBound { .. })
    }

    pub fn characteristic_params(&self) -> Option<(f64, Family, CharacteristicParams)> {
        if let Diagnostic::Characteristic { x0, family, sigma, eps_ladder, quadrature_nodes, bound_tol, trace, dichotomy, .. } = self {
            let family = Family::from_index(*family).ok()?;
            Some((
                *x0,
                family,
                CharacteristicParams {
                    sigma: *sigma,
                    eps_ladder: eps_ladder.clone(),
                    quadrature_nodes: *quadrature_nodes,
                    bound_tol: *bound_tol,
                    trace: trace.params(),
                    dichotomy: dichotomy.params(),
                },
            ))
        } else {
            None
        }
    }

    pub fn semicont_params(&self) -> Option<SemicontParams> {
        if let Diagnostic::Semicont { r0, levels, tol, vmo_abs_tol, vmo_ratio, .. } = self {
            Some(SemicontParams { r0: *r0, levels: *levels, tol: *tol, vmo_abs_tol: *vmo_abs_tol, vmo_ratio: *vmo_ratio })
        } else {
            None
        }
    }
}

/// Diagnostic names made unique: repeated kinds get `_2`, `_3`, ….
pub fn check_names(diags: &[Diagnostic]) -> Vec<String> {
    let mut names: Vec<String> = Vec::with_capacity(diags.len());
    for d in diags {
        let base = d.name().unwrap_or(d.kind()).to_string();
        let mut name = base.clone();
        let mut k = 2;
        while names.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        names.push(name);
    }
    names
}

impl RunConfig {
    /// Semantic checks that the schema cannot express, with key paths.
    pub fn validate(&self) -> Vec<String> {
        let mut e = Vec::new();
        let g = &self.grid;
        if g.cells < 2 {
            e.push(format!("grid.cells = {}: need at least 2 cells", g.cells));
        }
        if !(g.x_min.is_finite() && g.x_max.is_finite() && g.x_max > g.x_min) {
            e.push(format!("grid: need finite x_min < x_max, got [{}, {}]", g.x_min, g.x_max));
        }
        let s = &self.scheme;
        if !(s.cfl > 0.0 && s.cfl <= 1.0) {
            e.push(format!("scheme.cfl = {}: must lie in (0, 1]", s.cfl));
        } else if s.kind == SchemeKind::Godunov && s.cfl > 0.5 {
            e.push(format!("scheme.cfl = {}: the godunov scheme needs cfl <= 0.5", s.cfl));
        }
        if !(s.t_end.is_finite() && s.t_end >= 0.0) {
            e.push(format!("scheme.t_end = {}: must be finite and >= 0", s.t_end));
        }
        if s.stride == 0 {
            e.push("scheme.stride = 0: must be at least 1".into());
        }
        if !(s.vacuum_floor >= 0.0) {
            e.push(format!("scheme.vacuum_floor = {}: must be >= 0", s.vacuum_floor));
        }
        if s.velocity_bound.is_some_and(|l| !(l > 0.0 && l.is_finite())) {
            e.push("scheme.velocity_bound: must be positive and finite".into());
        }
        if self.batch == 0 {
            e.push("batch = 0: must be at least 1".into());
        }
        self.validate_preset(&mut e);
        if let Some(b) = &self.bounds {
            if b.gamma.is_some_and(|v| !(v > 0.0)) || !(b.min_density >= 0.0) {
                e.push("bounds: need gamma > 0 and min_density >= 0".into());
            }
            if b.gamma.is_some_and(|v| b.min_density > v) {
                e.push("bounds: min_density exceeds gamma".into());
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                e.push(format!("sweep.values: empty axis for `{}`", sw.axis));
            }
            if sw.values.iter().any(|v| v.as_float().is_some_and(|f| !f.is_finite())) {
                e.push("sweep.values: values must be finite".into());
            }
            if self.batch > 1 {
                e.push("sweep: cannot be combined with batch > 1".into());
            }
        }
        for (name, d) in check_names(&self.diagnostics).iter().zip(&self.diagnostics) {
            self.validate_diagnostic(name, d, &mut e);
        }
        e
    }

    fn validate_preset(&self, e: &mut Vec<String>) {
        match &self.initial {
            Preset::Riemann { left, right, x0 } => {
                left.check("initial.left", e);
                right.check("initial.right", e);
                if x0.is_some_and(|x| !(x > self.grid.x_min && x < self.grid.x_max)) {
                    e.push("initial.x0: must lie inside the domain".into());
                }
            }
            Preset::SmoothSine { rho0, amplitude, velocity, waves } => {
                if !(rho0 - amplitude.abs() >= 0.0) || !velocity.is_finite() {
                    e.push(format!("initial: rho0 = {rho0} with amplitude {amplitude} gives negative density"));
                }
                if *waves == 0 {
                    e.push("initial.waves: must be at least 1".into());
                }
            }
            Preset::ShockPair { rho, speed, x0 } => {
                if !(*rho > 0.0) || !(*speed >= 0.0) {
                    e.push("initial: shock_pair needs rho > 0 and speed >= 0".into());
                }
                if x0.is_some_and(|x| !(x > self.grid.x_min && x < self.grid.x_max)) {
                    e.push("initial.x0: must lie inside the domain".into());
                }
            }
            Preset::RandomLinfty { pieces, rho, velocity } => {
                if *pieces == 0 {
                    e.push("initial.pieces: must be at least 1".into());
                }
                if !(rho[0] > 0.0 && rho[0] <= rho[1]) {
                    e.push(format!("initial.rho = {rho:?}: need 0 < lo <= hi"));
                }
                if !(velocity[0] <= velocity[1]) {
                    e.push(format!("initial.velocity = {velocity:?}: need lo <= hi"));
                }
            }
            Preset::Constant { state } => state.check("initial.state", e),
            Preset::Bump { base, amplitude, width, .. } => {
                base.check("initial.base", e);
                if !(base.rho > 0.0) {
                    e.push("initial.base.rho: bump base must not be vacuum".into());
                }
                if !(*amplitude >= 0.0) || !(*width > 0.0) {
                    e.push("initial: bump needs amplitude >= 0 and width > 0".into());
                }
            }
        }
    }

    fn validate_diagnostic(&self, name: &str, d: &Diagnostic, e: &mut Vec<String>) {
        let key = format!("diagnostics.{name}");
        if d.needs_collapse_history() {
            if self.scheme.kind != SchemeKind::Kinetic {
                e.push(format!("{key}: needs the kinetic scheme"));
            }
            if self.scheme.stride != 1 {
                e.push(format!("{key}: needs scheme.stride = 1, got {}", self.scheme.stride));
            }
        }
        let curve_check = |c: &CurveSpec, e: &mut Vec<String>| {
            match (c.shock, c.x0) {
                (Some(f), _) => {
                    if !matches!(self.initial, Preset::Riemann { .. }) {
                        e.push(format!("{key}.curve.shock: needs the riemann preset"));
                    }
                    if f != 1 && f != 2 {
                        e.push(format!("{key}.curve.shock = {f}: family must be 1 or 2"));
                    }
                }
                (None, None) => e.push(format!("{key}.curve: give x0 or shock")),
                _ => {}
            }
            if c.t_to.is_some_and(|t| t <= c.t_from) {
                e.push(format!("{key}.curve: t_to must exceed t_from"));
            }
        };
        match d {
            Diagnostic::Trace { curve, .. } => curve_check(curve, e),
            Diagnostic::Rh { curve, .. } => curve_check(curve, e),
            Diagnostic::Semicont { points, sample, shock_points, .. } => {
                if points.is_empty() && sample.is_none() && *shock_points == 0 {
                    e.push(format!("{key}: give points, sample or shock_points"));
                }
                if *shock_points > 0 && !matches!(self.initial, Preset::Riemann { .. }) {
                    e.push(format!("{key}.shock_points: needs the riemann preset"));
                }
            }
            Diagnostic::Degiorgi { radius, reference, .. } => {
                if !(*radius > 0.0) {
                    e.push(format!("{key}.radius: must be positive"));
                }
                if reference.is_none() && !matches!(self.initial, Preset::Constant { .. } | Preset::Bump { .. }) {
                    e.push(format!("{key}.reference: required unless the preset is constant or bump"));
                }
            }
            Diagnostic::DegiorgiFamily { targets, ball_radius, .. } => {
                if !matches!(self.initial, Preset::Bump { .. }) {
                    e.push(format!("{key}: needs the bump preset"));
                }
                if targets.is_empty() || targets.iter().any(|t| !(*t > 0.0)) {
                    e.push(format!("{key}.targets: need positive targets"));
                }
                if !(*ball_radius > 0.0) {
                    e.push(format!("{key}.ball_radius: must be positive"));
                }
            }
            Diagnostic::Characteristic { family, .. } => {
                if *family != 1 && *family != 2 {
                    e.push(format!("{key}.family = {family}: must be 1 or 2"));
                }
            }
            Diagnostic::Mu { t_bins, x_bins, v_bins, .. } => {
                if *t_bins == 0 || *x_bins == 0 || *v_bins == 0 {
                    e.push(format!("{key}: bin counts must be positive"));
                }
            }
            Diagnostic::TvBound { r, big_r, .. } => {
                if !(*r > 0.0 && big_r > r) {
                    e.push(format!("{key}: need 0 < r < big_r"));
                }
            }
        }
    }
}

/// Parse and validate a config string; `origin` names it in messages.
pub fn parse_config_str(src: &str, origin: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(src).map_err(|err| CliError::Config {
        origin: origin.to_string(),
        errors: vec![describe_toml_error(src, &err)],
    })?;
    let errors: Vec<String> = cfg
        .validate()
        .into_iter()
        .map(|msg| match locate(src, &msg) {
            Some(line) => format!("line {line}: {msg}"),
            None => msg,
        })
        .collect();
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Config { origin: origin.to_string(), errors })
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let src = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::Usage(format!("config file {} does not exist", path.display())),
        _ => CliError::io(path, e),
    })?;
    parse_config_str(&src, &path.display().to_string())
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

fn describe_toml_error(src: &str, err: &toml::de::Error) -> String {
    let msg = err.message().trim().to_string();
    let mut out = match err.span() {
        Some(span) => {
            let (line, col) = line_col(src, span.start);
            let text = src.lines().nth(line - 1).unwrap_or("").trim();
            format!("line {line}, column {col}: {msg} (at `{text}`)")
        }
        None => msg.clone(),
    };
    if let Some(hint) = suggestion(&msg) {
        out.push_str(&format!("; did you mean `{hint}`?"));
    }
    out
}

/// Closest expected name for an `unknown field` / `unknown variant` message.
fn suggestion(msg: &str) -> Option<String> {
    let rest = msg.strip_prefix("unknown field `").or_else(|| msg.strip_prefix("unknown variant `"))?;
    let bad = &rest[..rest.find('`')?];
    let expected = &rest[rest.find("expected")?..];
    expected
        .split('`')
        .skip(1)
        .step_by(2)
        .map(|cand| (strsim::jaro_winkler(bad, cand), cand))
        .filter(|(score, _)| *score >= 0.7)
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .map(|(_, c)| c.to_string())
}

/// Line of a `table.key` mentioned at the start of a validation message.
fn locate(src: &str, msg: &str) -> Option<usize> {
    let path = msg.split([' ', ':']).next()?;
    let (table, key) = path.rsplit_once('.').unwrap_or(("", path));
    let mut current = String::new();
    for (i, line) in src.lines().enumerate() {
        let t = line.trim();
        if let Some(h) = t.strip_prefix('[') {
            current = h.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            continue;
        }
        let k = t.split('=').next().unwrap_or("").trim();
        if current == table && k == key && t.contains('=') {
            return Some(i + 1);
        }
    }
    None
}
