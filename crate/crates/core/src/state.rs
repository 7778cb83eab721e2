//! Grid, conserved and invariant state representations, and the exact
//! χ-interval kinetic representation.
//!
//! For γ = 3 the kinetic density is `f(t, x, v) = χ_[λ1, λ2](v)` with
//! `λ1,2 = m/ρ ∓ ρ/2`, so its moments are closed-form polynomials in the
//! interval endpoints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Densities at or below this value are treated as vacuum.
pub const DEFAULT_VACUUM_FLOOR: f64 = 1e-12;

/// Margin applied to the initial velocity support when choosing `L`.
pub const VELOCITY_BOUND_MARGIN: f64 = 1.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Outflow,
}

/// Uniform 1-D grid of `n_cells` cells on `[x_min, x_max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
    pub boundary: Boundary,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize, boundary: Boundary) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::Config(format!("grid needs at least 2 cells, got {n_cells}")));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::Config(format!("grid bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]")));
        }
        Ok(Self { x_min, x_max, n_cells, boundary })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    /// Cell containing `x`. Periodic grids wrap; outflow grids return `None`
    /// outside `[x_min, x_max]`.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        let xi = match self.boundary {
            Boundary::Periodic => {
                let len = self.length();
                self.x_min + (x - self.x_min).rem_euclid(len)
            }
            Boundary::Outflow => {
                if x < self.x_min || x > self.x_max {
                    return None;
                }
                x
            }
        };
        let i = ((xi - self.x_min) / self.dx()).floor() as isize;
        Some(i.clamp(0, self.n_cells as isize - 1) as usize)
    }

    /// Whether `[lo, hi]` is a valid spatial window (always true for periodic grids).
    pub fn contains_window(&self, lo: f64, hi: f64) -> bool {
        match self.boundary {
            Boundary::Periodic => hi - lo <= self.length(),
            Boundary::Outflow => lo >= self.x_min && hi <= self.x_max,
        }
    }
}

/// A single state `u = (ρ, m)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct ConservedState {
    pub rho: f64,
    pub m: f64,
}

impl ConservedState {
    pub const fn new(rho: f64, m: f64) -> Self {
        Self { rho, m }
    }

    pub fn from_velocity(rho: f64, u: f64) -> Self {
        Self { rho, m: rho * u }
    }

    pub fn is_vacuum(&self, floor: f64) -> bool {
        self.rho <= floor
    }

    /// m/ρ, zero at vacuum.
    pub fn velocity(&self) -> f64 {
        if self.rho > 0.0 {
            self.m / self.rho
        } else {
            0.0
        }
    }

    /// Physical flux `(m, m²/ρ + ρ³/12)`.
    pub fn flux(&self) -> [f64; 2] {
        if self.rho <= 0.0 {
            return [0.0, 0.0];
        }
        [self.m, self.m * self.m / self.rho + self.rho.powi(3) / 12.0]
    }

    pub fn invariants(&self) -> Result<(f64, f64)> {
        riemann_invariants(self.rho, self.m)
    }

    /// `|Δρ| + |Δm|`.
    pub fn l1_distance(&self, other: &ConservedState) -> f64 {
        (self.rho - other.rho).abs() + (self.m - other.m).abs()
    }

    pub fn scale(&self, s: f64) -> ConservedState {
        ConservedState::new(self.rho * s, self.m * s)
    }

    pub fn add(&self, o: &ConservedState) -> ConservedState {
        ConservedState::new(self.rho + o.rho, self.m + o.m)
    }

    pub fn sub(&self, o: &ConservedState) -> ConservedState {
        ConservedState::new(self.rho - o.rho, self.m - o.m)
    }

    /// Mirror `m → −m`, which swaps the two wave families.
    pub fn mirrored(&self) -> ConservedState {
        ConservedState::new(self.rho, -self.m)
    }
}

/// `(λ1, λ2) = (m/ρ − ρ/2, m/ρ + ρ/2)`, with the default vacuum floor.
pub fn riemann_invariants(rho: f64, m: f64) -> Result<(f64, f64)> {
    riemann_invariants_with_floor(rho, m, DEFAULT_VACUUM_FLOOR)
}

pub fn riemann_invariants_with_floor(rho: f64, m: f64, floor: f64) -> Result<(f64, f64)> {
    if !(rho > floor) {
        return Err(Error::Vacuum { rho, floor });
    }
    let u = m / rho;
    Ok((u - 0.5 * rho, u + 0.5 * rho))
}

/// `ρ = λ2 − λ1`, `m = (λ2² − λ1²)/2`.
pub fn from_invariants(lambda1: f64, lambda2: f64) -> Result<ConservedState> {
    if lambda1 > lambda2 {
        return Err(Error::Ordering { lambda1, lambda2 });
    }
    let rho = lambda2 - lambda1;
    Ok(ConservedState::new(rho, 0.5 * rho * (lambda1 + lambda2)))
}

/// Per-cell conserved field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservedField {
    pub rho: Vec<f64>,
    pub m: Vec<f64>,
}

impl ConservedField {
    pub fn new(rho: Vec<f64>, m: Vec<f64>) -> Result<Self> {
        let f = Self { rho, m };
        f.validate()?;
        Ok(f)
    }

    pub fn from_states(states: impl IntoIterator<Item = ConservedState>) -> Self {
        let (rho, m) = states.into_iter().map(|s| (s.rho, s.m)).unzip();
        Self { rho, m }
    }

    pub fn constant(n: usize, state: ConservedState) -> Self {
        Self { rho: vec![state.rho; n], m: vec![state.m; n] }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn state(&self, i: usize) -> ConservedState {
        ConservedState::new(self.rho[i], self.m[i])
    }

    pub fn states(&self) -> impl Iterator<Item = ConservedState> + '_ {
        self.rho.iter().zip(&self.m).map(|(&r, &m)| ConservedState::new(r, m))
    }

    /// ρ ≥ 0, finite values, and no momentum in exact vacuum.
    pub fn validate(&self) -> Result<()> {
        if self.rho.len() != self.m.len() {
            return Err(Error::InvalidData(format!(
                "rho has {} cells but m has {}",
                self.rho.len(),
                self.m.len()
            )));
        }
        for (i, (&r, &m)) in self.rho.iter().zip(&self.m).enumerate() {
            if !r.is_finite() || !m.is_finite() {
                return Err(Error::InvalidData(format!("non-finite value in cell {i}")));
            }
            if r < 0.0 {
                return Err(Error::InvalidData(format!("negative density {r} in cell {i}")));
            }
            if r == 0.0 && m != 0.0 {
                return Err(Error::InvalidData(format!("vacuum cell {i} carries momentum {m}")));
            }
        }
        Ok(())
    }

    /// `(Σ ρ dx, Σ m dx)`.
    pub fn totals(&self, dx: f64) -> (f64, f64) {
        (self.rho.iter().sum::<f64>() * dx, self.m.iter().sum::<f64>() * dx)
    }

    /// Minimum λ1 and maximum λ2 over non-vacuum cells.
    pub fn invariant_range(&self, floor: f64) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in self.states() {
            if let Ok((l1, l2)) = riemann_invariants_with_floor(s.rho, s.m, floor) {
                lo = lo.min(l1);
                hi = hi.max(l2);
            }
        }
        (lo <= hi).then_some((lo, hi))
    }
}

/// The cell's kinetic density `χ_[λ1, λ2](v)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticInterval {
    pub lambda1: f64,
    pub lambda2: f64,
}

/// `(ρ, m, e2) = (∫χ dv, ∫vχ dv, ∫v²χ dv)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub rho: f64,
    pub m: f64,
    pub e2: f64,
}

impl KineticInterval {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        if lambda1 > lambda2 {
            return Err(Error::Ordering { lambda1, lambda2 });
        }
        Ok(Self { lambda1, lambda2 })
    }

    /// Interval of a state; vacuum-level densities give a (near) empty
    /// interval centred at the cell velocity.
    pub fn from_state(s: ConservedState) -> Self {
        let u = s.velocity();
        let h = 0.5 * s.rho.max(0.0);
        Self { lambda1: u - h, lambda2: u + h }
    }

    pub fn width(&self) -> f64 {
        self.lambda2 - self.lambda1
    }

    pub fn moments(&self) -> Moments {
        kinetic_moments(self)
    }

    pub fn within(&self, bound: f64) -> bool {
        self.lambda1 >= -bound && self.lambda2 <= bound
    }
}

/// Closed-form velocity moments of χ_[λ1, λ2].
pub fn kinetic_moments(iv: &KineticInterval) -> Moments {
    let (a, b) = (iv.lambda1, iv.lambda2);
    let rho = (b - a).max(0.0);
    Moments {
        rho,
        m: 0.5 * rho * (a + b),
        e2: rho * (a * a + a * b + b * b) / 3.0,
    }
}

/// Global bounds on a field: Γ ≥ ‖ρ‖∞ + ‖m/ρ‖∞, the density floor `M`
/// and the velocity support bound `L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateBounds {
    pub gamma: f64,
    pub min_density: f64,
    pub velocity_bound: f64,
}

impl StateBounds {
    pub fn from_field(field: &ConservedField, floor: f64) -> Self {
        let mut rho_max: f64 = 0.0;
        let mut u_max: f64 = 0.0;
        let mut rho_min = f64::INFINITY;
        let mut lmax: f64 = 0.0;
        for s in field.states() {
            rho_max = rho_max.max(s.rho);
            rho_min = rho_min.min(s.rho);
            if s.rho > floor {
                let u = s.m / s.rho;
                u_max = u_max.max(u.abs());
                lmax = lmax.max((u - 0.5 * s.rho).abs()).max((u + 0.5 * s.rho).abs());
            }
        }
        Self {
            gamma: rho_max + u_max,
            min_density: if rho_min.is_finite() { rho_min.max(0.0) } else { 0.0 },
            velocity_bound: (lmax * VELOCITY_BOUND_MARGIN).max(f64::MIN_POSITIVE),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn invariants_examples() {
        assert_eq!(riemann_invariants(2.0, 2.0).unwrap(), (0.0, 2.0));
        assert_eq!(riemann_invariants(2.0, 0.0).unwrap(), (-1.0, 1.0));
        assert_eq!(riemann_invariants(1.0, 0.0).unwrap(), (-0.5, 0.5));
    }

    #[test]
    fn invariants_reject_vacuum() {
        assert!(matches!(riemann_invariants(0.0, 0.0), Err(Error::Vacuum { .. })));
        assert!(matches!(riemann_invariants(1e-13, 0.0), Err(Error::Vacuum { .. })));
        assert!(matches!(riemann_invariants_with_floor(1e-3, 0.0, 1e-2), Err(Error::Vacuum { .. })));
    }

    #[test]
    fn from_invariants_examples() {
        assert_eq!(from_invariants(-1.0, 1.0).unwrap(), ConservedState::new(2.0, 0.0));
        assert_eq!(from_invariants(0.0, 2.0).unwrap(), ConservedState::new(2.0, 2.0));
        assert_eq!(from_invariants(0.7, 0.7).unwrap(), ConservedState::new(0.0, 0.0));
        assert!(matches!(from_invariants(1.0, 0.0), Err(Error::Ordering { .. })));
    }

    #[test]
    fn moments_examples() {
        let m = kinetic_moments(&KineticInterval::new(0.0, 2.0).unwrap());
        assert_eq!((m.rho, m.m), (2.0, 2.0));
        assert!((m.e2 - 8.0 / 3.0).abs() < 1e-15);
        assert!((2.0f64.powi(2) / 2.0 + 2.0f64.powi(3) / 12.0 - 8.0 / 3.0).abs() < 1e-15);

        let m = kinetic_moments(&KineticInterval::new(-1.0, 1.0).unwrap());
        assert_eq!((m.rho, m.m), (2.0, 0.0));
        assert!((m.e2 - 2.0 / 3.0).abs() < 1e-15);

        let m = kinetic_moments(&KineticInterval::new(0.3, 0.3).unwrap());
        assert_eq!((m.rho, m.m, m.e2), (0.0, 0.0, 0.0));
    }

    #[test]
    fn grid_cell_lookup() {
        let g = Grid1D::new(0.0, 1.0, 10, Boundary::Periodic).unwrap();
        assert_eq!(g.cell_of(0.05), Some(0));
        assert_eq!(g.cell_of(1.05), Some(0));
        assert_eq!(g.cell_of(-0.05), Some(9));
        let g = Grid1D::new(0.0, 1.0, 10, Boundary::Outflow).unwrap();
        assert_eq!(g.cell_of(-0.05), None);
        assert_eq!(g.cell_of(1.0), Some(9));
        assert!(Grid1D::new(0.0, 1.0, 1, Boundary::Outflow).is_err());
        assert!(Grid1D::new(1.0, 1.0, 4, Boundary::Outflow).is_err());
    }

    #[test]
    fn field_validation() {
        assert!(ConservedField::new(vec![1.0, -0.1], vec![0.0, 0.0]).is_err());
        assert!(ConservedField::new(vec![1.0, 0.0], vec![0.0, 0.5]).is_err());
        assert!(ConservedField::new(vec![1.0, f64::NAN], vec![0.0, 0.0]).is_err());
        assert!(ConservedField::new(vec![1.0, 0.0], vec![0.3, 0.0]).is_ok());
    }

    #[test]
    fn bounds_default_margin() {
        let f = ConservedField::from_states([ConservedState::new(2.0, 0.0), ConservedState::new(1.0, 1.0)]);
        let b = StateBounds::from_field(&f, DEFAULT_VACUUM_FLOOR);
        assert!((b.velocity_bound - 1.5 * 1.05).abs() < 1e-14);
        assert_eq!(b.min_density, 1.0);
        assert_eq!(b.gamma, 3.0);
    }

    proptest! {
        #[test]
        fn round_trip(rho in 1e-6f64..10.0, u in -10.0f64..10.0) {
            let m = rho * u;
            let (l1, l2) = riemann_invariants(rho, m).unwrap();
            prop_assert!(l1 < l2);
            let back = from_invariants(l1, l2).unwrap();
            prop_assert!((back.rho - rho).abs() <= 1e-12 * rho.max(1.0) + 4.0 * f64::EPSILON * u.abs());
            prop_assert!((back.m - m).abs() <= 1e-12 * m.abs().max(1.0) + 4.0 * f64::EPSILON * u.abs() * u.abs());
        }

        #[test]
        fn moment_flux_identity(a in -10.0f64..10.0, w in 0.0f64..10.0) {
            let iv = KineticInterval::new(a, a + w).unwrap();
            let mo = kinetic_moments(&iv);
            prop_assume!(mo.rho > 0.0);
            let flux = mo.m * mo.m / mo.rho + mo.rho.powi(3) / 12.0;
            prop_assert!((mo.e2 - flux).abs() <= 1e-12 * mo.e2.max(1.0));
        }
    }
}
