//! Exact Riemann solver for the γ = 3 system.
//!
//! Both characteristic fields are genuinely nonlinear and, for γ = 3, the
//! Riemann invariants coincide with the characteristic speeds: across a
//! 1-rarefaction λ2 is constant and λ1 = ξ, across a 2-rarefaction λ1 is
//! constant and λ2 = ξ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{from_invariants, ConservedState, DEFAULT_VACUUM_FLOOR};

/// Root-finder tolerance on the middle velocity.
pub const ROOT_TOLERANCE: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveKind {
    Shock,
    Rarefaction,
}

/// One elementary wave. `left`/`right` are the states on either side in
/// physical space; Lax admissibility reads `λ_i(right) ≤ s ≤ λ_i(left)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub family: u8,
    pub kind: WaveKind,
    pub speed_lo: f64,
    pub speed_hi: f64,
    pub left: ConservedState,
    pub right: ConservedState,
}

impl Wave {
    /// `s[u] − [F(u)]` for a shock (zero for rarefactions).
    pub fn rh_residual(&self) -> [f64; 2] {
        if self.kind != WaveKind::Shock {
            return [0.0, 0.0];
        }
        rh_residual(&self.left, &self.right, self.speed_lo)
    }
}

/// `s (u_r − u_l) − (F(u_r) − F(u_l))`.
pub fn rh_residual(left: &ConservedState, right: &ConservedState, s: f64) -> [f64; 2] {
    let fl = left.flux();
    let fr = right.flux();
    [
        s * (right.rho - left.rho) - (fr[0] - fl[0]),
        s * (right.m - left.m) - (fr[1] - fl[1]),
    ]
}

/// Self-similar entropy solution of a Riemann problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiemannSolution {
    pub left: ConservedState,
    pub right: ConservedState,
    /// Waves ordered by speed.
    pub waves: Vec<Wave>,
    pub star: Option<ConservedState>,
    /// Self-similar range `[ξ_lo, ξ_hi]` occupied by vacuum, if any.
    pub vacuum: Option<(f64, f64)>,
}

fn shock_factor(rho0: f64, rho: f64) -> f64 {
    ((rho * rho + rho * rho0 + rho0 * rho0) / (12.0 * rho * rho0)).sqrt()
}

fn shock_speed_offset(rho0: f64, rho: f64) -> f64 {
    (rho * (rho * rho + rho * rho0 + rho0 * rho0) / (12.0 * rho0)).sqrt()
}

/// Hugoniot state reached from `u0` at density `rho_star`.
///
/// For family 1, `u0` is the state on the left of the shock; for family 2 it
/// is the state on the right. Only the Lax-admissible (compressive) branch
/// `rho_star ≥ ρ0` exists. Returns `(m*, s)`.
pub fn hugoniot_state(u0: ConservedState, rho_star: f64, family: u8) -> Result<(f64, f64)> {
    if !(u0.rho > 0.0) || !(rho_star > 0.0) {
        return Err(Error::Vacuum { rho: u0.rho.min(rho_star), floor: 0.0 });
    }
    if rho_star < u0.rho {
        return Err(Error::Admissibility { family, rho: u0.rho, rho_star });
    }
    let v0 = u0.m / u0.rho;
    let dv = (rho_star - u0.rho) * shock_factor(u0.rho, rho_star);
    let c = shock_speed_offset(u0.rho, rho_star);
    match family {
        1 => Ok((rho_star * (v0 - dv), v0 - c)),
        2 => Ok((rho_star * (v0 + dv), v0 + c)),
        _ => Err(Error::Config(format!("wave family must be 1 or 2, got {family}"))),
    }
}

/// Velocity on the 1-wave curve through `left` at density `rho`, with derivative.
fn wave_curve_1(left: (f64, f64), rho: f64) -> (f64, f64) {
    let (rl, ul) = left;
    if rho <= rl {
        (ul + 0.5 * (rl - rho), -0.5)
    } else {
        let k = shock_factor(rl, rho);
        // k² = (ρ² + ρρl + ρl²)/(12ρρl) ⇒ 2k k' = (2ρ+ρl)/(12ρρl) − k²/ρ
        let dk_exact = ((2.0 * rho + rl) / (12.0 * rho * rl) - k * k / rho) / (2.0 * k);
        (ul - (rho - rl) * k, -(k + (rho - rl) * dk_exact))
    }
}

/// Velocity on the 2-wave curve through `right` at density `rho`, with derivative.
fn wave_curve_2(right: (f64, f64), rho: f64) -> (f64, f64) {
    let (rr, ur) = right;
    let (v, dv) = wave_curve_1((rr, -ur), rho);
    (-v, -dv)
}

/// Exact solution of the Riemann problem with data `ul | ur` at x = 0.
pub fn solve_riemann(ul: ConservedState, ur: ConservedState) -> Result<RiemannSolution> {
    if ul.rho < 0.0 || ur.rho < 0.0 {
        return Err(Error::InvalidData("negative density in Riemann data".into()));
    }
    let floor = DEFAULT_VACUUM_FLOOR;
    let mut sol = RiemannSolution { left: ul, right: ur, waves: Vec::new(), star: None, vacuum: None };
    if ul == ur {
        return Ok(sol);
    }
    let lv = ul.rho <= floor;
    let rv = ur.rho <= floor;
    match (lv, rv) {
        (true, true) => return Ok(sol),
        (false, true) => {
            let (l1, l2) = ul.invariants()?;
            sol.waves.push(Wave {
                family: 1,
                kind: WaveKind::Rarefaction,
                speed_lo: l1,
                speed_hi: l2,
                left: ul,
                right: ConservedState::default(),
            });
            sol.vacuum = Some((l2, f64::INFINITY));
            return Ok(sol);
        }
        (true, false) => {
            let (r1, r2) = ur.invariants()?;
            sol.vacuum = Some((f64::NEG_INFINITY, r1));
            sol.waves.push(Wave {
                family: 2,
                kind: WaveKind::Rarefaction,
                speed_lo: r1,
                speed_hi: r2,
                left: ConservedState::default(),
                right: ur,
            });
            return Ok(sol);
        }
        (false, false) => {}
    }

    let (l1, l2) = ul.invariants()?;
    let (r1, r2) = ur.invariants()?;
    // Vacuum forms when λ2(uL) ≤ λ1(uR), i.e. uR − uL ≥ (ρL + ρR)/2.
    if l2 <= r1 {
        sol.waves.push(Wave {
            family: 1,
            kind: WaveKind::Rarefaction,
            speed_lo: l1,
            speed_hi: l2,
            left: ul,
            right: ConservedState::default(),
        });
        sol.waves.push(Wave {
            family: 2,
            kind: WaveKind::Rarefaction,
            speed_lo: r1,
            speed_hi: r2,
            left: ConservedState::default(),
            right: ur,
        });
        sol.vacuum = Some((l2, r1));
        return Ok(sol);
    }

    let left = (ul.rho, ul.m / ul.rho);
    let right = (ur.rho, ur.m / ur.rho);
    let rho_star = find_middle_density(left, right)?;
    let u_star = 0.5 * (wave_curve_1(left, rho_star).0 + wave_curve_2(right, rho_star).0);
    let star = ConservedState::from_velocity(rho_star, u_star);
    sol.star = Some(star);

    let strength_tol = 1e-10 * ul.rho.max(ur.rho).max(1.0);
    if (rho_star - ul.rho).abs() > strength_tol || (u_star - left.1).abs() > strength_tol {
        sol.waves.push(if rho_star > ul.rho {
            let (_, s) = hugoniot_state(ul, rho_star, 1)?;
            Wave { family: 1, kind: WaveKind::Shock, speed_lo: s, speed_hi: s, left: ul, right: star }
        } else {
            let (s1, _) = star.invariants()?;
            Wave { family: 1, kind: WaveKind::Rarefaction, speed_lo: l1, speed_hi: s1, left: ul, right: star }
        });
    }
    if (rho_star - ur.rho).abs() > strength_tol || (u_star - right.1).abs() > strength_tol {
        sol.waves.push(if rho_star > ur.rho {
            let (_, s) = hugoniot_state(ur, rho_star, 2)?;
            Wave { family: 2, kind: WaveKind::Shock, speed_lo: s, speed_hi: s, left: star, right: ur }
        } else {
            let (_, s2) = star.invariants()?;
            Wave { family: 2, kind: WaveKind::Rarefaction, speed_lo: s2, speed_hi: r2, left: star, right: ur }
        });
    }
    Ok(sol)
}

/// Bisection on `φ1(ρ) − φ2(ρ)` (strictly decreasing), then Newton polish.
fn find_middle_density(left: (f64, f64), right: (f64, f64)) -> Result<f64> {
    let g = |rho: f64| {
        let (a, da) = wave_curve_1(left, rho);
        let (b, db) = wave_curve_2(right, rho);
        (a - b, da - db)
    };
    let mut lo = 0.0;
    let mut hi = left.0.max(right.0).max(1e-300);
    let mut grow = 0;
    while g(hi).0 > 0.0 {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > MAX_ITERATIONS || !hi.is_finite() {
            return Err(Error::NoConvergence { iterations: grow, lo, hi });
        }
    }
    let mut it = 0;
    while it < MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let (v, _) = g(mid);
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        it += 1;
        // |dg/dρ| ≥ 1 on every branch, so the bracket width bounds the velocity mismatch.
        if hi - lo <= ROOT_TOLERANCE * 1e-2 * hi.max(1.0) {
            break;
        }
    }
    let mut rho = 0.5 * (lo + hi);
    for _ in 0..3 {
        let (v, dv) = g(rho);
        if dv == 0.0 || v == 0.0 {
            break;
        }
        let next = rho - v / dv;
        if next > lo && next < hi {
            rho = next;
        }
    }
    let resid = g(rho).0.abs();
    if resid > ROOT_TOLERANCE {
        return Err(Error::NoConvergence { iterations: it, lo, hi });
    }
    Ok(rho)
}

impl RiemannSolution {
    /// State on the ray `x/t = xi`.
    pub fn sample(&self, xi: f64) -> ConservedState {
        sample_riemann(self, xi)
    }

    /// Total number of shocks.
    pub fn shocks(&self) -> impl Iterator<Item = &Wave> {
        self.waves.iter().filter(|w| w.kind == WaveKind::Shock)
    }
}

/// State of the self-similar solution at `ξ = x/t`.
pub fn sample_riemann(sol: &RiemannSolution, xi: f64) -> ConservedState {
    if let Some((vlo, vhi)) = sol.vacuum {
        if xi >= vlo && xi <= vhi {
            return ConservedState::default();
        }
    }
    let mut state = sol.left;
    for w in &sol.waves {
        if xi < w.speed_lo {
            return state;
        }
        if w.kind == WaveKind::Rarefaction && xi <= w.speed_hi {
            return fan_state(w, xi);
        }
        state = w.right;
    }
    state
}

fn fan_state(w: &Wave, xi: f64) -> ConservedState {
    let (a, b) = if w.family == 1 {
        let l2 = if w.left.rho > 0.0 { w.left.velocity() + 0.5 * w.left.rho } else { xi };
        (xi, l2)
    } else {
        let r1 = if w.right.rho > 0.0 { w.right.velocity() - 0.5 * w.right.rho } else { xi };
        (r1, xi)
    };
    from_invariants(a.min(b), b).unwrap_or_default()
}

/// Energy entropy pair `(η, q)` of a state.
pub fn energy_pair(u: &ConservedState) -> (f64, f64) {
    if u.rho <= 0.0 {
        return (0.0, 0.0);
    }
    let v = u.m / u.rho;
    let (a, b) = (v - 0.5 * u.rho, v + 0.5 * u.rho);
    let rho = u.rho;
    (rho * (a * a + a * b + b * b) / 6.0, rho * (a + b) * (a * a + b * b) / 8.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::riemann_invariants;

    const S7_6: f64 = 1.0801234497346435; // sqrt(7/6)

    #[test]
    fn zero_strength_shock() {
        let (m, s) = hugoniot_state(ConservedState::new(1.0, 0.0), 1.0, 1).unwrap();
        assert_eq!(m, 0.0);
        assert!((s + 0.5).abs() < 1e-15);
    }

    #[test]
    fn derived_one_shock() {
        // m*² = m*²/2 + 7/12 with m* < 0, and s(2 − 1) = m*.
        let oracle = -(7.0f64 / 6.0).sqrt();
        assert!((oracle + S7_6).abs() < 1e-15);
        let (m, s) = hugoniot_state(ConservedState::new(1.0, 0.0), 2.0, 1).unwrap();
        assert!((m - oracle).abs() < 1e-14, "{m}");
        assert!((s - oracle).abs() < 1e-14, "{s}");
        let r = rh_residual(&ConservedState::new(1.0, 0.0), &ConservedState::new(2.0, m), s);
        assert!(r[0].abs() < 1e-12 && r[1].abs() < 1e-12);
    }

    #[test]
    fn hugoniot_rejects_expansion() {
        let e = hugoniot_state(ConservedState::new(2.0, 0.0), 1.0, 1).unwrap_err();
        assert!(matches!(e, Error::Admissibility { family: 1, .. }));
    }

    #[test]
    fn mirror_symmetry() {
        let u0 = ConservedState::new(1.3, 0.4);
        let (m1, s1) = hugoniot_state(u0, 2.1, 1).unwrap();
        let (m2, s2) = hugoniot_state(u0.mirrored(), 2.1, 2).unwrap();
        assert!((m1 + m2).abs() < 1e-14);
        assert!((s1 + s2).abs() < 1e-14);

        let a = ConservedState::new(1.0, 0.5);
        let b = ConservedState::new(0.6, -0.2);
        let sol = solve_riemann(a, b).unwrap();
        let mir = solve_riemann(b.mirrored(), a.mirrored()).unwrap();
        for xi in [-1.3, -0.4, 0.0, 0.2, 0.9] {
            let p = sol.sample(xi);
            let q = mir.sample(-xi).mirrored();
            assert!(p.l1_distance(&q) < 1e-10, "{xi}: {p:?} {q:?}");
        }
    }

    #[test]
    fn constant_data_has_no_waves() {
        let u = ConservedState::new(1.0, 0.3);
        let sol = solve_riemann(u, u).unwrap();
        assert!(sol.waves.is_empty());
        assert_eq!(sol.sample(-5.0), u);
        assert_eq!(sol.sample(5.0), u);
    }

    #[test]
    fn vacuum_criterion() {
        let sol = solve_riemann(ConservedState::from_velocity(1.0, -1.0), ConservedState::from_velocity(1.0, 1.0)).unwrap();
        let (lo, hi) = sol.vacuum.expect("vacuum expected");
        assert!((lo + 0.5).abs() < 1e-14 && (hi - 0.5).abs() < 1e-14);
        assert_eq!(sol.sample(0.0), ConservedState::default());
        // just below the criterion there is no vacuum
        let sol = solve_riemann(ConservedState::from_velocity(1.0, -0.49), ConservedState::from_velocity(1.0, 0.49)).unwrap();
        assert!(sol.vacuum.is_none());
        assert!(sol.star.unwrap().rho > 0.0);
    }

    #[test]
    fn single_one_shock_inverse() {
        let ul = ConservedState::new(1.0, 0.0);
        let ur = ConservedState::new(2.0, -S7_6);
        let sol = solve_riemann(ul, ur).unwrap();
        assert_eq!(sol.waves.len(), 1, "{:?}", sol.waves);
        let w = sol.waves[0];
        assert_eq!((w.family, w.kind), (1, WaveKind::Shock));
        assert!((w.speed_lo + S7_6).abs() < 1e-10);
        assert_eq!(sol.sample(w.speed_lo - 1e-9), ul);
        let r = sol.sample(w.speed_lo + 1e-9);
        assert!(r.l1_distance(&ur) < 1e-10);
    }

    #[test]
    fn double_rarefaction_closed_form() {
        let ul = ConservedState::from_velocity(1.0, -0.2);
        let ur = ConservedState::from_velocity(1.5, 0.3);
        let sol = solve_riemann(ul, ur).unwrap();
        let (_, l2) = riemann_invariants(ul.rho, ul.m).unwrap();
        let (r1, _) = riemann_invariants(ur.rho, ur.m).unwrap();
        let star = sol.star.unwrap();
        assert!((star.rho - (l2 - r1)).abs() < 1e-11);
        assert!(sol.waves.iter().all(|w| w.kind == WaveKind::Rarefaction));
        // invariant constancy across the fans
        let w1 = sol.waves[0];
        for k in 0..=10 {
            let xi = w1.speed_lo + (w1.speed_hi - w1.speed_lo) * k as f64 / 10.0;
            let s = sol.sample(xi);
            let (a, b) = riemann_invariants(s.rho, s.m).unwrap();
            assert!((b - l2).abs() < 1e-10 && (a - xi).abs() < 1e-10);
        }
    }

    #[test]
    fn shocks_are_admissible_and_entropic() {
        let cases = [
            (ConservedState::from_velocity(1.0, 1.0), ConservedState::from_velocity(1.0, -1.0)),
            (ConservedState::from_velocity(2.0, 0.0), ConservedState::from_velocity(1.0, 0.0)),
            (ConservedState::from_velocity(0.5, 0.8), ConservedState::from_velocity(1.7, -0.3)),
        ];
        for (ul, ur) in cases {
            let sol = solve_riemann(ul, ur).unwrap();
            assert!(sol.waves.windows(2).all(|w| w[0].speed_hi <= w[1].speed_lo + 1e-12));
            for w in sol.shocks() {
                let r = w.rh_residual();
                assert!(r[0].abs() <= 1e-10 && r[1].abs() <= 1e-10, "{r:?}");
                let (l_left, r_left) = riemann_invariants(w.left.rho, w.left.m).unwrap();
                let (l_right, r_right) = riemann_invariants(w.right.rho, w.right.m).unwrap();
                let s = w.speed_lo;
                if w.family == 1 {
                    assert!(l_right <= s && s <= l_left + 1e-12);
                } else {
                    assert!(r_right <= s && s <= r_left + 1e-12);
                }
                let (el, ql) = energy_pair(&w.left);
                let (er, qr) = energy_pair(&w.right);
                assert!(qr - ql <= s * (er - el) + 1e-10);
            }
        }
    }
}
