//! Transport-collapse step.
//!
//! Each cell carries `χ_[λ1, λ2](v)`. Free transport over `dt` moves the mass
//! at velocity `v` a distance `v dt`; with `dt L ≤ dx` only the two
//! neighbours exchange mass, so the transported density in cell `j` is
//!
//! ```text
//! f̃_j(v) = (1 − ν|v|) χ_j + ν v_+ χ_{j−1} + ν v_- χ_{j+1},   ν = dt/dx
//! ```
//!
//! which is written in flux form so that every kernel moment is conserved
//! exactly up to boundary fluxes. Collapse then replaces `f̃_j` by the unique
//! χ-interval with the same mass and momentum.

use crate::error::{Error, Result};
use crate::riemann::energy_pair;
use crate::state::{Boundary, ConservedField, ConservedState, Grid1D, KineticInterval};
use crate::velocity::moment_fluxes;

/// Result of one transport-collapse step.
#[derive(Clone, Debug)]
pub struct KineticStep {
    pub field: ConservedField,
    /// Per-cell drop of `∫ v²/2 f dv` caused by the collapse.
    pub dissipation: Vec<f64>,
    /// Net mass and momentum flux out through the domain boundary.
    pub boundary_flux: [f64; 2],
}

/// Neighbour indices `(left, right)` of cell `j`, honouring the boundary.
pub(crate) fn neighbours(grid: &Grid1D, j: usize) -> (usize, usize) {
    let n = grid.n_cells;
    match grid.boundary {
        Boundary::Periodic => ((j + n - 1) % n, (j + 1) % n),
        Boundary::Outflow => (j.saturating_sub(1), (j + 1).min(n - 1)),
    }
}

pub(crate) fn intervals(field: &ConservedField) -> Vec<(f64, f64)> {
    field
        .states()
        .map(|s| {
            let iv = KineticInterval::from_state(s);
            (iv.lambda1, iv.lambda2)
        })
        .collect()
}

/// `∫ g f̃_j dv` for the transported density of cell `j`.
#[cfg(test)]
pub(crate) fn transported_kernel(grid: &Grid1D, iv: &[(f64, f64)], j: usize, nu: f64, kernel: crate::velocity::Kernel) -> f64 {
    use crate::velocity::{interval_integral, upwind_flux, Weight};
    let (l, r) = neighbours(grid, j);
    let own = interval_integral(iv[j].0, iv[j].1, kernel, Weight::One);
    let out_right = upwind_flux(iv[j], iv[r], kernel);
    let in_left = upwind_flux(iv[l], iv[j], kernel);
    own - nu * (out_right - in_left)
}

fn check_support(iv: &[(f64, f64)], bound: f64) -> Result<()> {
    let tol = 1e-12 * bound.max(1.0);
    for (i, &(a, b)) in iv.iter().enumerate() {
        if a < -bound - tol || b > bound + tol {
            return Err(Error::Config(format!(
                "cell {i} support [{a}, {b}] exceeds the velocity bound L = {bound}"
            )));
        }
    }
    Ok(())
}

/// One transport-collapse step of length `dt`.
pub fn transport_collapse_step(
    grid: &Grid1D,
    field: &ConservedField,
    dt: f64,
    velocity_bound: f64,
    floor: f64,
) -> Result<KineticStep> {
    let dx = grid.dx();
    let limit = dx / velocity_bound;
    if !(dt >= 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    let iv = intervals(field);
    check_support(&iv, velocity_bound)?;
    let n = grid.n_cells;
    let nu = dt / dx;

    // interface k sits between cells k−1 and k; k = 0..=n
    let left_of = |k: usize| match grid.boundary {
        Boundary::Periodic => (k + n - 1) % n,
        Boundary::Outflow => k.saturating_sub(1).min(n - 1),
    };
    let right_of = |k: usize| match grid.boundary {
        Boundary::Periodic => k % n,
        Boundary::Outflow => k.min(n - 1),
    };
    let mut fmass = Vec::with_capacity(n + 1);
    let mut fmom = Vec::with_capacity(n + 1);
    let mut fen = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let (a, b) = (iv[left_of(k)], iv[right_of(k)]);
        let [fm, fq, fe] = moment_fluxes(a, b);
        fmass.push(fm);
        fmom.push(fq);
        fen.push(fe);
    }

    let mut rho = Vec::with_capacity(n);
    let mut m = Vec::with_capacity(n);
    let mut dissipation = Vec::with_capacity(n);
    for j in 0..n {
        let s = field.state(j);
        let mut r = s.rho - nu * (fmass[j + 1] - fmass[j]);
        let mut mj = s.m - nu * (fmom[j + 1] - fmom[j]);
        let (e_old, _) = energy_pair(&s);
        let e_tilde = e_old - nu * (fen[j + 1] - fen[j]);
        if r < 0.0 {
            assert!(
                r > -1e-12 * s.rho.max(1.0),
                "transport produced negative density {r} in cell {j}"
            );
            r = 0.0;
        }
        if r <= floor {
            mj = 0.0;
        }
        let (e_new, _) = energy_pair(&ConservedState::new(r, mj));
        rho.push(r);
        m.push(mj);
        dissipation.push(e_tilde - e_new);
    }

    let boundary_flux = match grid.boundary {
        Boundary::Periodic => [0.0, 0.0],
        Boundary::Outflow => [fmass[n] - fmass[0], fmom[n] - fmom[0]],
    };
    Ok(KineticStep { field: ConservedField { rho, m }, dissipation, boundary_flux })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::velocity::Kernel;

    fn grid(n: usize, b: Boundary) -> Grid1D {
        Grid1D::new(0.0, 1.0, n, b).unwrap()
    }

    #[test]
    fn constant_field_is_stationary() {
        for b in [Boundary::Periodic, Boundary::Outflow] {
            let g = grid(16, b);
            let f = ConservedField::constant(16, ConservedState::new(1.3, 0.4));
            let st = transport_collapse_step(&g, &f, 0.5 * g.dx() / 1.2, 1.2, 1e-12).unwrap();
            for j in 0..16 {
                assert!((st.field.rho[j] - 1.3).abs() < 1e-14);
                assert!((st.field.m[j] - 0.4).abs() < 1e-14);
                assert!(st.dissipation[j].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let g = grid(8, Boundary::Periodic);
        let f = ConservedField::constant(8, ConservedState::new(1.0, 0.0));
        let e = transport_collapse_step(&g, &f, 2.0 * g.dx(), 1.0, 1e-12).unwrap_err();
        assert!(matches!(e, Error::Cfl { .. }));
    }

    #[test]
    fn support_outside_bound_is_rejected() {
        let g = grid(8, Boundary::Periodic);
        let f = ConservedField::constant(8, ConservedState::new(4.0, 0.0));
        assert!(transport_collapse_step(&g, &f, 0.1 * g.dx(), 1.0, 1e-12).is_err());
    }

    #[test]
    fn transported_density_matches_direct_shift() {
        // Oracle: integrate the shifted cell-average of f directly in v.
        let g = grid(6, Boundary::Periodic);
        let states = [(1.0, 0.2), (0.5, -0.1), (1.5, 0.9), (0.8, 0.0), (1.2, -0.7), (0.3, 0.05)];
        let f = ConservedField::from_states(states.iter().map(|&(r, m)| ConservedState::new(r, m)));
        let iv = intervals(&f);
        let nu = 0.4;
        for j in 0..6 {
            let (l, r) = neighbours(&g, j);
            let chi = |k: usize, v: f64| if v >= iv[k].0 && v <= iv[k].1 { 1.0 } else { 0.0 };
            let n = 400_000;
            let (lo, hi) = (-3.0, 3.0);
            let h = (hi - lo) / n as f64;
            let (mut mass, mut mom) = (0.0, 0.0);
            for q in 0..n {
                let v = lo + (q as f64 + 0.5) * h;
                let ft = (1.0 - nu * v.abs()) * chi(j, v) + nu * v.max(0.0) * chi(l, v) + nu * (-v).max(0.0) * chi(r, v);
                mass += ft * h;
                mom += v * ft * h;
            }
            let a = transported_kernel(&g, &iv, j, nu, Kernel::Mass);
            let b = transported_kernel(&g, &iv, j, nu, Kernel::Momentum);
            assert!((a - mass).abs() < 1e-5, "{a} {mass}");
            assert!((b - mom).abs() < 1e-5, "{b} {mom}");
        }
    }

    #[test]
    fn dissipation_nonnegative_and_conservative() {
        let g = grid(40, Boundary::Periodic);
        let f = ConservedField::from_states((0..40).map(|i| {
            let x = g.center(i);
            if x < 0.5 { ConservedState::new(1.0, 0.8) } else { ConservedState::new(0.6, -0.5) }
        }));
        let l = crate::state::StateBounds::from_field(&f, 1e-12).velocity_bound;
        let mut cur = f.clone();
        let (m0, p0) = cur.totals(g.dx());
        for _ in 0..50 {
            let st = transport_collapse_step(&g, &cur, 0.9 * g.dx() / l, l, 1e-12).unwrap();
            assert!(st.dissipation.iter().all(|&d| d >= -1e-14));
            cur = st.field;
        }
        let (m1, p1) = cur.totals(g.dx());
        assert!((m1 - m0).abs() < 1e-13 && (p1 - p0).abs() < 1e-13);
    }
}
