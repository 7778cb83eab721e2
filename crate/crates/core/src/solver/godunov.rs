//! First-order Godunov reference scheme.

use crate::error::{Error, Result};
use crate::riemann::solve_riemann;
use crate::state::{Boundary, ConservedField, ConservedState, Grid1D};

/// Largest characteristic speed `max(|λ1|, |λ2|)` over the field.
pub fn max_wave_speed(field: &ConservedField) -> f64 {
    field
        .states()
        .filter(|s| s.rho > 0.0)
        .map(|s| {
            let u = s.m / s.rho;
            (u - 0.5 * s.rho).abs().max((u + 0.5 * s.rho).abs())
        })
        .fold(0.0, f64::max)
}

fn interface_flux(ul: ConservedState, ur: ConservedState) -> Result<[f64; 2]> {
    if ul == ur {
        return Ok(ul.flux());
    }
    Ok(solve_riemann(ul, ur)?.sample(0.0).flux())
}

/// One conservative Godunov step. Returns the new field and the net mass and
/// momentum flux out through the boundary.
pub fn godunov_step(grid: &Grid1D, field: &ConservedField, dt: f64) -> Result<(ConservedField, [f64; 2])> {
    let n = grid.n_cells;
    let dx = grid.dx();
    let smax = max_wave_speed(field);
    if smax > 0.0 {
        let limit = 0.5 * dx / smax;
        if !(dt >= 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt, limit });
        }
    }
    let cell = |k: isize| -> ConservedState {
        let idx = match grid.boundary {
            Boundary::Periodic => k.rem_euclid(n as isize),
            Boundary::Outflow => k.clamp(0, n as isize - 1),
        };
        field.state(idx as usize)
    };
    let mut flux = Vec::with_capacity(n + 1);
    for k in 0..=n as isize {
        flux.push(interface_flux(cell(k - 1), cell(k))?);
    }
    let nu = dt / dx;
    let mut rho = Vec::with_capacity(n);
    let mut m = Vec::with_capacity(n);
    for j in 0..n {
        let s = field.state(j);
        let mut r = s.rho - nu * (flux[j + 1][0] - flux[j][0]);
        let mut mj = s.m - nu * (flux[j + 1][1] - flux[j][1]);
        if r < 0.0 {
            assert!(r > -1e-12 * s.rho.max(1.0), "godunov produced negative density {r} in cell {j}");
            r = 0.0;
        }
        if r == 0.0 {
            mj = 0.0;
        }
        rho.push(r);
        m.push(mj);
    }
    let out = match grid.boundary {
        Boundary::Periodic => [0.0, 0.0],
        Boundary::Outflow => [flux[n][0] - flux[0][0], flux[n][1] - flux[0][1]],
    };
    Ok((ConservedField { rho, m }, out))
}
