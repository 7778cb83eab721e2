//! Initial data presets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use isokin_core::regularity::{bump, Direction};
use isokin_core::riemann::{solve_riemann, RiemannSolution};
use isokin_core::state::{from_invariants, ConservedField, ConservedState, Grid1D, StateBounds};

use crate::config::{GridConfig, Preset, RunConfig};
use crate::error::{CliError, Result};

/// Cell-center initial field of `preset`; `seed` drives random presets only.
pub fn initial_field(grid: &Grid1D, gcfg: &GridConfig, preset: &Preset, seed: u64) -> Result<ConservedField> {
    let xs = grid.centers();
    let mid = gcfg.midpoint();
    let field = match preset {
        Preset::Riemann { left, right, x0 } => {
            let (ul, ur, x0) = (left.state(), right.state(), x0.unwrap_or(mid));
            ConservedField::from_states(xs.iter().map(|&x| if x < x0 { ul } else { ur }))
        }
        Preset::SmoothSine { rho0, amplitude, velocity, waves } => {
            let k = 2.0 * std::f64::consts::PI * *waves as f64 / (gcfg.x_max - gcfg.x_min);
            ConservedField::from_states(
                xs.iter().map(|&x| ConservedState::from_velocity(rho0 + amplitude * (k * (x - gcfg.x_min)).sin(), *velocity)),
            )
        }
        Preset::ShockPair { rho, speed, x0 } => {
            let x0 = x0.unwrap_or(mid);
            ConservedField::from_states(
                xs.iter().map(|&x| ConservedState::from_velocity(*rho, if x < x0 { *speed } else { -*speed })),
            )
        }
        Preset::RandomLinfty { pieces, rho, velocity } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let states: Vec<ConservedState> = (0..*pieces)
                .map(|_| ConservedState::from_velocity(rng.gen_range(rho[0]..=rho[1]), rng.gen_range(velocity[0]..=velocity[1])))
                .collect();
            let width = (gcfg.x_max - gcfg.x_min) / *pieces as f64;
            ConservedField::from_states(
                xs.iter().map(|&x| states[(((x - gcfg.x_min) / width) as usize).min(pieces - 1)]),
            )
        }
        Preset::Constant { state } => ConservedField::constant(xs.len(), state.state()),
        Preset::Bump { base, amplitude, center, width, direction } => {
            let (l1, l2) = base.state().invariants()?;
            let c = center.unwrap_or(mid);
            let states = xs
                .iter()
                .map(|&x| {
                    let b = amplitude * bump(x, c, *width);
                    match direction {
                        Direction::BelowLambda1 => from_invariants(l1 - b, l2),
                        Direction::AboveLambda2 => from_invariants(l1, l2 + b),
                    }
                })
                .collect::<isokin_core::Result<Vec<_>>>()?;
            ConservedField::from_states(states)
        }
    };
    field.validate()?;
    Ok(field)
}

/// Exact self-similar solution of a Riemann preset, with its jump location.
pub fn exact_riemann(cfg: &RunConfig) -> Result<Option<(RiemannSolution, f64)>> {
    match &cfg.initial {
        Preset::Riemann { left, right, x0 } => {
            Ok(Some((solve_riemann(left.state(), right.state())?, x0.unwrap_or(cfg.grid.midpoint()))))
        }
        _ => Ok(None),
    }
}

/// Reject initial data outside the configured `Γ` and `M`.
pub fn check_bounds(cfg: &RunConfig, field: &ConservedField) -> Result<StateBounds> {
    let b = StateBounds::from_field(field, cfg.scheme.vacuum_floor);
    if let Some(want) = &cfg.bounds {
        let mut errs = Vec::new();
        if let Some(g) = want.gamma {
            if b.gamma > g {
                errs.push(format!("bounds.gamma = {g}: initial data has ‖ρ‖∞ + ‖u‖∞ = {}", b.gamma));
            }
        }
        if b.min_density < want.min_density {
            errs.push(format!("bounds.min_density = {}: initial data reaches ρ = {}", want.min_density, b.min_density));
        }
        if !errs.is_empty() {
            return Err(CliError::Config { origin: "initial data".into(), errors: errs });
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::StateSpec;
    use isokin_core::state::Boundary;

    fn grid(n: usize) -> (Grid1D, GridConfig) {
        let g = GridConfig { x_min: 0.0, x_max: 1.0, cells: n, boundary: Boundary::Periodic };
        (g.build().unwrap(), g)
    }

    #[test]
    fn random_preset_is_seeded() {
        let (gr, g) = grid(64);
        let p = Preset::RandomLinfty { pieces: 8, rho: [0.5, 2.0], velocity: [-0.5, 0.5] };
        let a = initial_field(&gr, &g, &p, 3).unwrap();
        assert_eq!(a, initial_field(&gr, &g, &p, 3).unwrap());
        assert_ne!(a, initial_field(&gr, &g, &p, 4).unwrap());
        assert!(a.rho.iter().all(|r| (0.5..=2.0).contains(r)));
    }

    #[test]
    fn bump_moves_only_the_chosen_invariant() {
        let (gr, g) = grid(100);
        let base = StateSpec { rho: 1.0, m: None, u: None };
        let p = Preset::Bump { base, amplitude: 0.1, center: None, width: 0.2, direction: Direction::BelowLambda1 };
        let f = initial_field(&gr, &g, &p, 0).unwrap();
        for s in f.states() {
            let (l1, l2) = s.invariants().unwrap();
            assert!((l2 - 0.5).abs() < 1e-12 && (-0.6 - 1e-12..=-0.5 + 1e-12).contains(&l1));
        }
        assert!((f.state(0).rho - 1.0).abs() < 1e-12);
    }

    #[test]
    fn riemann_preset_jumps_at_the_midpoint() {
        let (gr, g) = grid(10);
        let left = StateSpec { rho: 2.0, m: None, u: Some(0.5) };
        let right = StateSpec { rho: 1.0, m: Some(0.0), u: None };
        let f = initial_field(&gr, &g, &Preset::Riemann { left, right, x0: None }, 0).unwrap();
        assert_eq!(f.state(4), ConservedState::new(2.0, 1.0));
        assert_eq!(f.state(5), ConservedState::new(1.0, 0.0));
    }
}
