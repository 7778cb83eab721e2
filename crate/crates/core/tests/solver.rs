mod common;

use common::*;
use isokin_core::regularity::loglog_slope;
use isokin_core::riemann::solve_riemann;
use isokin_core::solver::{run, SchemeConfig, SchemeKind};
use isokin_core::state::{from_invariants, Boundary, ConservedField, ConservedState, Grid1D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// First crossing of ρ = 1.5, linearly interpolated between cell centres.
fn front_position(grid: &Grid1D, field: &ConservedField) -> f64 {
    let x = grid.centers();
    for i in 1..field.len() {
        let (a, b) = (field.rho[i - 1], field.rho[i]);
        if a < 1.5 && b >= 1.5 {
            return x[i - 1] + (1.5 - a) / (b - a) * (x[i] - x[i - 1]);
        }
    }
    panic!("no front found");
}

#[test]
fn one_shock_front_travels_at_exact_speed() {
    let rec = one_shock_record(2000, 0.2, usize::MAX);
    let front = front_position(&rec.grid, rec.last());
    let expected = 0.2 + shock_speed() * rec.t_end();
    assert!((front - expected).abs() <= rec.grid.dx(), "front {front}, exact {expected}");
}

#[test]
fn godunov_and_kinetic_agree_on_shock_tube() {
    let (ul, ur) = (ConservedState::new(2.0, 0.0), ConservedState::new(1.0, 0.0));
    let sol = exact(ul, ur);
    let n = 1000;
    let dx = 1.0 / n as f64;
    let k = riemann_record(n, ul, ur, 0.2, SchemeKind::Kinetic);
    let g = riemann_record(n, ul, ur, 0.2, SchemeKind::Godunov);
    let between = l1_between(k.last(), g.last(), dx);
    assert!(between <= 3.0 * dx.sqrt(), "{between}");
    assert!(l1_to_exact(&k, &sol) <= 3.0 * dx.sqrt());
    assert!(l1_to_exact(&g, &sol) <= 3.0 * dx.sqrt());
    assert!(k.summary.passed && g.summary.max_step_mass_change < 1e-12);
}

#[test]
fn self_convergence_is_monotone() {
    let (ul, ur) = (ConservedState::new(2.0, 0.0), ConservedState::new(1.0, 0.0));
    let fields: Vec<(Grid1D, ConservedField)> = [200usize, 400, 800, 1600]
        .iter()
        .map(|&n| {
            let r = riemann_record(n, ul, ur, 0.2, SchemeKind::Kinetic);
            (r.grid.clone(), r.last().clone())
        })
        .collect();
    // restrict the fine field onto the coarse grid by pairwise averaging
    let diffs: Vec<f64> = fields
        .windows(2)
        .map(|w| {
            let (g, coarse) = (&w[0].0, &w[0].1);
            let fine = &w[1].1;
            let restricted = ConservedField::from_states((0..g.n_cells).map(|i| fine.state(2 * i).add(&fine.state(2 * i + 1)).scale(0.5)));
            l1_between(coarse, &restricted, g.dx())
        })
        .collect();
    assert!(diffs.windows(2).all(|d| d[1] < d[0]), "{diffs:?}");
}

fn dissipation_slope(init: impl Fn(f64) -> ConservedState) -> (f64, Vec<f64>) {
    let ns = [250usize, 500, 1000];
    let totals: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let grid = Grid1D::new(-0.5, 0.5, n, Boundary::Outflow).unwrap();
            let field = ConservedField::from_states(grid.centers().into_iter().map(&init));
            run(&grid, &field, &SchemeConfig { t_end: 0.2, stride: usize::MAX, ..Default::default() }).unwrap().summary.total_dissipation
        })
        .collect();
    let dxs: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
    (loglog_slope(&dxs, &totals).unwrap(), totals)
}

#[test]
fn rarefaction_dissipation_vanishes_under_refinement() {
    // both invariants ramp up over [−0.1, 0.1]: a smooth expanding wave
    let ramp = |x: f64| {
        let s = ((x + 0.1) / 0.2).clamp(0.0, 1.0);
        from_invariants(-0.8 + 0.6 * s, 0.2 + 0.6 * s).unwrap()
    };
    let (slope, totals) = dissipation_slope(ramp);
    assert!(slope >= 0.8, "slope {slope}, totals {totals:?}");

    // a centred fan starts from a jump; the 1/t gradients near its origin
    // cost an extra log factor, Δx log(1/Δx)
    let (ul, ur) = (ConservedState::from_velocity(1.0, -0.3), ConservedState::from_velocity(1.0, 0.3));
    assert!(solve_riemann(ul, ur).unwrap().shocks().next().is_none());
    let (slope, totals) = dissipation_slope(|x| if x < 0.0 { ul } else { ur });
    assert!(slope >= 0.6 && totals.windows(2).all(|w| w[1] < w[0]), "slope {slope}, totals {totals:?}");
}

#[test]
fn smooth_periodic_data_keeps_invariant_range() {
    for n in [250usize, 500] {
        let grid = Grid1D::new(0.0, 1.0, n, Boundary::Periodic).unwrap();
        let init = ConservedField::from_states(
            grid.centers().into_iter().map(|x| ConservedState::new(1.0 + 0.1 * (2.0 * std::f64::consts::PI * x).sin(), 0.0)),
        );
        let (lo0, hi0) = init.invariant_range(1e-12).unwrap();
        let rec = run(&grid, &init, &SchemeConfig { t_end: 1.0, stride: 50, ..Default::default() }).unwrap();
        for snap in &rec.snapshots {
            let (lo, hi) = snap.invariant_range(1e-12).unwrap();
            assert!(lo >= lo0 - 1e-3 && hi <= hi0 + 1e-3);
        }
        assert!(rec.summary.passed);
    }
}

#[test]
fn random_riemann_batch_passes_audits() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut done = 0;
    while done < 20 {
        let ul = ConservedState::from_velocity(rng.gen_range(0.3..2.0), rng.gen_range(-1.0..1.0));
        let ur = ConservedState::from_velocity(rng.gen_range(0.3..2.0), rng.gen_range(-1.0..1.0));
        if solve_riemann(ul, ur).unwrap().vacuum.is_some() {
            continue;
        }
        let rec = riemann_record(400, ul, ur, 0.2, SchemeKind::Kinetic);
        assert!(rec.summary.passed, "{ul:?} {ur:?}: {:?}", rec.summary);
        done += 1;
    }
}

#[test]
fn long_periodic_run_conserves() {
    let grid = Grid1D::new(0.0, 1.0, 200, Boundary::Periodic).unwrap();
    let init = ConservedField::from_states(grid.centers().into_iter().map(|x| {
        if (0.25..0.75).contains(&x) { ConservedState::new(2.0, 0.0) } else { ConservedState::new(1.0, 0.0) }
    }));
    let rec = run(&grid, &init, &SchemeConfig { t_end: 5.0, stride: 1000, ..Default::default() }).unwrap();
    assert!(rec.summary.steps > 1000);
    assert!(rec.summary.mass_drift <= 1e-9 && rec.summary.momentum_drift <= 1e-9);
    assert!(rec.summary.max_lambda1_decrease <= 1e-10 && rec.summary.max_lambda2_increase <= 1e-10);
    assert!(rec.summary.max_energy_increase <= 1e-10);
}

#[test]
fn separating_states_open_a_vacuum() {
    let (ul, ur) = (ConservedState::from_velocity(1.0, -1.0), ConservedState::from_velocity(1.0, 1.0));
    assert!(solve_riemann(ul, ur).unwrap().vacuum.is_some());
    let rec = riemann_record(4000, ul, ur, 0.2, SchemeKind::Kinetic);
    let min = rec.last().rho.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(min < 1e-3, "{min}");
    assert!(rec.summary.passed);
}
