#![allow(dead_code)]

use isokin_core::riemann::{solve_riemann, RiemannSolution};
use isokin_core::solver::{run, SchemeConfig, SchemeKind, SpaceTimeRecord};
use isokin_core::state::{Boundary, ConservedField, ConservedState, Grid1D};

/// Speed of the derived 1-shock from (1, 0) to (2, −√(7/6)).
pub fn shock_speed() -> f64 {
    -(7.0f64 / 6.0).sqrt()
}

pub fn one_shock_states() -> (ConservedState, ConservedState) {
    (ConservedState::new(1.0, 0.0), ConservedState::new(2.0, shock_speed()))
}

pub fn riemann_field(grid: &Grid1D, x0: f64, ul: ConservedState, ur: ConservedState) -> ConservedField {
    ConservedField::from_states(grid.centers().into_iter().map(|x| if x < x0 { ul } else { ur }))
}

/// 1-shock starting at x = 0.2 on [−0.5, 0.5].
pub fn one_shock_record(n: usize, t_end: f64, stride: usize) -> SpaceTimeRecord {
    let grid = Grid1D::new(-0.5, 0.5, n, Boundary::Outflow).unwrap();
    let (ul, ur) = one_shock_states();
    let cfg = SchemeConfig { t_end, stride, ..Default::default() };
    run(&grid, &riemann_field(&grid, 0.2, ul, ur), &cfg).unwrap()
}

pub fn riemann_record(n: usize, ul: ConservedState, ur: ConservedState, t_end: f64, scheme: SchemeKind) -> SpaceTimeRecord {
    let grid = Grid1D::new(-0.5, 0.5, n, Boundary::Outflow).unwrap();
    let cfg = SchemeConfig { t_end, stride: usize::MAX, scheme, ..Default::default() };
    run(&grid, &riemann_field(&grid, 0.0, ul, ur), &cfg).unwrap()
}

/// `∫ |u − exact(x/t)| dx` for a Riemann problem centred at x = 0.
pub fn l1_to_exact(record: &SpaceTimeRecord, sol: &RiemannSolution) -> f64 {
    let t = record.t_end();
    let dx = record.grid.dx();
    record.grid.centers().iter().zip(record.last().states()).map(|(&x, u)| u.l1_distance(&sol.sample(x / t)) * dx).sum()
}

pub fn l1_between(a: &ConservedField, b: &ConservedField, dx: f64) -> f64 {
    a.states().zip(b.states()).map(|(p, q)| p.l1_distance(&q) * dx).sum()
}

pub fn exact(ul: ConservedState, ur: ConservedState) -> RiemannSolution {
    solve_riemann(ul, ur).unwrap()
}
