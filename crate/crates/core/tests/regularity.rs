mod common;

use common::*;
use isokin_core::regularity::*;
use isokin_core::riemann::hugoniot_state;
use isokin_core::solver::{run, SchemeConfig, SpaceTimeRecord};
use isokin_core::state::{Boundary, ConservedField, ConservedState, Grid1D};

fn record(grid: &Grid1D, init: &ConservedField, t_end: f64, stride: usize) -> SpaceTimeRecord {
    run(grid, init, &SchemeConfig { t_end, stride, ..Default::default() }).unwrap()
}

fn times_from(rec: &SpaceTimeRecord, t0: f64) -> Vec<f64> {
    rec.times.iter().copied().filter(|&t| t >= t0).collect()
}

/// Band wide against the smeared shock, floor above its few cells.
fn shock_trace_params() -> TraceParams {
    TraceParams { band: Some(0.05), ladder_top: Some(0.2), floor: Some(0.01), ..Default::default() }
}

struct ShockTraces {
    minus: TraceReport,
    plus: TraceReport,
    dichotomy: DichotomyReport,
}

fn shock_traces(n: usize) -> ShockTraces {
    let rec = one_shock_record(n, 0.3, 5);
    let curve = LipschitzCurve::line(&times_from(&rec, 0.05), 0.2, 0.0, shock_speed());
    let p = shock_trace_params();
    let minus = extract_trace(&rec, &curve, Side::Minus, &p).unwrap();
    let plus = extract_trace(&rec, &curve, Side::Plus, &p).unwrap();
    let dichotomy = rh_dichotomy(&rec, &curve, &minus, &plus, &DichotomyParams::default()).unwrap();
    ShockTraces { minus, plus, dichotomy }
}

#[test]
fn constant_solution_has_exact_traces() {
    let grid = Grid1D::new(0.0, 1.0, 100, Boundary::Periodic).unwrap();
    let u = ConservedState::new(1.3, 0.4);
    let rec = record(&grid, &ConservedField::constant(100, u), 0.2, 1);
    let curve = LipschitzCurve::line(&rec.times, 0.5, 0.0, 0.3);
    for side in [Side::Minus, Side::Plus] {
        let tr = extract_trace(&rec, &curve, side, &TraceParams::default()).unwrap();
        assert!(tr.e.iter().chain(&tr.uniform_e).all(|&e| e < 1e-12));
        assert!(tr.max_distance(&u) < 1e-12);
        assert!(tr.verified);
    }
}

#[test]
fn shock_traces_match_oracle_and_residual_halves() {
    let (ul, ur) = one_shock_states();
    let coarse = shock_traces(1000);
    let fine = shock_traces(2000);

    assert!(fine.minus.mean_distance(&ul) <= 5e-2, "{}", fine.minus.mean_distance(&ul));
    assert!(fine.plus.mean_distance(&ur) <= 5e-2, "{}", fine.plus.mean_distance(&ur));
    for tr in [&fine.minus, &fine.plus] {
        assert!(tr.e.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{:?}", tr.e);
    }

    let d = &fine.dichotomy;
    assert_eq!(d.label, Label::Shock);
    assert!(d.entropic);
    assert!(d.mean_rh_residual <= 5e-2);
    let ratio = d.mean_rh_residual / coarse.dichotomy.mean_rh_residual;
    assert!((0.35..=0.65).contains(&ratio), "ratio {ratio}");
    assert!(d.pairing_ok, "pairing error {}", d.pairing_error);
}

#[test]
fn curves_off_the_shock_are_continuous() {
    let (ul, ur) = (ConservedState::new(2.0, 0.0), ConservedState::new(1.0, 0.0));
    let grid = Grid1D::new(-0.5, 0.5, 2000, Boundary::Outflow).unwrap();
    let rec = record(&grid, &riemann_field(&grid, 0.0, ul, ur), 0.25, 5);
    let times = times_from(&rec, 0.1);

    // constant region left of the fan
    let curve = LipschitzCurve::line(&times, -0.4, 0.0, 0.0);
    let p = TraceParams::default();
    let minus = extract_trace(&rec, &curve, Side::Minus, &p).unwrap();
    let plus = extract_trace(&rec, &curve, Side::Plus, &p).unwrap();
    for k in 0..times.len() {
        assert!(minus.u_trace[k].l1_distance(&plus.u_trace[k]) <= 5e-3);
    }
    let d = rh_dichotomy(&rec, &curve, &minus, &plus, &DichotomyParams::default()).unwrap();
    assert_eq!((d.label, d.shock_fraction), (Label::Continuous, 0.0));

    // a ray inside the fan (head speed −1, tail above −0.6)
    let curve = LipschitzCurve::line(&times, 0.0, 0.0, -0.8);
    let minus = extract_trace(&rec, &curve, Side::Minus, &p).unwrap();
    let plus = extract_trace(&rec, &curve, Side::Plus, &p).unwrap();
    let d = rh_dichotomy(&rec, &curve, &minus, &plus, &DichotomyParams::default()).unwrap();
    assert_eq!(d.label, Label::Continuous);
}

#[test]
fn blowup_at_the_shock_approaches_the_trace_states() {
    let (ul, ur) = one_shock_states();
    let rec = one_shock_record(2000, 0.3, 1);
    let curve = LipschitzCurve::line(&times_from(&rec, 0.05), 0.2, 0.0, shock_speed());
    let ladder = blowup_ladder(&rec, 0.15, &curve, &ul, &ur, 4, &BlowupParams::default()).unwrap();
    assert!(ladder.decreasing, "{:?}", ladder.distances);
    assert!(ladder.distances.last().unwrap() < &ladder.distances[0]);

    let grid = Grid1D::new(0.0, 1.0, 200, Boundary::Periodic).unwrap();
    let u = ConservedState::new(0.8, -0.2);
    let rec = record(&grid, &ConservedField::constant(200, u), 0.2, 1);
    let curve = LipschitzCurve::line(&rec.times, 0.5, 0.0, 0.0);
    let patch = blowup_rescale(&rec, 0.1, &curve, 0.05, &BlowupParams::default()).unwrap();
    assert!(patch.oscillation() < 1e-12);
    assert!(patch.half_space_distance(&u, &u, 0.1) < 1e-12);
}

#[test]
fn constant_state_envelopes_coincide() {
    let grid = Grid1D::new(0.0, 1.0, 200, Boundary::Periodic).unwrap();
    let rec = record(&grid, &ConservedField::constant(200, ConservedState::new(1.0, 0.3)), 0.2, 1);
    let rep = semicontinuity_check(&rec, &[[0.1, 0.3], [0.1, 0.7]], &SemicontParams::default()).unwrap();
    assert_eq!((rep.vmo_points, rep.passed_points), (2, 2));
    for p in &rep.points {
        assert!(p.rho_gap.abs() < 1e-12 && p.lambda1_gap.abs() < 1e-12 && p.lambda2_gap.abs() < 1e-12);
        assert!(p.ladder.iter().all(|s| s.defect < 1e-12));
    }
}

#[test]
fn shock_tube_semicontinuity_off_and_on_the_shock() {
    let (ul, ur) = (ConservedState::new(2.0, 0.0), ConservedState::new(1.0, 0.0));
    let shock = exact(ul, ur).shocks().next().unwrap().speed_lo;
    let grid = Grid1D::new(0.0, 1.0, 1000, Boundary::Outflow).unwrap();
    let rec = record(&grid, &riemann_field(&grid, 0.5, ul, ur), 0.25, 1);

    // low-discrepancy sample away from the shock line
    let mut off = Vec::new();
    let mut k = 0;
    while off.len() < 20 {
        k += 1;
        let t = 0.1 + 0.1 * ((k as f64 * 0.618034) % 1.0);
        let x = 0.15 + 0.7 * ((k as f64 * 0.414214) % 1.0);
        if (x - 0.5 - shock * t).abs() > 0.03 {
            off.push([t, x]);
        }
    }
    let rep = semicontinuity_check(&rec, &off, &SemicontParams::default()).unwrap();
    assert!((rep.tol - 5.0 * grid.dx().sqrt()).abs() < 1e-15);
    assert_eq!(rep.passed_points, off.len());
    assert!(rep.points.iter().all(|p| p.ordering_ok && p.defect_decreasing));

    let on: Vec<[f64; 2]> = (0..5).map(|i| {
        let t = 0.1 + 0.02 * i as f64;
        [t, 0.5 + shock * t]
    }).collect();
    let rep = semicontinuity_check(&rec, &on, &SemicontParams::default()).unwrap();
    assert_eq!(rep.vmo_points, 0);
    assert!(rep.points.iter().all(|p| p.passed.is_none()));
}

#[test]
fn degiorgi_constant_state_is_trivially_truncated() {
    let grid = Grid1D::new(0.0, 1.0, 200, Boundary::Periodic).unwrap();
    let u = ConservedState::new(1.0, 0.0);
    let rec = record(&grid, &ConservedField::constant(200, u), 0.3, 1);
    for dir in [Direction::BelowLambda1, Direction::AboveLambda2] {
        let rep = degiorgi_monitor(&rec, [0.15, 0.5], 0.05, &u, dir, &DeGiorgiParams::default()).unwrap();
        assert_eq!((rep.eps, rep.sup_b1), (0.0, 0.0));
        assert!(rep.masses.iter().all(|&m| m == 0.0));
        assert!(rep.truncated && rep.monotone);
    }
}

#[test]
fn degiorgi_sees_only_the_controlled_side_of_a_shock() {
    // 2-shock: λ1 barely moves across it while λ2 jumps by ~0.3
    let ur = ConservedState::new(1.0, 0.0);
    let (m, s) = hugoniot_state(ur, 1.3, 2).unwrap();
    let ul = ConservedState::new(1.3, m);
    let (l1l, l2l) = ul.invariants().unwrap();
    let (l1r, l2r) = ur.invariants().unwrap();
    assert!((l1l - l1r).abs() < 5e-3 && l2l - l2r > 0.25);

    let grid = Grid1D::new(-0.5, 0.5, 500, Boundary::Outflow).unwrap();
    let rec = record(&grid, &riemann_field(&grid, -0.2, ul, ur), 0.3, 1);
    let center = [0.15, -0.2 + s * 0.15];
    let bar = if l1l < l1r { ul } else { ur };
    let params = DeGiorgiParams::default();
    let below = degiorgi_monitor(&rec, center, 0.05, &bar, Direction::BelowLambda1, &params).unwrap();
    assert!(below.eps < 1e-3 && below.sup_b1 < 1e-2, "eps {}, sup {}", below.eps, below.sup_b1);
    assert!(below.truncated && below.monotone);
    assert!(below.masses.iter().all(|&m| m >= 0.0));

    // the uncontrolled side carries the whole jump
    let above = degiorgi_monitor(&rec, center, 0.05, &ur, Direction::AboveLambda2, &params).unwrap();
    assert!(above.sup_b1 > 0.25 && above.eps > 10.0 * below.eps);
}
