//! End-to-end behavior of the time marcher on short runs: fixed points,
//! compatibility residuals, guard behavior.

use big_core::algebra::V2;
use big_core::cascade::TimeScheme;
use big_core::controller::ControllerParams;
use big_core::grid::Grid;
use big_core::marcher::{
    compat_residuals, initial_state, make_initial, picard_step, run, InitialKind,
    MarchConfig, Sim,
};
use big_core::model::{Geometry, PhysicalParams};

fn sim(n_r: usize, n_theta: usize, h1: V2, dt: f64) -> Sim {
    let grid = Grid::new(n_r, n_theta, 3.0);
    let phys = PhysicalParams::default();
    let geom = Geometry { h1, ..Default::default() };
    let ctrl = ControllerParams::default();
    let rho0 = vec![phys.rho_bar; grid.len()];
    Sim::new(grid, phys, geom, ctrl, rho0, dt, TimeScheme::ImplicitEuler)
}

#[test]
fn equilibrium_is_a_fixed_point_of_one_step() {
    let s = sim(17, 32, V2::ZERO, 1e-3);
    let data = make_initial(InitialKind::DisplacedRest, &s);
    let state = initial_state(&s, &data);
    let cfg = MarchConfig { t_final: 0.0, ..Default::default() };
    let (next, stats) = picard_step(&s, &state, &cfg).unwrap();
    assert_eq!(stats.iters, 1, "equilibrium must converge in one iteration");
    let umax = next
        .fluid
        .ux
        .iter()
        .chain(next.fluid.uy.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    assert!(umax <= 1e-12, "velocity {umax} at equilibrium");
    assert!(next.body.h_tilde.norm() <= 1e-12);
}

#[test]
fn zero_horizon_run_yields_single_record() {
    let s = sim(17, 32, V2::new(0.05, 0.0), 1e-3);
    let data = make_initial(InitialKind::DisplacedRest, &s);
    let state = initial_state(&s, &data);
    let cfg = MarchConfig { t_final: 0.0, ..Default::default() };
    let traj = run(&s, state, &cfg, |_, _, _| {}).unwrap();
    assert_eq!(traj.records.len(), 1);
    assert_eq!(traj.records[0].t, 0.0);
}

#[test]
fn displaced_rest_short_run_moves_toward_target() {
    let s = sim(17, 32, V2::new(0.05, 0.0), 1e-3);
    let data = make_initial(InitialKind::DisplacedRest, &s);
    let state = initial_state(&s, &data);
    let cfg = MarchConfig { t_final: 0.5, track_residual: true, ..Default::default() };
    let traj = run(&s, state, &cfg, |_, _, _| {}).unwrap();
    let first = &traj.records[0];
    let last = traj.records.last().unwrap();
    let d0 = (first.h - s.geom.h1).norm();
    let d1 = (last.h - s.geom.h1).norm();
    assert!(d1 < d0, "|h-h1| did not shrink: {d0} -> {d1}");
    // mass conserved tightly even on the coarse grid over a short window
    let drift = (last.energy.mass - first.energy.mass).abs() / first.energy.mass;
    assert!(drift < 1e-8, "mass drift {drift}");
    // contraction well inside the admissible band
    let worst = traj
        .records
        .iter()
        .fold(0.0_f64, |m, r| m.max(r.contraction_max));
    assert!(worst <= 0.5, "contraction ratio {worst}");
    // spring energy starts at zero (ramped gain)
    assert_eq!(first.energy.e_spring, 0.0);
}

#[test]
fn compat_residuals_of_generators() {
    let s = sim(33, 64, V2::new(0.05, 0.0), 1e-3);
    let rest = make_initial(InitialKind::DisplacedRest, &s);
    let r = compat_residuals(&s, &rest);
    assert!(r.max() <= 1e-12, "displaced-rest residuals {r:?}");

    let bump = make_initial(InitialKind::DensityBump { eps: 1e-2 }, &s);
    let r = compat_residuals(&s, &bump);
    assert!(r.max() <= 1e-8, "density-bump residuals {r:?}");

    // degenerate bump reduces to uniform rest data
    let zero = make_initial(InitialKind::DensityBump { eps: 0.0 }, &s);
    assert_eq!(zero.rho0, rest.rho0);

    // rigid-spin data satisfies the trace condition exactly but carries an
    // O(ω₀²) centrifugal imbalance in the acceleration condition (the
    // boundary stress of a rigid field vanishes, the −ω₀×(ω₀×y) term does
    // not); verify the magnitude and the quadratic scaling in ω₀
    let spin = make_initial(InitialKind::RigidSpin { omega0: 0.01 }, &s);
    let r = compat_residuals(&s, &spin);
    assert!(r.r1 <= 1e-14, "rigid-spin trace residual {r:?}");
    assert!(r.r3 <= 2e-4, "rigid-spin balance residual {r:?}");
    // superlinear in ω₀ (quadratic centrifugal part + linear truncation part)
    let spin_half = make_initial(InitialKind::RigidSpin { omega0: 0.005 }, &s);
    let r_half = compat_residuals(&s, &spin_half);
    let rate = r.r3 / r_half.r3;
    assert!(rate > 2.0 && rate < 4.5, "rigid-spin residual ω₀-scaling {rate}");
}

#[test]
fn constructed_trace_violation_is_measured() {
    let s = sim(17, 32, V2::new(0.05, 0.0), 1e-3);
    let mut data = make_initial(InitialKind::DisplacedRest, &s);
    // violate the outer no-slip trace by a constant
    for j in 0..s.grid.n_theta {
        let k = s.grid.idx(s.grid.n_r - 1, j);
        data.ux[k] = 0.25;
    }
    let r = compat_residuals(&s, &data);
    assert!((r.r1 - 0.25).abs() < 1e-14, "r1 = {}", r.r1);
}

#[test]
fn huge_displacement_aborts_cleanly() {
    // target far outside the admissible band: the geometry guard must fire
    // before any record is emitted with garbage in it
    let grid = Grid::new(17, 32, 3.0);
    let phys = PhysicalParams::default();
    let geom = Geometry { h1: V2::new(1.5, 0.0), eta: 0.5, ..Default::default() };
    let ctrl = ControllerParams::default();
    let rho0 = vec![phys.rho_bar; grid.len()];
    let s = Sim::new(grid, phys, geom, ctrl, rho0, 1e-3, TimeScheme::ImplicitEuler);
    let data = make_initial(InitialKind::DisplacedRest, &s);
    let state = initial_state(&s, &data);
    let cfg = MarchConfig { t_final: 30.0, ..Default::default() };
    let err = run(&s, state, &cfg, |_, _, _| {}).err().expect("must abort");
    // either the geometry/distortion guard or a diverging fixed point, but
    // always a structured abort
    assert!(matches!(err.exit_class(), 2 | 3), "unexpected abort class: {err}");
}
