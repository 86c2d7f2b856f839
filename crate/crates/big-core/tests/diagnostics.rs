//! Energy functional and discrete norms against closed forms.

use big_core::algebra::V2;
use big_core::controller::ControllerParams;
use big_core::diagnostics::{energy, scalar_norms, vector_norms};
use big_core::grid::Grid;
use big_core::kinematics::FlowMap;
use big_core::model::{BodyState, FluidState, PhysicalParams};
use std::f64::consts::PI;

#[test]
fn energy_of_displaced_rest_is_pure_spring() {
    // uniform density, zero velocity, body displaced 0.05 from the target,
    // t past the ramp: E = k_p/2 |h1 − h|² = 0.00125 exactly, mass = 8π
    let grid = Grid::new(17, 32, 3.0);
    let fluid = FluidState::rest(&grid);
    let h1 = V2::new(0.05, 0.0);
    let body = BodyState::at_rest(V2::ZERO, h1);
    let map = FlowMap::identity(&grid);
    let phys = PhysicalParams::default();
    let ctrl = ControllerParams::default();
    let (m, j) = phys.body_mass_inertia();
    let e = energy(&grid, &fluid, &body, &map, 2.0, &phys, &ctrl, m, j, h1);
    assert_eq!(e.e_kin, 0.0);
    assert_eq!(e.e_compress, 0.0);
    assert_eq!(e.e_body, 0.0);
    assert!((e.e_spring - 0.00125).abs() <= 1e-18, "{}", e.e_spring);
    assert!((e.total() - 0.00125).abs() <= 1e-18);
    assert_eq!(e.dissipation(), 0.0);
    assert!((e.mass - 8.0 * PI).abs() <= 1e-12 * 8.0 * PI);
    // before the ramp starts the spring stores nothing
    let e0 = energy(&grid, &fluid, &body, &map, 0.0, &phys, &ctrl, m, j, h1);
    assert_eq!(e0.e_spring, 0.0);
}

#[test]
fn uniform_density_offset_has_closed_form_compression_energy() {
    // ρ̃ ≡ ε: E_compress = (p*/2ρ̄) ε² · |Ω \ B| with p* = aγρ̄^{γ−2};
    // defaults give ε²·8π, and the quadrature is exact for constants
    let grid = Grid::new(17, 32, 3.0);
    let mut fluid = FluidState::rest(&grid);
    let eps = 3e-3;
    for v in fluid.rho_tilde.iter_mut() {
        *v = eps;
    }
    let h1 = V2::ZERO;
    let body = BodyState::at_rest(V2::ZERO, h1);
    let map = FlowMap::identity(&grid);
    let phys = PhysicalParams::default();
    let ctrl = ControllerParams::default();
    let (m, j) = phys.body_mass_inertia();
    let e = energy(&grid, &fluid, &body, &map, 0.0, &phys, &ctrl, m, j, h1);
    let want = eps * eps * 8.0 * PI;
    assert!((e.e_compress - want).abs() <= 1e-12 * want, "{} vs {want}", e.e_compress);
    assert!((e.mass - (1.0 + eps) * 8.0 * PI).abs() <= 1e-12 * e.mass);
}

#[test]
fn body_energy_and_damping_are_quadratic_forms() {
    let grid = Grid::new(17, 32, 3.0);
    let fluid = FluidState::rest(&grid);
    let h1 = V2::ZERO;
    let mut body = BodyState::at_rest(V2::ZERO, h1);
    body.ell_tilde = V2::new(0.03, -0.04); // |ℓ̃| = 0.05
    body.omega_tilde = 0.2;
    let map = FlowMap::identity(&grid);
    let phys = PhysicalParams::default();
    let ctrl = ControllerParams::default();
    let (m, j) = phys.body_mass_inertia();
    let e = energy(&grid, &fluid, &body, &map, 0.0, &phys, &ctrl, m, j, h1);
    let want_body = 0.5 * m * 0.05 * 0.05 + 0.5 * j * 0.2 * 0.2;
    assert!((e.e_body - want_body).abs() <= 1e-15, "{} vs {want_body}", e.e_body);
    let want_damp = ctrl.k_d * 0.05 * 0.05;
    assert!((e.d_damp - want_damp).abs() <= 1e-15);
}

fn norm_errors(n_r: usize, n_theta: usize) -> (f64, f64, f64) {
    // f = r² = x² + y² on the annulus [1, 3]:
    //   ‖f‖²_{L²} = 2π ∫ r⁵ dr = 2π·728/6
    //   |f|²_{H¹} = ∮ |2r|² = 2π ∫ 4r³ dr = 160π
    //   |f|²_{H²} = ∮ (f_xx² + f_yy² + ½(f_xy+f_yx)²) = ∮ 8 = 64π
    let grid = Grid::new(n_r, n_theta, 3.0);
    let mut f = grid.scalar_field();
    for i in 0..grid.n_r {
        for j in 0..grid.n_theta {
            f[grid.idx(i, j)] = grid.r[i] * grid.r[i];
        }
    }
    let det = vec![1.0; grid.len()];
    let n = scalar_norms(&grid, &f, &det);
    let l2_sq = 2.0 * PI * 728.0 / 6.0;
    let h1_sq = l2_sq + 160.0 * PI;
    let h2_sq = h1_sq + 64.0 * PI;
    (
        (n.l2 - l2_sq.sqrt()).abs(),
        (n.h1 - h1_sq.sqrt()).abs(),
        (n.h2 - h2_sq.sqrt()).abs(),
    )
}

#[test]
fn norms_converge_to_polynomial_closed_forms() {
    let (c0, c1, c2) = norm_errors(33, 64);
    let (f0, f1, f2) = norm_errors(65, 128);
    for (name, c, f) in [("L2", c0, f0), ("H1", c1, f1), ("H2", c2, f2)] {
        let rate = (c / f).log2();
        assert!(rate > 1.9, "{name} convergence order {rate} ({c} -> {f})");
    }
}

#[test]
fn vector_norms_reduce_to_scalar_norms() {
    let grid = Grid::new(17, 32, 3.0);
    let mut f = grid.scalar_field();
    for i in 0..grid.n_r {
        for j in 0..grid.n_theta {
            let p = grid.node(i, j);
            f[grid.idx(i, j)] = (0.5 * p.x).sin() + 0.3 * p.y;
        }
    }
    let zeros = grid.scalar_field();
    let det = vec![1.0; grid.len()];
    let s = scalar_norms(&grid, &f, &det);
    let v = vector_norms(&grid, &f, &zeros, &det);
    assert_eq!(v.l2, s.l2);
    assert_eq!(v.h1, s.h1);
    assert_eq!(v.h2, s.h2);
}
