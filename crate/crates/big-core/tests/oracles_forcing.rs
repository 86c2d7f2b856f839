//! Node-level oracles for the forcing kernels: the F₁/F₂ evaluators are
//! checked against a from-scratch index-sum reimplementation on seeded random
//! inputs, and the boundary functionals F₃/F₄ against closed forms.

use big_core::algebra::{M2, Rot2, V2};
use big_core::controller::ControllerParams;
use big_core::forcing::{eval_f3, eval_f4, f1_node, f2_node, NodeInputs, StateDerivatives};
use big_core::grid::Grid;
use big_core::kinematics::FlowMap;
use big_core::model::{BodyState, FluidState, PhysicalParams};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const KERNEL_REL_TOL: f64 = 1e-12;
const EXACT_TOL: f64 = 1e-13;

fn delta(i: usize, l: usize) -> f64 {
    if i == l {
        1.0
    } else {
        0.0
    }
}

/// F₁ rebuilt from raw index sums (recomputes the frame product from ∇Y, Q
/// instead of trusting the cached a_mat).
fn oracle_f1(n: &NodeInputs) -> f64 {
    let rho = n.rho_tilde + n.rho_bar;
    let gy = n.grad_y.0;
    let q = n.q.0;
    let gu = n.grad_u.0;
    let mut s = 0.0;
    for i in 0..2 {
        for l in 0..2 {
            let mut yl_q = 0.0;
            for p in 0..2 {
                yl_q += gy[l][p] * q[p][i];
            }
            s += gu[i][l] * (yl_q - delta(i, l));
        }
    }
    let mut div = 0.0;
    for i in 0..2 {
        div += gu[i][i];
    }
    -rho * s - (rho - n.rho0) * div
}

/// F₂ rebuilt term by term as plain index sums over raw arrays.
fn oracle_f2(n: &NodeInputs, phys: &PhysicalParams) -> [f64; 2] {
    let rho = n.rho_tilde + n.rho_bar;
    let gy = n.grad_y.0;
    let q = n.q.0;
    let gu = n.grad_u.0;
    let hu = n.hess_u;
    let mu = phys.mu;
    let lm = phys.lambda + phys.mu;
    let defect = (n.rho0 - rho) / (n.rho0 * rho);
    let lap = [n.lap_u.x, n.lap_u.y];
    let gdiv = [n.grad_div_u.x, n.grad_div_u.y];
    let grho = [n.grad_rho.x, n.grad_rho.y];

    // advected rotation: −ω̃ × ũ
    let mut out = [n.omega_tilde * n.u.y, -n.omega_tilde * n.u.x];

    for i in 0..2 {
        let mut visc = 0.0;
        for m in 0..2 {
            for l in 0..2 {
                let mut c_ml = -delta(m, l);
                for p in 0..2 {
                    c_ml += gy[m][p] * gy[l][p];
                }
                visc += hu[i][m][l] * c_ml;
            }
        }
        for l in 0..2 {
            visc += gu[i][l] * (n.d2y[l][0][0] + n.d2y[l][1][1]);
        }
        out[i] += mu * visc / rho + mu * lap[i] * defect;

        let mut comp = 0.0;
        for l in 0..2 {
            for p in 0..2 {
                comp += gu[p][l] * n.d2y[l][p][i];
                for m in 0..2 {
                    comp += hu[p][m][l] * (gy[m][p] - delta(m, p)) * gy[l][i];
                }
            }
            for p in 0..2 {
                comp += hu[p][p][l] * (gy[l][i] - delta(l, i));
            }
        }
        out[i] += lm * comp / rho + lm * gdiv[i] * defect;

        let mut press = 0.0;
        for j in 0..2 {
            for l in 0..2 {
                press += q[j][i] * grho[l] * gy[l][j];
            }
        }
        out[i] -= phys.a * phys.gamma * rho.powf(phys.gamma - 2.0) * press;
    }
    out
}

fn random_inputs(rng: &mut ChaCha8Rng) -> NodeInputs {
    let mut r = |s: f64| rng.gen_range(-s..s);
    let grad_y = M2([[1.0 + r(0.1), r(0.1)], [r(0.1), 1.0 + r(0.1)]]);
    let q = Rot2 { angle: r(3.0) }.matrix();
    let a_mat = (grad_y * q).transpose() - M2::I;
    let c_mat = grad_y * grad_y.transpose() - M2::I;
    let mut d2y = [[[0.0; 2]; 2]; 2];
    for l in 0..2 {
        for p in 0..2 {
            for i in p..2 {
                let v = r(0.05);
                d2y[l][p][i] = v;
                d2y[l][i][p] = v;
            }
        }
    }
    let mut hess_u = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for m in 0..2 {
            for l in m..2 {
                let v = r(1.0);
                hess_u[i][m][l] = v;
                hess_u[i][l][m] = v;
            }
        }
    }
    let grad_u = M2([[r(1.0), r(1.0)], [r(1.0), r(1.0)]]);
    NodeInputs {
        rho_tilde: r(0.3),
        rho_bar: 1.0,
        rho0: 1.0 + r(0.3),
        u: V2::new(r(1.0), r(1.0)),
        grad_u,
        hess_u,
        lap_u: V2::new(hess_u[0][0][0] + hess_u[0][1][1], hess_u[1][0][0] + hess_u[1][1][1]),
        grad_div_u: V2::new(r(1.0), r(1.0)),
        grad_rho: V2::new(r(1.0), r(1.0)),
        div_u: grad_u.trace(),
        grad_y,
        d2y,
        a_mat,
        c_mat,
        q,
        omega_tilde: r(0.5),
    }
}

#[test]
fn node_kernels_match_independent_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF0C1);
    let phys = PhysicalParams { lambda: 0.3, gamma: 1.8, ..Default::default() };
    for case in 0..100 {
        let n = random_inputs(&mut rng);
        let f1 = f1_node(&n);
        let f1_ref = oracle_f1(&n);
        let d1 = (f1 - f1_ref).abs() / (1.0 + f1_ref.abs());
        assert!(d1 <= KERNEL_REL_TOL, "case {case}: f1 {f1} vs {f1_ref}");

        let f2 = f2_node(&n, &phys);
        let f2_ref = oracle_f2(&n, &phys);
        for (got, want) in [(f2.x, f2_ref[0]), (f2.y, f2_ref[1])] {
            let d = (got - want).abs() / (1.0 + want.abs());
            assert!(d <= KERNEL_REL_TOL, "case {case}: f2 {got} vs {want}");
        }
    }
}

#[test]
fn kernels_vanish_on_trivial_state() {
    // identity map, no motion, ρ uniform at the reference density
    let n = NodeInputs {
        rho_tilde: 0.0,
        rho_bar: 1.0,
        rho0: 1.0,
        u: V2::ZERO,
        grad_u: M2::ZERO,
        hess_u: [[[0.0; 2]; 2]; 2],
        lap_u: V2::ZERO,
        grad_div_u: V2::ZERO,
        grad_rho: V2::ZERO,
        div_u: 0.0,
        grad_y: M2::I,
        d2y: [[[0.0; 2]; 2]; 2],
        a_mat: M2::ZERO,
        c_mat: M2::ZERO,
        q: M2::I,
        omega_tilde: 0.0,
    };
    let phys = PhysicalParams::default();
    assert!(f1_node(&n).abs() <= EXACT_TOL);
    assert!(f2_node(&n, &phys).norm_inf() <= EXACT_TOL);

    // a uniform density offset alone still produces no forcing
    let offset = NodeInputs { rho_tilde: 0.2, rho0: 1.2, ..n };
    assert!(f1_node(&offset).abs() <= EXACT_TOL);
    assert!(f2_node(&offset, &phys).norm_inf() <= EXACT_TOL);
}

#[test]
fn pressure_group_reduces_to_gradient_at_identity() {
    // with the map and rotation at identity and the velocity at rest, F₂
    // must collapse to −aγρ^{γ−2}∇ρ̃ exactly
    let mut rng = ChaCha8Rng::seed_from_u64(0xF0C2);
    let phys = PhysicalParams { gamma: 2.4, a: 0.7, ..Default::default() };
    for _ in 0..20 {
        let grad_rho = V2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let rho_tilde = rng.gen_range(-0.3..0.3);
        let n = NodeInputs {
            rho_tilde,
            rho_bar: 1.0,
            rho0: 1.0,
            u: V2::ZERO,
            grad_u: M2::ZERO,
            hess_u: [[[0.0; 2]; 2]; 2],
            lap_u: V2::ZERO,
            grad_div_u: V2::ZERO,
            grad_rho,
            div_u: 0.0,
            grad_y: M2::I,
            d2y: [[[0.0; 2]; 2]; 2],
            a_mat: M2::ZERO,
            c_mat: M2::ZERO,
            q: M2::I,
            omega_tilde: 0.0,
        };
        let rho = 1.0 + rho_tilde;
        let want = grad_rho * (-phys.a * phys.gamma * rho.powf(phys.gamma - 2.0));
        let got = f2_node(&n, &phys);
        assert!((got - want).norm_inf() <= KERNEL_REL_TOL, "{got:?} vs {want:?}");
    }
}

#[test]
fn f3_rest_fluid_is_pure_feedback() {
    // with the fluid at uniform rest the stress integrand is a constant
    // multiple of the identity; its flux through the closed circle vanishes,
    // leaving exactly the PD feedback term
    let grid = Grid::new(17, 32, 3.0);
    let fluid = FluidState::rest(&grid);
    let map = FlowMap::identity(&grid);
    let derivs = StateDerivatives::new(&grid, &fluid);
    let phys = PhysicalParams::default();
    let ctrl = ControllerParams::default();
    let body = BodyState {
        h_tilde: V2::new(-0.03, 0.02),
        ell_tilde: V2::new(0.01, -0.04),
        omega_tilde: 0.0,
        q: Rot2 { angle: 0.7 },
    };
    let t = 2.0; // past the ramp, k_p = 1
    let f3 = eval_f3(&grid, &fluid, &body, &map, &derivs, &phys, &ctrl, 1.0, t);
    let want =
        body.q.apply_t(body.h_tilde) * (-ctrl.kp(t)) - body.ell_tilde * ctrl.k_d;
    assert!((f3 - want).norm_inf() <= 1e-12, "{f3:?} vs {want:?}");
}

#[test]
fn f4_vanishes_for_rest_and_rigid_states() {
    let grid = Grid::new(17, 32, 3.0);
    let phys = PhysicalParams::default();
    let map = FlowMap::identity(&grid);
    let body = BodyState::at_rest(V2::ZERO, V2::ZERO);

    let rest = FluidState::rest(&grid);
    let derivs = StateDerivatives::new(&grid, &rest);
    let torque = eval_f4(&grid, &rest, &body, &map, &derivs, &phys);
    assert!(torque.abs() <= EXACT_TOL, "rest torque {torque}");

    // a rigid rotation field: Q∇ũ∇Y is skew in exact arithmetic, so the
    // torque is pure angular-difference truncation and must decay at second
    // order in Δθ
    let rigid_torque = |n_theta: usize| {
        let grid = Grid::new(17, n_theta, 3.0);
        let mut spin = FluidState::rest(&grid);
        for i in 0..grid.n_r {
            for j in 0..grid.n_theta {
                let k = grid.idx(i, j);
                let y = grid.node(i, j);
                spin.ux[k] = -0.05 * y.y;
                spin.uy[k] = 0.05 * y.x;
            }
        }
        let map = FlowMap::identity(&grid);
        let derivs = StateDerivatives::new(&grid, &spin);
        eval_f4(&grid, &spin, &body, &map, &derivs, &phys)
    };
    let coarse = rigid_torque(32).abs();
    let fine = rigid_torque(64).abs();
    assert!(coarse <= 3e-3, "rigid torque {coarse}");
    let rate = (coarse / fine).log2();
    assert!(rate > 1.9, "rigid torque Δθ-order {rate}");
}

#[test]
fn boundary_quadrature_is_exact_for_trigonometric_data() {
    // ρ̃ = ε sin θ with γ = 2 gives ∮ aρ² e_r dθ = (0, 2πaε) in closed form;
    // the rectangle rule integrates low-degree trigonometric polynomials
    // exactly, so both grid resolutions must hit machine precision
    let eps = 1e-2;
    let phys = PhysicalParams::default();
    let ctrl = ControllerParams::default();
    for n_theta in [32, 64] {
        let grid = Grid::new(17, n_theta, 3.0);
        let mut fluid = FluidState::rest(&grid);
        for i in 0..grid.n_r {
            for j in 0..grid.n_theta {
                fluid.rho_tilde[grid.idx(i, j)] = eps * grid.sin_t[j];
            }
        }
        let map = FlowMap::identity(&grid);
        let derivs = StateDerivatives::new(&grid, &fluid);
        let body = BodyState::at_rest(V2::ZERO, V2::ZERO);
        let f3 = eval_f3(&grid, &fluid, &body, &map, &derivs, &phys, &ctrl, 0.0, 1.0);
        let want = V2::new(0.0, -2.0 * std::f64::consts::PI * phys.a * eps);
        assert!(
            (f3 - want).norm_inf() <= 1e-12 * (1.0 + want.norm_inf()),
            "n_theta={n_theta}: {f3:?} vs {want:?}"
        );
    }
}
