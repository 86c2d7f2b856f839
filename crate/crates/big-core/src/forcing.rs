//! The nonlinear right-hand sides of the transformed system, evaluated from
//! a state and flow-map snapshot. Node-level kernels are split out so tests
//! can drive them with arbitrary (non-grid) inputs.

use crate::algebra::{cross2, omega_cross, M2, Rot2, V2};
use crate::controller::ControllerParams;
use crate::grid::Grid;
use crate::kinematics::{FlowMap, D2Y};
use crate::model::{BodyState, FluidState, PhysicalParams};
use rayon::prelude::*;

/// Cached per-node combinations of the map Jacobians and the rotation that
/// all four evaluators share.
pub struct FrameProducts {
    /// (∇Y(X)·Q)ᵀ − I
    pub a: Vec<M2>,
    /// C_{ml} = Σ_p ∂Y_m/∂x_p ∂Y_l/∂x_p − δ_{ml}
    pub c: Vec<M2>,
    pub q: Rot2,
}

impl FrameProducts {
    pub fn new(map: &FlowMap, q: Rot2) -> FrameProducts {
        let qm = q.matrix();
        let n = map.grad_y_at_x.len();
        let mut a = Vec::with_capacity(n);
        let mut c = Vec::with_capacity(n);
        for k in 0..n {
            let gy = map.grad_y_at_x[k];
            a.push((gy * qm).transpose() - M2::I);
            c.push(gy * gy.transpose() - M2::I);
        }
        FrameProducts { a, c, q }
    }
}

/// All node-local ingredients of the F₁/F₂ kernels.
#[derive(Clone, Copy, Debug)]
pub struct NodeInputs {
    pub rho_tilde: f64,
    pub rho_bar: f64,
    pub rho0: f64,
    pub u: V2,
    /// ∂ũ_i/∂y_l
    pub grad_u: M2,
    /// hess_u[i][m][l] = ∂²ũ_i/∂y_m∂y_l
    pub hess_u: [[[f64; 2]; 2]; 2],
    pub lap_u: V2,
    pub grad_div_u: V2,
    pub grad_rho: V2,
    pub div_u: f64,
    /// ∇Y(X)
    pub grad_y: M2,
    /// ∂²Y_l/∂x_p∂x_i(X)
    pub d2y: D2Y,
    /// (∇Y Q)ᵀ − I
    pub a_mat: M2,
    /// ∇Y ∇Yᵀ − I
    pub c_mat: M2,
    pub q: M2,
    pub omega_tilde: f64,
}

/// F₁ = −(ρ̃+ρ̄) ∇ũ : [(∇Y(X)Q)ᵀ − I] − (ρ̃+ρ̄−ρ₀) div ũ.
pub fn f1_node(n: &NodeInputs) -> f64 {
    let rho = n.rho_tilde + n.rho_bar;
    let mut contraction = 0.0;
    for i in 0..2 {
        for l in 0..2 {
            contraction += n.grad_u.0[i][l] * n.a_mat.0[i][l];
        }
    }
    -rho * contraction - (rho - n.rho0) * n.div_u
}

/// F₂, all term groups, with 2-D reductions of the cross products. The
/// pressure-gradient group carries the sign of −(1/ρ)∇p∘X: the momentum
/// equation moves the Lamé part to the left, leaving
/// −aγρ^{γ−2} Σ_{j,l} Q_{ji} ∂ρ̃/∂y_l ∂Y_l/∂x_j on the right.
pub fn f2_node(n: &NodeInputs, phys: &PhysicalParams) -> V2 {
    let rho = n.rho_tilde + n.rho_bar;
    let inv_rho = 1.0 / rho;
    let mu = phys.mu;
    let lam_mu = phys.lambda + phys.mu;
    let coef_defect = (n.rho0 - rho) / (n.rho0 * rho);

    // −ω̃ × ũ
    let mut f = -omega_cross(n.omega_tilde, n.u);

    // trace over p of ∂²Y_l/∂x_p² per l
    let tr_d2y = [
        n.d2y[0][0][0] + n.d2y[0][1][1],
        n.d2y[1][0][0] + n.d2y[1][1][1],
    ];

    for i in 0..2 {
        let mut v = 0.0;

        // (μ/ρ) Σ_{m,l} ∂²ũ_i/∂y_m∂y_l C_{ml}
        for m in 0..2 {
            for l in 0..2 {
                v += mu * inv_rho * n.hess_u[i][m][l] * n.c_mat.0[m][l];
            }
        }

        // (μ/ρ) Σ_l ∂ũ_i/∂y_l Σ_p ∂²Y_l/∂x_p²
        for l in 0..2 {
            v += mu * inv_rho * n.grad_u.0[i][l] * tr_d2y[l];
        }

        // μ Δũ_i (ρ₀ − ρ)/(ρ₀ ρ)
        v += mu * n.lap_u.get(i) * coef_defect;

        // ((λ+μ)/ρ) Σ_{p,l} ∂ũ_p/∂y_l ∂²Y_l/∂x_p∂x_i
        for p in 0..2 {
            for l in 0..2 {
                v += lam_mu * inv_rho * n.grad_u.0[p][l] * n.d2y[l][p][i];
            }
        }

        // ((λ+μ)/ρ) Σ_{p,l,m} ∂²ũ_p/∂y_m∂y_l (∂Y_m/∂x_p − δ_mp) ∂Y_l/∂x_i
        for p in 0..2 {
            for l in 0..2 {
                for m in 0..2 {
                    let dmp = if m == p { 1.0 } else { 0.0 };
                    v += lam_mu
                        * inv_rho
                        * n.hess_u[p][m][l]
                        * (n.grad_y.0[m][p] - dmp)
                        * n.grad_y.0[l][i];
                }
            }
        }

        // ((λ+μ)/ρ) Σ_{p,l} ∂²ũ_p/∂y_p∂y_l (∂Y_l/∂x_i − δ_li)
        for p in 0..2 {
            for l in 0..2 {
                let dli = if l == i { 1.0 } else { 0.0 };
                v += lam_mu * inv_rho * n.hess_u[p][p][l] * (n.grad_y.0[l][i] - dli);
            }
        }

        // (λ+μ) [∇div ũ]_i (ρ₀ − ρ)/(ρ₀ ρ)
        v += lam_mu * n.grad_div_u.get(i) * coef_defect;

        // pressure group
        let mut pg = 0.0;
        for j in 0..2 {
            for l in 0..2 {
                pg += n.q.0[j][i] * n.grad_rho.get(l) * n.grad_y.0[l][j];
            }
        }
        v -= phys.a * phys.gamma * rho.powf(phys.gamma - 2.0) * pg;

        if i == 0 {
            f.x += v;
        } else {
            f.y += v;
        }
    }
    f
}

/// Per-node derivative fields of the fluid state, shared by the evaluators.
pub struct StateDerivatives {
    pub grad_u: Vec<M2>,
    pub hess_u: Vec<[[[f64; 2]; 2]; 2]>,
    pub lap_ux: Vec<f64>,
    pub lap_uy: Vec<f64>,
    pub grad_div_x: Vec<f64>,
    pub grad_div_y: Vec<f64>,
    pub grad_rho_x: Vec<f64>,
    pub grad_rho_y: Vec<f64>,
    pub div_u: Vec<f64>,
}

impl StateDerivatives {
    pub fn new(grid: &Grid, fluid: &FluidState) -> StateDerivatives {
        let grad_u = grid.velocity_gradient(&fluid.ux, &fluid.uy);
        let n = grid.len();
        // Hessians by composing the first-derivative operator
        let mut hess_u = vec![[[[0.0; 2]; 2]; 2]; n];
        for (comp, field) in [(0, &fluid.ux), (1, &fluid.uy)] {
            let (fx, fy) = grid.grad(field);
            let (fxx, fxy) = grid.grad(&fx);
            let (fyx, fyy) = grid.grad(&fy);
            for k in 0..n {
                hess_u[k][comp][0][0] = fxx[k];
                hess_u[k][comp][0][1] = fxy[k];
                hess_u[k][comp][1][0] = fyx[k];
                hess_u[k][comp][1][1] = fyy[k];
            }
        }
        let lap_ux = grid.laplacian(&fluid.ux);
        let lap_uy = grid.laplacian(&fluid.uy);
        let div_u = grid.divergence(&fluid.ux, &fluid.uy);
        let (grad_div_x, grad_div_y) = grid.grad(&div_u);
        let (grad_rho_x, grad_rho_y) = grid.grad(&fluid.rho_tilde);
        StateDerivatives {
            grad_u,
            hess_u,
            lap_ux,
            lap_uy,
            grad_div_x,
            grad_div_y,
            grad_rho_x,
            grad_rho_y,
            div_u,
        }
    }

    pub fn node_inputs(
        &self,
        k: usize,
        fluid: &FluidState,
        rho0: &[f64],
        rho_bar: f64,
        map: &FlowMap,
        fp: &FrameProducts,
        omega_tilde: f64,
    ) -> NodeInputs {
        NodeInputs {
            rho_tilde: fluid.rho_tilde[k],
            rho_bar,
            rho0: rho0[k],
            u: fluid.u(k),
            grad_u: self.grad_u[k],
            hess_u: self.hess_u[k],
            lap_u: V2::new(self.lap_ux[k], self.lap_uy[k]),
            grad_div_u: V2::new(self.grad_div_x[k], self.grad_div_y[k]),
            grad_rho: V2::new(self.grad_rho_x[k], self.grad_rho_y[k]),
            div_u: self.div_u[k],
            grad_y: map.grad_y_at_x[k],
            d2y: map.d2y[k],
            a_mat: fp.a[k],
            c_mat: fp.c[k],
            q: fp.q.matrix(),
            omega_tilde,
        }
    }
}

/// F₁ on the whole grid.
pub fn eval_f1(
    grid: &Grid,
    fluid: &FluidState,
    rho0: &[f64],
    rho_bar: f64,
    derivs: &StateDerivatives,
    fp: &FrameProducts,
) -> Vec<f64> {
    (0..grid.len())
        .map(|k| {
            let rho = fluid.rho_tilde[k] + rho_bar;
            let mut contraction = 0.0;
            for i in 0..2 {
                for l in 0..2 {
                    contraction += derivs.grad_u[k].0[i][l] * fp.a[k].0[i][l];
                }
            }
            -rho * contraction - (rho - rho0[k]) * derivs.div_u[k]
        })
        .collect()
}

/// F₂ on the whole grid (used at interior nodes by the velocity solve).
#[allow(clippy::too_many_arguments)]
pub fn eval_f2(
    grid: &Grid,
    fluid: &FluidState,
    rho0: &[f64],
    phys: &PhysicalParams,
    derivs: &StateDerivatives,
    fp: &FrameProducts,
    map: &FlowMap,
    omega_tilde: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = grid.len();
    let mut fx = vec![0.0; n];
    let mut fy = vec![0.0; n];
    let rho_bar = phys.rho_bar;
    fx.par_iter_mut()
        .zip(fy.par_iter_mut())
        .enumerate()
        .for_each(|(k, (ox, oy))| {
            let ni = derivs.node_inputs(k, fluid, rho0, rho_bar, map, fp, omega_tilde);
            let v = f2_node(&ni, phys);
            *ox = v.x;
            *oy = v.y;
        });
    (fx, fy)
}

/// The stress-like boundary integrand of F₃/F₄ at one inner-boundary node:
/// μ(Q∇ũ∇Y + (Q∇ũ∇Y)ᵀ) + λ tr(Q∇ũ∇Y)·I − a(ρ̄+ρ̃)^γ·I.
/// The paper's trace term is implemented with the identity factor, matching
/// the stress definition.
pub fn boundary_integrand(
    q: M2,
    grad_u: M2,
    grad_y: M2,
    rho: f64,
    phys: &PhysicalParams,
) -> M2 {
    let g = q * grad_u * grad_y;
    let mut m = (g + g.transpose()) * phys.mu;
    let tr = phys.lambda * g.trace() - phys.a * rho.powf(phys.gamma);
    m.0[0][0] += tr;
    m.0[1][1] += tr;
    m
}

/// Unit normal to ∂B(0), directed into the ball: n(θ) = −e_r.
pub fn inner_normal(grid: &Grid, j: usize) -> V2 {
    V2::new(-grid.cos_t[j], -grid.sin_t[j])
}

/// F₃ = −m(ω̃×ℓ̃) − ∮ [integrand]·n dΓ − k_p Qᵀh̃ − k_d ℓ̃.
/// The boundary quadrature is the rectangle rule in θ on the unit circle
/// (spectrally accurate for smooth periodic integrands).
#[allow(clippy::too_many_arguments)]
pub fn eval_f3(
    grid: &Grid,
    fluid: &FluidState,
    body: &BodyState,
    map: &FlowMap,
    derivs: &StateDerivatives,
    phys: &PhysicalParams,
    ctrl: &ControllerParams,
    m_body: f64,
    t: f64,
) -> V2 {
    let qm = body.q.matrix();
    let mut integral = V2::ZERO;
    for j in 0..grid.n_theta {
        let k = grid.idx(0, j);
        let rho = fluid.rho_tilde[k] + phys.rho_bar;
        let m = boundary_integrand(qm, derivs.grad_u[k], map.grad_y_at_x[k], rho, phys);
        integral += (m * inner_normal(grid, j)) * grid.dtheta;
    }
    -omega_cross(body.omega_tilde, body.ell_tilde) * m_body - integral
        + ctrl.feedback_lagrangian(t, body.h_tilde, body.ell_tilde, body.q)
}

/// F₄ = −∮ (y − h0) × [integrand]·n dΓ (2-D scalar torque).
pub fn eval_f4(
    grid: &Grid,
    fluid: &FluidState,
    body: &BodyState,
    map: &FlowMap,
    derivs: &StateDerivatives,
    phys: &PhysicalParams,
) -> f64 {
    let qm = body.q.matrix();
    let mut torque = 0.0;
    for j in 0..grid.n_theta {
        let k = grid.idx(0, j);
        let rho = fluid.rho_tilde[k] + phys.rho_bar;
        let m = boundary_integrand(qm, derivs.grad_u[k], map.grad_y_at_x[k], rho, phys);
        let y = grid.node(0, j);
        torque += cross2(y, m * inner_normal(grid, j)) * grid.dtheta;
    }
    -torque
}
