//! Flow-map and rotation evolution. The map X(t,·) is stored as the
//! displacement X − y so the identity map is exact; Jacobians, their
//! per-node inverses and the second derivatives of the inverse map are
//! recomputed from the displacement after every update.

use crate::algebra::{M2, Rot2, V2};
use crate::error::StepError;
use crate::grid::Grid;
use crate::model::{BodyState, FluidState, Geometry};
use rayon::prelude::*;

/// Second derivatives of the inverse map at X: d2y[l][p][i] = ∂²Y_l/∂x_p∂x_i(X).
pub type D2Y = [[[f64; 2]; 2]; 2];

#[derive(Clone, Debug)]
pub struct FlowMap {
    /// displacement X − y, Cartesian components
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    /// ∇X per node
    pub grad_x: Vec<M2>,
    /// ∇Y(X) = (∇X)⁻¹ per node
    pub grad_y_at_x: Vec<M2>,
    /// det ∇X per node
    pub det_j: Vec<f64>,
    /// ∂²Y/∂x∂x(X) per node
    pub d2y: Vec<D2Y>,
}

impl FlowMap {
    pub fn identity(grid: &Grid) -> FlowMap {
        let n = grid.len();
        FlowMap {
            dx: vec![0.0; n],
            dy: vec![0.0; n],
            grad_x: vec![M2::I; n],
            grad_y_at_x: vec![M2::I; n],
            det_j: vec![1.0; n],
            d2y: vec![[[[0.0; 2]; 2]; 2]; n],
        }
    }

    /// Current map position X(y) for node k at reference point y.
    pub fn x_of(&self, y: V2, k: usize) -> V2 {
        V2::new(y.x + self.dx[k], y.y + self.dy[k])
    }

    /// max‖∇X − I‖_∞ over nodes: the distortion monitor.
    pub fn distortion(&self) -> f64 {
        self.grad_x
            .iter()
            .map(|g| (*g - M2::I).norm_inf())
            .fold(0.0, f64::max)
    }

    /// Recompute ∇X, ∇Y(X), det and second derivatives from the displacement.
    pub fn refresh(&mut self, grid: &Grid, t: f64) -> Result<(), StepError> {
        let (gxx, gxy) = grid.grad(&self.dx);
        let (gyx, gyy) = grid.grad(&self.dy);
        let n = grid.len();
        for k in 0..n {
            let g = M2([[1.0 + gxx[k], gxy[k]], [gyx[k], 1.0 + gyy[k]]]);
            let det = g.det();
            if !(det > 0.0) {
                return Err(StepError::MapDegenerate { t, min_det: det });
            }
            self.grad_x[k] = g;
            self.det_j[k] = det;
            // exact 2×2 inverse
            self.grad_y_at_x[k] = g.inverse().expect("det > 0 checked above");
        }
        self.refresh_second_derivatives(grid);
        Ok(())
    }

    /// ∂²Y_l/∂x_p∂x_i(X) from ∂/∂y_m[∂Y_l/∂x_i(X)] = Σ_p ∂²Y_l/∂x_p∂x_i ∂X_p/∂y_m,
    /// solved per node with the exact 2×2 inverse (∇Xᵀ)⁻¹ = ∇Y(X)ᵀ.
    fn refresh_second_derivatives(&mut self, grid: &Grid) {
        // y-derivatives of each component of ∇Y(X)
        let n = grid.len();
        let mut comp = vec![0.0; n];
        // dgy[l][i] = (∂/∂y_0, ∂/∂y_1) of gradY[l][i]
        let mut dgy = vec![[[V2::ZERO; 2]; 2]; n];
        for l in 0..2 {
            for i in 0..2 {
                for k in 0..n {
                    comp[k] = self.grad_y_at_x[k].0[l][i];
                }
                let (cx, cy) = grid.grad(&comp);
                for k in 0..n {
                    dgy[k][l][i] = V2::new(cx[k], cy[k]);
                }
            }
        }
        self.d2y
            .par_iter_mut()
            .enumerate()
            .for_each(|(k, out)| {
                let gyt = self.grad_y_at_x[k].transpose();
                for l in 0..2 {
                    for i in 0..2 {
                        // g_m = ∂/∂y_m gradY[l][i]; H[·][i] = (∇Xᵀ)⁻¹ g
                        let h = gyt * dgy[k][l][i];
                        out[l][0][i] = h.x;
                        out[l][1][i] = h.y;
                    }
                }
            });
    }
}

/// 2-D rotation update for Q' = Q𝔸(ω̃): exact angle integration.
pub fn advance_rotation(q: Rot2, omega_tilde_dt: f64) -> Rot2 {
    Rot2::new(q.angle + omega_tilde_dt)
}

/// Trapezoidal accumulation of X' = Qũ over one step:
/// disp += dt/2 (Qⁿũⁿ + Qⁿ⁺¹ũⁿ⁺¹). Jacobians must be refreshed afterwards.
#[allow(clippy::too_many_arguments)]
pub fn advance_flowmap(
    map_prev: &FlowMap,
    q_prev: Rot2,
    u_prev: (&[f64], &[f64]),
    q_next: Rot2,
    u_next: (&[f64], &[f64]),
    dt: f64,
    grid: &Grid,
    t_next: f64,
) -> Result<FlowMap, StepError> {
    let mut map = map_prev.clone();
    let half = 0.5 * dt;
    for k in 0..grid.len() {
        let a = q_prev.apply(V2::new(u_prev.0[k], u_prev.1[k]));
        let b = q_next.apply(V2::new(u_next.0[k], u_next.1[k]));
        map.dx[k] += half * (a.x + b.x);
        map.dy[k] += half * (a.y + b.y);
    }
    map.refresh(grid, t_next)?;
    Ok(map)
}

/// Push the Lagrangian state back to the physical frame: positions X(y),
/// ρ = ρ̃ + ρ̄ and u = Qũ sampled at those positions.
pub fn to_physical(
    grid: &Grid,
    fluid: &FluidState,
    body: &BodyState,
    map: &FlowMap,
    rho_bar: f64,
) -> (Vec<V2>, Vec<f64>, Vec<V2>) {
    let n = grid.len();
    let mut pos = Vec::with_capacity(n);
    let mut rho = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    for i in 0..grid.n_r {
        for j in 0..grid.n_theta {
            let k = grid.idx(i, j);
            pos.push(map.x_of(grid.node(i, j), k));
            rho.push(fluid.rho_tilde[k] + rho_bar);
            u.push(body.q.apply(fluid.u(k)));
        }
    }
    (pos, rho, u)
}

/// No-contact guard: ok iff R_Ω − |h − center| > 1 + η (strict).
pub fn geometry_guard(h: V2, geom: &Geometry, t: f64) -> Result<(), StepError> {
    let margin = geom.container_radius - (h - geom.h0).norm();
    let required = 1.0 + geom.eta;
    if margin > required {
        Ok(())
    } else {
        Err(StepError::geometry(t, h, margin, required))
    }
}
