//! Polar grid on the reference annulus {1 ≤ |y − h0| ≤ R} and the
//! finite-difference machinery used everywhere else: chain-rule Cartesian
//! derivatives, the component-wise polar Laplacian, and trapezoid-in-r ×
//! rectangle-in-θ quadrature.
//!
//! Fields are flat `Vec<f64>` in row-major order with r outer, θ inner:
//! index = i·n_theta + j. Velocity fields store Cartesian components sampled
//! at the polar nodes.

use crate::algebra::{M2, V2};

#[derive(Clone, Debug)]
pub struct Grid {
    pub n_r: usize,
    pub n_theta: usize,
    pub r_inner: f64,
    pub r_outer: f64,
    pub dr: f64,
    pub dtheta: f64,
    pub r: Vec<f64>,
    pub cos_t: Vec<f64>,
    pub sin_t: Vec<f64>,
}

impl Grid {
    pub fn new(n_r: usize, n_theta: usize, r_outer: f64) -> Grid {
        assert!(n_r >= 5 && n_theta >= 8, "grid too coarse for the stencils");
        assert!(r_outer > 1.0);
        let r_inner = 1.0;
        let dr = (r_outer - r_inner) / (n_r - 1) as f64;
        let dtheta = std::f64::consts::TAU / n_theta as f64;
        let r = (0..n_r).map(|i| r_inner + i as f64 * dr).collect();
        let cos_t = (0..n_theta).map(|j| (j as f64 * dtheta).cos()).collect();
        let sin_t = (0..n_theta).map(|j| (j as f64 * dtheta).sin()).collect();
        Grid { n_r, n_theta, r_inner, r_outer, dr, dtheta, r, cos_t, sin_t }
    }

    pub fn len(&self) -> usize {
        self.n_r * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    /// Node position relative to the grid center h0.
    #[inline]
    pub fn node(&self, i: usize, j: usize) -> V2 {
        V2::new(self.r[i] * self.cos_t[j], self.r[i] * self.sin_t[j])
    }

    pub fn scalar_field(&self) -> Vec<f64> {
        vec![0.0; self.len()]
    }

    // ---- 1-D building blocks ----

    /// ∂f/∂r, second order: central interior, one-sided 3-point at the ends.
    pub fn d_r(&self, f: &[f64], out: &mut [f64]) {
        let (nr, nt, dr) = (self.n_r, self.n_theta, self.dr);
        for j in 0..nt {
            out[j] = (-3.0 * f[j] + 4.0 * f[nt + j] - f[2 * nt + j]) / (2.0 * dr);
            let l = (nr - 1) * nt;
            out[l + j] =
                (3.0 * f[l + j] - 4.0 * f[l - nt + j] + f[l - 2 * nt + j]) / (2.0 * dr);
        }
        for i in 1..nr - 1 {
            for j in 0..nt {
                let k = i * nt + j;
                out[k] = (f[k + nt] - f[k - nt]) / (2.0 * dr);
            }
        }
    }

    /// ∂²f/∂r², second order: central interior, one-sided 4-point at the ends.
    pub fn d_rr(&self, f: &[f64], out: &mut [f64]) {
        let (nr, nt) = (self.n_r, self.n_theta);
        let dr2 = self.dr * self.dr;
        for j in 0..nt {
            out[j] =
                (2.0 * f[j] - 5.0 * f[nt + j] + 4.0 * f[2 * nt + j] - f[3 * nt + j]) / dr2;
            let l = (nr - 1) * nt;
            out[l + j] = (2.0 * f[l + j] - 5.0 * f[l - nt + j] + 4.0 * f[l - 2 * nt + j]
                - f[l - 3 * nt + j])
                / dr2;
        }
        for i in 1..nr - 1 {
            for j in 0..nt {
                let k = i * nt + j;
                out[k] = (f[k + nt] - 2.0 * f[k] + f[k - nt]) / dr2;
            }
        }
    }

    /// ∂f/∂θ, central periodic.
    pub fn d_theta(&self, f: &[f64], out: &mut [f64]) {
        let (nr, nt) = (self.n_r, self.n_theta);
        for i in 0..nr {
            let row = i * nt;
            for j in 0..nt {
                let jp = if j + 1 == nt { 0 } else { j + 1 };
                let jm = if j == 0 { nt - 1 } else { j - 1 };
                out[row + j] = (f[row + jp] - f[row + jm]) / (2.0 * self.dtheta);
            }
        }
    }

    /// ∂²f/∂θ², central periodic.
    pub fn d_theta2(&self, f: &[f64], out: &mut [f64]) {
        let (nr, nt) = (self.n_r, self.n_theta);
        let dt2 = self.dtheta * self.dtheta;
        for i in 0..nr {
            let row = i * nt;
            for j in 0..nt {
                let jp = if j + 1 == nt { 0 } else { j + 1 };
                let jm = if j == 0 { nt - 1 } else { j - 1 };
                out[row + j] = (f[row + jp] - 2.0 * f[row + j] + f[row + jm]) / dt2;
            }
        }
    }

    // ---- Cartesian operators via the polar chain rule ----

    /// Cartesian gradient (∂f/∂x, ∂f/∂y) on the whole grid.
    pub fn grad(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut fr = self.scalar_field();
        let mut ft = self.scalar_field();
        self.d_r(f, &mut fr);
        self.d_theta(f, &mut ft);
        let mut fx = self.scalar_field();
        let mut fy = self.scalar_field();
        self.grad_from_polar(&fr, &ft, &mut fx, &mut fy);
        (fx, fy)
    }

    pub fn grad_from_polar(&self, fr: &[f64], ft: &[f64], fx: &mut [f64], fy: &mut [f64]) {
        for i in 0..self.n_r {
            let inv_r = 1.0 / self.r[i];
            for j in 0..self.n_theta {
                let k = self.idx(i, j);
                let (c, s) = (self.cos_t[j], self.sin_t[j]);
                fx[k] = c * fr[k] - s * inv_r * ft[k];
                fy[k] = s * fr[k] + c * inv_r * ft[k];
            }
        }
    }

    /// Scalar Laplacian f_rr + f_r/r + f_θθ/r² on the whole grid.
    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        let mut fr = self.scalar_field();
        let mut frr = self.scalar_field();
        let mut ftt = self.scalar_field();
        self.d_r(f, &mut fr);
        self.d_rr(f, &mut frr);
        self.d_theta2(f, &mut ftt);
        let mut out = self.scalar_field();
        for i in 0..self.n_r {
            let inv_r = 1.0 / self.r[i];
            for j in 0..self.n_theta {
                let k = self.idx(i, j);
                out[k] = frr[k] + inv_r * fr[k] + inv_r * inv_r * ftt[k];
            }
        }
        out
    }

    /// div u = ∂x ux + ∂y uy for a Cartesian-component vector field.
    pub fn divergence(&self, ux: &[f64], uy: &[f64]) -> Vec<f64> {
        let (gxx, _gxy) = self.grad(ux);
        let (_gyx, gyy) = self.grad(uy);
        let mut out = gxx;
        for (o, g) in out.iter_mut().zip(gyy.iter()) {
            *o += g;
        }
        out
    }

    /// Full velocity gradient per node: m[i][l] = ∂u_i/∂y_l.
    pub fn velocity_gradient(&self, ux: &[f64], uy: &[f64]) -> Vec<M2> {
        let (a, b) = self.grad(ux);
        let (c, d) = self.grad(uy);
        (0..self.len())
            .map(|k| M2([[a[k], b[k]], [c[k], d[k]]]))
            .collect()
    }

    // ---- Quadrature ----

    /// Reference-measure quadrature weight r·dr·dθ (trapezoid in r).
    pub fn weight(&self, i: usize, _j: usize) -> f64 {
        let wr = if i == 0 || i == self.n_r - 1 { 0.5 } else { 1.0 };
        wr * self.dr * self.dtheta * self.r[i]
    }

    /// ∮ f(y) w(y) r dr dθ with an extra per-node factor (e.g. det ∇X).
    pub fn integrate_weighted(&self, f: &[f64], extra: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n_r {
            for j in 0..self.n_theta {
                let k = self.idx(i, j);
                s += f[k] * extra[k] * self.weight(i, j);
            }
        }
        s
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n_r {
            for j in 0..self.n_theta {
                s += f[self.idx(i, j)] * self.weight(i, j);
            }
        }
        s
    }

    /// Area of the reference annulus under the same quadrature.
    pub fn area(&self) -> f64 {
        let ones = vec![1.0; self.len()];
        self.integrate(&ones)
    }
}
