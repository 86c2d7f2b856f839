//! Physical parameters, geometry, state containers, constitutive relations
//! and the integral quantities (mass, mean density).

use crate::algebra::{M2, Rot2, V2};
use crate::error::{Invalid, ValidationReport};
use crate::grid::Grid;
use crate::kinematics::FlowMap;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug)]
pub struct PhysicalParams {
    /// pressure coefficient in p = a ρ^γ
    pub a: f64,
    /// adiabatic exponent
    pub gamma: f64,
    /// shear viscosity
    pub mu: f64,
    /// second viscosity (enters as λ + μ in the momentum operator)
    pub lambda: f64,
    /// reference mean density
    pub rho_bar: f64,
    /// rigid-body density
    pub rho_body: f64,
    /// spatial dimension; the runtime discretization is 2
    pub dim: usize,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            a: 1.0,
            gamma: 2.0,
            mu: 1.0,
            lambda: 0.0,
            rho_bar: 1.0,
            rho_body: 1.0,
            dim: 2,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<(), ValidationReport> {
        let mut r = ValidationReport::new();
        if !(self.gamma > 1.5) {
            r.push(Invalid::new(format!(
                "(hyp γ>3/2): gamma must exceed 3/2, got {}",
                self.gamma
            )));
        }
        if !(self.mu > 0.0) {
            r.push(Invalid::new(format!("(hyp μ>0): mu must be positive, got {}", self.mu)));
        }
        if !(self.lambda + self.mu >= 0.0) {
            r.push(Invalid::new(format!(
                "(hyp λ+μ≥0): lambda + mu must be non-negative, got {}",
                self.lambda + self.mu
            )));
        }
        if !(self.a > 0.0) {
            r.push(Invalid::new(format!("(hyp a>0): a must be positive, got {}", self.a)));
        }
        if !(self.rho_bar > 0.0) {
            r.push(Invalid::new(format!("rho_bar must be positive, got {}", self.rho_bar)));
        }
        if !(self.rho_body > 0.0) {
            r.push(Invalid::new(format!("rho_body must be positive, got {}", self.rho_body)));
        }
        if self.dim != 2 && self.dim != 3 {
            r.push(Invalid::new(format!("dim must be 2 or 3, got {}", self.dim)));
        }
        r.into_result()
    }

    /// p = a ρ^γ. Negative densities are a caller bug, reported as an error.
    pub fn pressure(&self, rho: f64) -> Result<f64, Invalid> {
        if rho < 0.0 {
            return Err(Invalid::new(format!("pressure of negative density {rho}")));
        }
        Ok(self.a * rho.powf(self.gamma))
    }

    /// dp/dρ = a γ ρ^{γ−1}.
    pub fn pressure_slope(&self, rho: f64) -> f64 {
        self.a * self.gamma * rho.powf(self.gamma - 1.0)
    }

    /// Body mass and moment of inertia of the unit ball/disk.
    pub fn body_mass_inertia(&self) -> (f64, f64) {
        match self.dim {
            3 => {
                let m = 4.0 * PI * self.rho_body / 3.0;
                (m, 2.0 * m / 5.0)
            }
            2 => {
                let m = PI * self.rho_body;
                (m, m / 2.0)
            }
            d => panic!("unsupported dimension {d}"),
        }
    }
}

/// Cauchy stress σ = 2μ D(u) + λ div u · I − p I (2-D).
pub fn stress(grad_u: M2, p: f64, params: &PhysicalParams) -> M2 {
    let d = grad_u.sym();
    let div = grad_u.trace();
    let mut s = d * (2.0 * params.mu);
    s.0[0][0] += params.lambda * div - p;
    s.0[1][1] += params.lambda * div - p;
    s
}

#[derive(Clone, Copy, Debug)]
pub struct Geometry {
    /// container radius R_Ω (> 2; the body has radius 1)
    pub container_radius: f64,
    /// initial body center, pinned to the container center
    pub h0: V2,
    /// target center
    pub h1: V2,
    /// no-contact margin η in dist(h, ∂Ω) > 1 + η
    pub eta: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            container_radius: 3.0,
            h0: V2::ZERO,
            h1: V2::new(0.05, 0.0),
            eta: 0.1,
        }
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<(), ValidationReport> {
        let mut r = ValidationReport::new();
        if !(self.container_radius > 2.0) {
            r.push(Invalid::new(format!(
                "container radius must exceed 2 (unit body must fit), got {}",
                self.container_radius
            )));
        }
        if !(self.eta > 0.0) {
            r.push(Invalid::new(format!("margin eta must be positive, got {}", self.eta)));
        }
        // h0 is the grid center by construction; h1 must sit inside with margin
        let d = (self.h1 - self.h0).norm();
        if !(d < self.container_radius - 1.0 - self.eta) {
            r.push(Invalid::new(format!(
                "target |h1 - center| = {d} leaves no 1+eta margin to the wall"
            )));
        }
        r.into_result()
    }
}

/// Lagrangian fluid state on the reference annulus: density perturbation
/// ρ̃ = ρ∘X − ρ̄ and velocity ũ in Cartesian components.
#[derive(Clone, Debug)]
pub struct FluidState {
    pub rho_tilde: Vec<f64>,
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
    pub t: f64,
}

impl FluidState {
    pub fn rest(grid: &Grid) -> FluidState {
        FluidState {
            rho_tilde: grid.scalar_field(),
            ux: grid.scalar_field(),
            uy: grid.scalar_field(),
            t: 0.0,
        }
    }

    pub fn u(&self, k: usize) -> V2 {
        V2::new(self.ux[k], self.uy[k])
    }

    /// min over nodes of ρ̃ + ρ̄; the positivity guard rejects ≤ 0.
    pub fn min_density(&self, rho_bar: f64) -> f64 {
        self.rho_tilde
            .iter()
            .fold(f64::INFINITY, |m, r| m.min(r + rho_bar))
    }
}

/// Transformed body state: h̃ = h − h1, ℓ̃ = Qᵀℓ, ω̃ = Qᵀω (scalar in 2-D).
#[derive(Clone, Copy, Debug)]
pub struct BodyState {
    pub h_tilde: V2,
    pub ell_tilde: V2,
    pub omega_tilde: f64,
    pub q: Rot2,
}

impl BodyState {
    pub fn at_rest(h0: V2, h1: V2) -> BodyState {
        BodyState {
            h_tilde: h0 - h1,
            ell_tilde: V2::ZERO,
            omega_tilde: 0.0,
            q: Rot2::IDENTITY,
        }
    }

    /// Physical body center h = h1 + h̃.
    pub fn h(&self, h1: V2) -> V2 {
        h1 + self.h_tilde
    }

    /// Physical velocities ℓ = Qℓ̃; ω = ω̃ in 2-D.
    pub fn ell(&self) -> V2 {
        self.q.apply(self.ell_tilde)
    }
}

/// Physical-frame total mass: ∮ (ρ̃ + ρ̄) det∇X over the reference annulus.
pub fn total_mass(
    grid: &Grid,
    fluid: &FluidState,
    map: &FlowMap,
    rho_bar: f64,
) -> Result<f64, Invalid> {
    if map.det_j.iter().any(|d| *d <= 0.0) {
        return Err(Invalid::new("non-positive flow-map Jacobian in mass quadrature"));
    }
    let rho: Vec<f64> = fluid.rho_tilde.iter().map(|r| r + rho_bar).collect();
    Ok(grid.integrate_weighted(&rho, &map.det_j))
}

/// Quadrature average of an initial density field over the annulus.
pub fn mean_density(grid: &Grid, rho0: &[f64]) -> f64 {
    grid.integrate(rho0) / grid.area()
}
