//! PD feedback: the ramped proportional gain k_p, its admissibility checks,
//! and the force in both the physical and the transformed frame.

use crate::algebra::{Rot2, V2};
use crate::error::{Invalid, ValidationReport};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ramp {
    /// cubic smoothstep s²(3−2s) on [0, T_I]; sup k_p' = 3/(2 T_I)
    Smoothstep,
    /// linear ramp t/T_I capped at 1; C⁰ only, kept for experiments
    LinearCapped,
}

impl Ramp {
    pub fn parse(s: &str) -> Result<Ramp, Invalid> {
        match s {
            "smoothstep" => Ok(Ramp::Smoothstep),
            "linear-capped" => Ok(Ramp::LinearCapped),
            other => Err(Invalid::new(format!("unknown ramp profile '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ControllerParams {
    pub k_d: f64,
    pub t_i: f64,
    pub ramp: Ramp,
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams { k_d: 4.0, t_i: 1.0, ramp: Ramp::Smoothstep }
    }
}

impl ControllerParams {
    /// Closed-form sup of k_p' for the configured ramp.
    pub fn sup_kp_slope(&self) -> f64 {
        match self.ramp {
            // d/dt s²(3−2s) = 6 s(1−s)/T_I, maximal at s = 1/2
            Ramp::Smoothstep => 1.5 / self.t_i,
            Ramp::LinearCapped => 1.0 / self.t_i,
        }
    }

    /// Check the gain hypotheses: k_p ∈ C¹([0,1]), k_p(0)=0, k_p ≡ 1 past
    /// T_I, and the strict slope bound sup k_p' < k_d / (2 T_I²). The slope
    /// check uses the closed form, not sampling.
    pub fn validate(&self) -> Result<(), ValidationReport> {
        let mut r = ValidationReport::new();
        if !(self.t_i > 0.0) {
            r.push(Invalid::new(format!("(hypkp): T_I must be positive, got {}", self.t_i)));
        }
        if !(self.k_d >= 0.0) {
            r.push(Invalid::new(format!("(hypkp): k_d must be non-negative, got {}", self.k_d)));
        }
        if self.t_i > 0.0 {
            let sup = self.sup_kp_slope();
            let bound = self.k_d / (2.0 * self.t_i * self.t_i);
            if !(sup < bound) {
                r.push(Invalid::new(format!(
                    "(hypkp): sup k_p' = {sup} must be strictly below k_d/(2 T_I^2) = {bound} \
                     (k_d = {}, T_I = {})",
                    self.k_d, self.t_i
                )));
            }
        }
        r.into_result()
    }

    /// k_p(t): 0 at t = 0, ramps to 1 by T_I, identically 1 afterwards.
    pub fn kp(&self, t: f64) -> f64 {
        assert!(t >= 0.0, "kp of negative time {t}");
        if t >= self.t_i {
            return 1.0;
        }
        let s = t / self.t_i;
        match self.ramp {
            Ramp::Smoothstep => s * s * (3.0 - 2.0 * s),
            Ramp::LinearCapped => s,
        }
    }

    /// k_p'(t), closed form.
    pub fn kp_slope(&self, t: f64) -> f64 {
        if t >= self.t_i || t < 0.0 {
            return 0.0;
        }
        let s = t / self.t_i;
        match self.ramp {
            Ramp::Smoothstep => 6.0 * s * (1.0 - s) / self.t_i,
            Ramp::LinearCapped => 1.0 / self.t_i,
        }
    }

    /// Physical-frame feedback force w = k_p(t)(h1 − h) − k_d ℓ.
    pub fn feedback_force(&self, t: f64, h: V2, h1: V2, ell: V2) -> V2 {
        (h1 - h) * self.kp(t) - ell * self.k_d
    }

    /// Transformed-frame controller contribution −k_p Qᵀ h̃ − k_d ℓ̃.
    pub fn feedback_lagrangian(&self, t: f64, h_tilde: V2, ell_tilde: V2, q: Rot2) -> V2 {
        -(q.apply_t(h_tilde) * self.kp(t)) - ell_tilde * self.k_d
    }
}
