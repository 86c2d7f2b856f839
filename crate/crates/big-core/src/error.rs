//! Error taxonomy shared by the solver crates. Validation failures collect
//! every violation (the CLI reports all of them); runtime failures abort with
//! structured context so a run never emits garbage records.

use crate::algebra::V2;
use thiserror::Error;

/// One validation violation with a human-readable message that names the
/// violated hypothesis.
#[derive(Clone, Debug, Error)]
#[error("{msg}")]
pub struct Invalid {
    pub msg: String,
}

impl Invalid {
    pub fn new(msg: impl Into<String>) -> Invalid {
        Invalid { msg: msg.into() }
    }
}

/// All violations found while validating a configuration.
#[derive(Clone, Debug, Default, Error)]
pub struct ValidationReport {
    pub violations: Vec<Invalid>,
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for v in &self.violations {
            writeln!(f, "{}", v.msg)?;
        }
        Ok(())
    }
}

impl ValidationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, v: Invalid) {
        self.violations.push(v);
    }

    pub fn merge(&mut self, r: Result<(), ValidationReport>) {
        if let Err(e) = r {
            self.violations.extend(e.violations);
        }
    }

    pub fn into_result(self) -> Result<(), ValidationReport> {
        if self.violations.is_empty() {
            Ok(())
        } else {
            Err(self)
        }
    }
}

/// Why a time step (or a whole run) had to stop.
#[derive(Clone, Debug, Error)]
pub enum StepError {
    #[error("density positivity lost: min(rho_tilde + rho_bar) = {min_rho} at t = {t}")]
    Positivity { t: f64, min_rho: f64 },

    #[error("flow map degenerate: min det grad X = {min_det} at t = {t}")]
    MapDegenerate { t: f64, min_det: f64 },

    #[error(
        "flow map distortion {distortion} exceeded limit {limit} at t = {t}; \
         the run left the small-deformation regime"
    )]
    MapDistortion { t: f64, distortion: f64, limit: f64 },

    #[error(
        "geometry guard: dist(h, wall) = {margin} <= 1 + eta = {required} \
         at t = {t}, h = ({hx}, {hy})"
    )]
    GeometryGuard { t: f64, hx: f64, hy: f64, margin: f64, required: f64 },

    #[error(
        "fixed-point iteration did not converge in {iters} iterations at t = {t} \
         (last relative change {last_diff}); reduce dt"
    )]
    PicardDiverged { t: f64, iters: usize, last_diff: f64 },

    #[error("linear solve stalled: relative residual {residual} after {iters} iterations")]
    SolverStall { residual: f64, iters: usize, history: Vec<f64> },

    #[error("non-finite value in {what} at t = {t}")]
    NonFinite { t: f64, what: String },
}

impl StepError {
    /// Exit-code class: 2 = guard abort, 3 = numerical failure.
    pub fn exit_class(&self) -> i32 {
        match self {
            StepError::Positivity { .. }
            | StepError::MapDegenerate { .. }
            | StepError::MapDistortion { .. }
            | StepError::GeometryGuard { .. } => 2,
            StepError::PicardDiverged { .. }
            | StepError::SolverStall { .. }
            | StepError::NonFinite { .. } => 3,
        }
    }

    pub fn geometry(t: f64, h: V2, margin: f64, required: f64) -> StepError {
        StepError::GeometryGuard { t, hx: h.x, hy: h.y, margin, required }
    }
}
