//! Time marching: the per-step fixed-point iteration over the linear
//! cascade, the outer loop with guards and diagnostics, initial-data
//! generation and the compatibility residuals.

use crate::algebra::{cross2, omega_cross, V2};
use crate::cascade::{density_step, lifting, solve_body, LameSolver, TimeScheme};
use crate::controller::ControllerParams;
use crate::diagnostics::{
    balance_residual_raw, balance_rhs, energy, vector_norms, EnergyReport,
};
use crate::error::{Invalid, StepError, ValidationReport};
use crate::forcing::{eval_f1, eval_f2, eval_f3, eval_f4, FrameProducts, StateDerivatives};
use crate::grid::Grid;
use crate::kinematics::{advance_flowmap, advance_rotation, geometry_guard, FlowMap};
use crate::model::{stress, BodyState, FluidState, Geometry, PhysicalParams};

#[derive(Clone, Copy, Debug)]
pub struct MarchConfig {
    pub dt: f64,
    pub t_final: f64,
    /// relative successive-iterate tolerance
    pub picard_tol: f64,
    pub picard_max: usize,
    /// abort threshold on max‖∇X − I‖_∞
    pub map_distortion_max: f64,
    pub scheme: TimeScheme,
    /// compute the energy-balance residual every step (costs one extra
    /// quadrature pass)
    pub track_residual: bool,
}

impl Default for MarchConfig {
    fn default() -> Self {
        MarchConfig {
            dt: 1e-3,
            t_final: 30.0,
            picard_tol: 1e-10,
            picard_max: 50,
            map_distortion_max: 0.2,
            scheme: TimeScheme::ImplicitEuler,
            track_residual: false,
        }
    }
}

impl MarchConfig {
    pub fn validate(&self) -> Result<(), ValidationReport> {
        let mut r = ValidationReport::new();
        if !(self.dt > 0.0) {
            r.push(Invalid::new(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0) {
            r.push(Invalid::new(format!("t_final must be non-negative, got {}", self.t_final)));
        }
        if !(self.picard_tol > 0.0) {
            r.push(Invalid::new("picard_tol must be positive"));
        }
        if self.picard_max < 2 {
            r.push(Invalid::new("picard_max must be at least 2"));
        }
        if !(self.map_distortion_max > 0.0) {
            r.push(Invalid::new("map_distortion_max must be positive"));
        }
        r.into_result()
    }
}

/// Everything fixed over a run.
pub struct Sim {
    pub grid: Grid,
    pub phys: PhysicalParams,
    pub geom: Geometry,
    pub ctrl: ControllerParams,
    pub rho0: Vec<f64>,
    pub m_body: f64,
    pub j_body: f64,
    pub solver: LameSolver,
}

impl Sim {
    pub fn new(
        grid: Grid,
        phys: PhysicalParams,
        geom: Geometry,
        ctrl: ControllerParams,
        rho0: Vec<f64>,
        dt: f64,
        scheme: TimeScheme,
    ) -> Sim {
        let (m_body, j_body) = phys.body_mass_inertia();
        let solver = LameSolver::new(&grid, &rho0, &phys, dt, scheme);
        Sim { grid, phys, geom, ctrl, rho0, m_body, j_body, solver }
    }
}

/// Full per-level solver state, including the cached force evaluations that
/// seed the next step's trapezoids.
#[derive(Clone)]
pub struct State {
    pub fluid: FluidState,
    pub body: BodyState,
    pub map: FlowMap,
    /// f₁ − ρ₀ div ũ at this level
    pub density_rate: Vec<f64>,
    pub f3: V2,
    pub f4: f64,
}

impl State {
    /// Build a consistent state at time t from raw fields (evaluates the
    /// force terms once).
    pub fn assemble(
        sim: &Sim,
        fluid: FluidState,
        body: BodyState,
        map: FlowMap,
    ) -> State {
        let t = fluid.t;
        let fp = FrameProducts::new(&map, body.q);
        let derivs = StateDerivatives::new(&sim.grid, &fluid);
        let f1 = eval_f1(&sim.grid, &fluid, &sim.rho0, sim.phys.rho_bar, &derivs, &fp);
        let density_rate: Vec<f64> = f1
            .iter()
            .zip(derivs.div_u.iter())
            .zip(sim.rho0.iter())
            .map(|((f, d), r0)| f - r0 * d)
            .collect();
        let f3 = eval_f3(
            &sim.grid, &fluid, &body, &map, &derivs, &sim.phys, &sim.ctrl, sim.m_body, t,
        );
        let f4 = eval_f4(&sim.grid, &fluid, &body, &map, &derivs, &sim.phys);
        State { fluid, body, map, density_rate, f3, f4 }
    }
}

#[derive(Clone, Debug, Default)]
pub struct PicardStats {
    pub iters: usize,
    /// successive-difference norms, one per iterate
    pub diffs: Vec<f64>,
    /// max ratio diff_k/diff_{k−1} from iterate 2 on (0 if converged earlier)
    pub contraction_max: f64,
}

fn rel_diff(new: &[f64], old: &[f64]) -> f64 {
    let mut d = 0.0_f64;
    let mut n = 0.0_f64;
    for (a, b) in new.iter().zip(old.iter()) {
        d = d.max((a - b).abs());
        n = n.max(a.abs());
    }
    d / (1.0 + n)
}

/// One time step of the discrete fixed-point map: iterate kinematics →
/// forcing terms → linear cascade until the relative successive-iterate
/// change drops below `picard_tol`.
pub fn picard_step(
    sim: &Sim,
    state: &State,
    cfg: &MarchConfig,
) -> Result<(State, PicardStats), StepError> {
    let dt = cfg.dt;
    let t_n = state.fluid.t;
    let t_next = t_n + dt;
    let grid = &sim.grid;

    // iterate seeded from the previous level
    let mut rho_g = state.fluid.rho_tilde.clone();
    let mut ux_g = state.fluid.ux.clone();
    let mut uy_g = state.fluid.uy.clone();
    let mut ell_g = state.body.ell_tilde;
    let mut omega_g = state.body.omega_tilde;

    let mut stats = PicardStats::default();
    let mut converged = false;

    for it in 1..=cfg.picard_max {
        // kinematics from the current guess
        let q_next = advance_rotation(
            state.body.q,
            0.5 * dt * (state.body.omega_tilde + omega_g),
        );
        let map_next = advance_flowmap(
            &state.map,
            state.body.q,
            (&state.fluid.ux, &state.fluid.uy),
            q_next,
            (&ux_g, &uy_g),
            dt,
            grid,
            t_next,
        )?;
        let h_next = state.body.h_tilde
            + (state.body.q.apply(state.body.ell_tilde) + q_next.apply(ell_g)) * (0.5 * dt);

        // forcing terms at the guess
        let fluid_g = FluidState {
            rho_tilde: rho_g.clone(),
            ux: ux_g.clone(),
            uy: uy_g.clone(),
            t: t_next,
        };
        let body_g = BodyState {
            h_tilde: h_next,
            ell_tilde: ell_g,
            omega_tilde: omega_g,
            q: q_next,
        };
        let fp = FrameProducts::new(&map_next, q_next);
        let derivs = StateDerivatives::new(grid, &fluid_g);
        let f3_next = eval_f3(
            grid, &fluid_g, &body_g, &map_next, &derivs, &sim.phys, &sim.ctrl,
            sim.m_body, t_next,
        );
        let f4_next = eval_f4(grid, &fluid_g, &body_g, &map_next, &derivs, &sim.phys);

        // cascade: body → velocity → density
        let (ell_next, omega_next) = solve_body(
            state.body.ell_tilde,
            state.body.omega_tilde,
            state.f3,
            state.f4,
            f3_next,
            f4_next,
            dt,
            sim.m_body,
            sim.j_body,
        );
        let (f2x, f2y) = eval_f2(
            grid, &fluid_g, &sim.rho0, &sim.phys, &derivs, &fp, &map_next, omega_g,
        );
        let (ux_next, uy_next) = sim.solver.solve(
            (&state.fluid.ux, &state.fluid.uy),
            (&f2x, &f2y),
            ell_next,
            omega_next,
            (&ux_g, &uy_g),
        )?;
        let f1_next = eval_f1(grid, &fluid_g, &sim.rho0, sim.phys.rho_bar, &derivs, &fp);
        let (rho_next, _rate) = density_step(
            grid,
            &state.fluid.rho_tilde,
            &state.density_rate,
            (&ux_next, &uy_next),
            &f1_next,
            &sim.rho0,
            dt,
            sim.phys.rho_bar,
            t_next,
        )?;

        // successive-iterate change
        let d = rel_diff(&rho_next, &rho_g)
            .max(rel_diff(&ux_next, &ux_g))
            .max(rel_diff(&uy_next, &uy_g))
            .max((ell_next - ell_g).norm_inf() / (1.0 + ell_next.norm_inf()))
            .max((omega_next - omega_g).abs() / (1.0 + omega_next.abs()));
        if let Some(prev) = stats.diffs.last() {
            if *prev > 0.0 {
                stats.contraction_max = stats.contraction_max.max(d / prev);
            }
        }
        stats.diffs.push(d);
        stats.iters = it;

        rho_g = rho_next;
        ux_g = ux_next;
        uy_g = uy_next;
        ell_g = ell_next;
        omega_g = omega_next;

        if d <= cfg.picard_tol {
            converged = true;
            break;
        }
    }

    if !converged {
        return Err(StepError::PicardDiverged {
            t: t_next,
            iters: stats.iters,
            last_diff: *stats.diffs.last().unwrap_or(&f64::NAN),
        });
    }

    // final kinematics consistent with the converged values
    let q_next = advance_rotation(
        state.body.q,
        0.5 * dt * (state.body.omega_tilde + omega_g),
    );
    let map_next = advance_flowmap(
        &state.map,
        state.body.q,
        (&state.fluid.ux, &state.fluid.uy),
        q_next,
        (&ux_g, &uy_g),
        dt,
        grid,
        t_next,
    )?;
    let h_next = state.body.h_tilde
        + (state.body.q.apply(state.body.ell_tilde) + q_next.apply(ell_g)) * (0.5 * dt);

    // guards
    let dist = map_next.distortion();
    if dist > cfg.map_distortion_max {
        return Err(StepError::MapDistortion {
            t: t_next,
            distortion: dist,
            limit: cfg.map_distortion_max,
        });
    }
    geometry_guard(h_next + sim.geom.h1, &sim.geom, t_next)?;

    let fluid_next = FluidState { rho_tilde: rho_g, ux: ux_g, uy: uy_g, t: t_next };
    let body_next = BodyState {
        h_tilde: h_next,
        ell_tilde: ell_g,
        omega_tilde: omega_g,
        q: q_next,
    };
    let next = State::assemble(sim, fluid_next, body_next, map_next);
    Ok((next, stats))
}

/// One per-step trajectory record; field order matches the CSV schema.
#[derive(Clone, Debug)]
pub struct Record {
    pub t: f64,
    pub h: V2,
    pub ell: V2,
    pub omega: f64,
    pub energy: EnergyReport,
    pub picard_iters: usize,
    pub contraction_max: f64,
    pub distortion: f64,
    /// discrete H² of u (side-channel diagnostic, not a CSV column)
    pub h2_u: f64,
    /// normalized balance residual when tracking is on
    pub residual: Option<f64>,
    pub residual_raw: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub aborted: Option<String>,
}

fn make_record(sim: &Sim, state: &State, stats: &PicardStats) -> Record {
    let t = state.fluid.t;
    let e = energy(
        &sim.grid, &state.fluid, &state.body, &state.map, t, &sim.phys, &sim.ctrl,
        sim.m_body, sim.j_body, sim.geom.h1,
    );
    let norms = vector_norms(&sim.grid, &state.fluid.ux, &state.fluid.uy, &state.map.det_j);
    Record {
        t,
        h: state.body.h(sim.geom.h1),
        ell: state.body.ell(),
        omega: state.body.omega_tilde,
        energy: e,
        picard_iters: stats.iters,
        contraction_max: stats.contraction_max,
        distortion: state.map.distortion(),
        h2_u: norms.h2,
        residual: None,
        residual_raw: None,
    }
}

/// March from `initial` to `t_final`, recording diagnostics each step.
/// `observer` sees every committed state (for snapshot writers).
pub fn run(
    sim: &Sim,
    initial: State,
    cfg: &MarchConfig,
    mut observer: impl FnMut(usize, &State, &Record),
) -> Result<Trajectory, StepError> {
    let mut traj = Trajectory::default();
    let mut state = initial;
    let rec = make_record(sim, &state, &PicardStats::default());
    geometry_guard(state.body.h(sim.geom.h1), &sim.geom, state.fluid.t)?;
    observer(0, &state, &rec);
    traj.records.push(rec);

    let n_steps = (cfg.t_final / cfg.dt).round() as usize;
    for step in 1..=n_steps {
        let rhs_now = if cfg.track_residual {
            Some(balance_rhs(
                &sim.grid, &state.fluid, &state.body, &state.map, state.fluid.t,
                &sim.phys, &sim.ctrl, sim.geom.h1,
            ))
        } else {
            None
        };
        let e_now = traj.records.last().map(|r| r.energy);

        let (next, stats) = picard_step(sim, &state, cfg)?;
        let mut rec = make_record(sim, &next, &stats);
        if let (Some(rhs), Some(e0)) = (rhs_now, e_now) {
            let raw = balance_residual_raw(&rec.energy, &e0, rhs, cfg.dt);
            let scale = e0.total().max(e0.dissipation()).max(f64::EPSILON);
            rec.residual = Some(raw.abs() / scale);
            rec.residual_raw = Some(raw);
        }
        state = next;
        observer(step, &state, &rec);
        traj.records.push(rec);
    }
    Ok(traj)
}

/// Initial-data families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialKind {
    DisplacedRest,
    DensityBump { eps: f64 },
    RigidSpin { omega0: f64 },
}

impl InitialKind {
    pub fn parse(name: &str, eps: f64, omega0: f64) -> Result<InitialKind, Invalid> {
        match name {
            "displaced-rest" => Ok(InitialKind::DisplacedRest),
            "density-bump" => Ok(InitialKind::DensityBump { eps }),
            "rigid-spin" => Ok(InitialKind::RigidSpin { omega0 }),
            other => Err(Invalid::new(format!("unknown scenario kind '{other}'"))),
        }
    }
}

pub struct InitialData {
    pub rho0: Vec<f64>,
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
    pub ell0: V2,
    pub omega0: f64,
}

/// C² radial bump supported in r ∈ [1 + 0.3(R−1), 1 + 0.7(R−1)]: (1 − s²)³
/// on the support, 0 outside. Its pressure gradient vanishes near both
/// boundaries by construction.
pub fn bump_profile(r: f64, container_radius: f64) -> f64 {
    let span = container_radius - 1.0;
    let lo = 1.0 + 0.3 * span;
    let hi = 1.0 + 0.7 * span;
    if r <= lo || r >= hi {
        return 0.0;
    }
    let s = (2.0 * r - lo - hi) / (hi - lo);
    let w = 1.0 - s * s;
    w * w * w
}

pub fn make_initial(kind: InitialKind, sim: &Sim) -> InitialData {
    let grid = &sim.grid;
    let rb = sim.phys.rho_bar;
    match kind {
        InitialKind::DisplacedRest => InitialData {
            rho0: vec![rb; grid.len()],
            ux: grid.scalar_field(),
            uy: grid.scalar_field(),
            ell0: V2::ZERO,
            omega0: 0.0,
        },
        InitialKind::DensityBump { eps } => {
            let mut rho0 = vec![0.0; grid.len()];
            for i in 0..grid.n_r {
                let v = rb * (1.0 + eps * bump_profile(grid.r[i], sim.geom.container_radius));
                for j in 0..grid.n_theta {
                    rho0[grid.idx(i, j)] = v;
                }
            }
            InitialData {
                rho0,
                ux: grid.scalar_field(),
                uy: grid.scalar_field(),
                ell0: V2::ZERO,
                omega0: 0.0,
            }
        }
        InitialKind::RigidSpin { omega0 } => {
            let (ux, uy) = lifting(grid, V2::ZERO, omega0, &sim.geom);
            InitialData {
                rho0: vec![rb; grid.len()],
                ux,
                uy,
                ell0: V2::ZERO,
                omega0,
            }
        }
    }
}

/// Build the time-zero solver state from initial data (identity map, Q = I,
/// h̃(0) = h0 − h1, ρ̃ = ρ₀ − ρ̄).
pub fn initial_state(sim: &Sim, data: &InitialData) -> State {
    let grid = &sim.grid;
    let fluid = FluidState {
        rho_tilde: data.rho0.iter().map(|r| r - sim.phys.rho_bar).collect(),
        ux: data.ux.clone(),
        uy: data.uy.clone(),
        t: 0.0,
    };
    let body = BodyState {
        h_tilde: sim.geom.h0 - sim.geom.h1,
        ell_tilde: data.ell0,
        omega_tilde: data.omega0,
        q: crate::algebra::Rot2::IDENTITY,
    };
    let map = FlowMap::identity(grid);
    State::assemble(sim, fluid, body, map)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CompatReport {
    /// boundary-trace mismatch of u₀
    pub r1: f64,
    /// |(1/ρ₀) div σ(u₀,p₀)| on the outer wall
    pub r2: f64,
    /// inner-boundary acceleration balance (including the k_d ℓ₀ term)
    pub r3: f64,
}

impl CompatReport {
    pub fn max(&self) -> f64 {
        self.r1.max(self.r2).max(self.r3)
    }
}

/// Max-norm residuals of the three initial-time compatibility conditions.
pub fn compat_residuals(sim: &Sim, data: &InitialData) -> CompatReport {
    let grid = &sim.grid;
    let phys = &sim.phys;

    // r1: velocity trace on both boundaries
    let mut r1 = 0.0_f64;
    for j in 0..grid.n_theta {
        let k = grid.idx(0, j);
        let y = grid.node(0, j);
        let rigid = data.ell0 + omega_cross(data.omega0, y);
        r1 = r1.max((V2::new(data.ux[k], data.uy[k]) - rigid).norm_inf());
        let k = grid.idx(grid.n_r - 1, j);
        r1 = r1.max(V2::new(data.ux[k], data.uy[k]).norm_inf());
    }

    // div σ(u₀, p₀) = μΔu₀ + (λ+μ)∇div u₀ − ∇p₀ as grid fields
    let lap_x = grid.laplacian(&data.ux);
    let lap_y = grid.laplacian(&data.uy);
    let div = grid.divergence(&data.ux, &data.uy);
    let (dvx, dvy) = grid.grad(&div);
    let p0: Vec<f64> = data.rho0.iter().map(|r| phys.a * r.powf(phys.gamma)).collect();
    let (px, py) = grid.grad(&p0);
    let lam_mu = phys.lambda + phys.mu;
    let divsig = |k: usize| {
        V2::new(
            phys.mu * lap_x[k] + lam_mu * dvx[k] - px[k],
            phys.mu * lap_y[k] + lam_mu * dvy[k] - py[k],
        )
    };

    let mut r2 = 0.0_f64;
    for j in 0..grid.n_theta {
        let k = grid.idx(grid.n_r - 1, j);
        r2 = r2.max((divsig(k) * (1.0 / data.rho0[k])).norm_inf());
    }

    // boundary integrals of σ n and (y − h0) × σ n over the inner circle
    let grad_u = grid.velocity_gradient(&data.ux, &data.uy);
    let mut force = V2::ZERO;
    let mut torque = 0.0;
    let mut sigma_n = vec![V2::ZERO; grid.n_theta];
    for j in 0..grid.n_theta {
        let k = grid.idx(0, j);
        let sig = stress(grad_u[k], p0[k], phys);
        let nrm = crate::forcing::inner_normal(grid, j);
        sigma_n[j] = sig * nrm;
        force += sigma_n[j] * grid.dtheta;
        torque += cross2(grid.node(0, j), sigma_n[j]) * grid.dtheta;
    }

    let mut r3 = 0.0_f64;
    for j in 0..grid.n_theta {
        let k = grid.idx(0, j);
        let y = grid.node(0, j);
        let lhs = -omega_cross(data.omega0, omega_cross(data.omega0, y))
            - divsig(k) * (1.0 / data.rho0[k]);
        let rhs = (force - data.ell0 * sim.ctrl.k_d) * (1.0 / sim.m_body)
            + omega_cross(torque / sim.j_body, y);
        r3 = r3.max((lhs - rhs).norm_inf());
    }

    CompatReport { r1, r2, r3 }
}
