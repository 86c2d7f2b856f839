//! Library side of the command-line front end: configuration parsing and
//! output serialization, shared with the integration tests.

pub mod config;
pub mod io;

use big_core::cascade::TimeScheme;
use big_core::grid::Grid;
use big_core::marcher::{make_initial, InitialData, Sim};
use config::RunConfig;

/// Build the run context. The initial density field doubles as the ρ₀
/// coefficient of the transformed system, so the generator runs once against
/// a uniform-density context and the definitive `Sim` is rebuilt from its
/// output.
pub fn build_sim(cfg: &RunConfig) -> (Sim, InitialData) {
    let grid = Grid::new(cfg.n_r, cfg.n_theta, cfg.geom.container_radius);
    let uniform = vec![cfg.phys.rho_bar; grid.len()];
    let scheme: TimeScheme = cfg.march.scheme;
    let bootstrap = Sim::new(
        grid.clone(),
        cfg.phys,
        cfg.geom,
        cfg.ctrl,
        uniform,
        cfg.march.dt,
        scheme,
    );
    let data = make_initial(cfg.scenario, &bootstrap);
    let sim = Sim::new(
        grid,
        cfg.phys,
        cfg.geom,
        cfg.ctrl,
        data.rho0.clone(),
        cfg.march.dt,
        scheme,
    );
    (sim, data)
}
