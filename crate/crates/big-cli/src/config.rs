//! Flat key=value run configuration. Dotted keys group the sections
//! (physical., geometry., controller., grid., march., scenario., output.,
//! piston.); parsing collects every violation instead of stopping at the
//! first one.

use big_core::algebra::V2;
use big_core::cascade::TimeScheme;
use big_core::controller::{ControllerParams, Ramp};
use big_core::error::{Invalid, ValidationReport};
use big_core::marcher::{InitialKind, MarchConfig};
use big_core::model::{Geometry, PhysicalParams};
use big_core::piston::PistonParams;
use std::collections::BTreeMap;
use std::path::Path;

pub const MIN_N_R: usize = 17;
pub const MIN_N_THETA: usize = 32;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub phys: PhysicalParams,
    pub geom: Geometry,
    pub ctrl: ControllerParams,
    pub n_r: usize,
    pub n_theta: usize,
    pub march: MarchConfig,
    pub scenario: InitialKind,
    /// trajectory CSV file name (inside the output directory)
    pub trajectory: String,
    pub piston: PistonParams,
}

fn parse_pairs(text: &str, report: &mut ValidationReport) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                let key = k.trim().to_string();
                if map.insert(key.clone(), v.trim().to_string()).is_some() {
                    report.push(Invalid::new(format!("duplicate key '{key}'")));
                }
            }
            None => report.push(Invalid::new(format!(
                "line {}: expected key = value, got '{line}'",
                lineno + 1
            ))),
        }
    }
    map
}

struct Keys<'a> {
    map: BTreeMap<String, String>,
    report: &'a mut ValidationReport,
}

impl Keys<'_> {
    fn raw(&mut self, key: &str) -> Option<String> {
        let v = self.map.remove(key);
        if v.is_none() {
            self.report.push(Invalid::new(format!("missing key '{key}'")));
        }
        v
    }

    fn f64(&mut self, key: &str, default: f64) -> f64 {
        match self.raw(key) {
            Some(s) => self.parse_f64(key, &s).unwrap_or(default),
            None => default,
        }
    }

    fn f64_opt(&mut self, key: &str, default: f64) -> f64 {
        match self.map.remove(key) {
            Some(s) => self.parse_f64(key, &s).unwrap_or(default),
            None => default,
        }
    }

    fn usize_req(&mut self, key: &str, default: usize) -> usize {
        match self.raw(key) {
            Some(s) => self.parse_usize(key, &s).unwrap_or(default),
            None => default,
        }
    }

    fn usize_opt(&mut self, key: &str, default: usize) -> usize {
        match self.map.remove(key) {
            Some(s) => self.parse_usize(key, &s).unwrap_or(default),
            None => default,
        }
    }

    fn string_opt(&mut self, key: &str, default: &str) -> String {
        self.map.remove(key).unwrap_or_else(|| default.to_string())
    }

    fn parse_f64(&mut self, key: &str, s: &str) -> Option<f64> {
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                self.report
                    .push(Invalid::new(format!("key '{key}': expected a finite number, got '{s}'")));
                None
            }
        }
    }

    fn parse_usize(&mut self, key: &str, s: &str) -> Option<usize> {
        match s.parse::<usize>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.report
                    .push(Invalid::new(format!("key '{key}': expected an integer, got '{s}'")));
                None
            }
        }
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ValidationReport> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            let mut r = ValidationReport::new();
            r.push(Invalid::new(format!("cannot read {}: {e}", path.display())));
            return Err(r);
        }
    };
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<RunConfig, ValidationReport> {
    let mut report = ValidationReport::new();
    let map = parse_pairs(text, &mut report);
    let mut keys = Keys { map, report: &mut report };

    let phys = PhysicalParams {
        a: keys.f64("physical.a", 1.0),
        gamma: keys.f64("physical.gamma", 2.0),
        mu: keys.f64("physical.mu", 1.0),
        lambda: keys.f64("physical.lambda", 0.0),
        rho_bar: keys.f64("physical.rho_bar", 1.0),
        rho_body: keys.f64("physical.rho_body", 1.0),
        dim: 2,
    };
    let geom = Geometry {
        container_radius: keys.f64("geometry.container_radius", 3.0),
        h0: V2::ZERO,
        h1: V2::new(keys.f64("geometry.h1_x", 0.05), keys.f64("geometry.h1_y", 0.0)),
        eta: keys.f64("geometry.eta", 0.1),
    };
    let ramp_name = keys.string_opt("controller.ramp", "smoothstep");
    let ramp = match Ramp::parse(&ramp_name) {
        Ok(r) => r,
        Err(e) => {
            keys.report.push(e);
            Ramp::Smoothstep
        }
    };
    let ctrl = ControllerParams {
        k_d: keys.f64("controller.k_d", 4.0),
        t_i: keys.f64("controller.t_i", 1.0),
        ramp,
    };
    let n_r = keys.usize_req("grid.n_r", 33);
    let n_theta = keys.usize_req("grid.n_theta", 64);

    let scheme_name = keys.string_opt("march.scheme", "implicit-euler");
    let scheme = match scheme_name.as_str() {
        "implicit-euler" => TimeScheme::ImplicitEuler,
        "crank-nicolson" => TimeScheme::CrankNicolson,
        other => {
            keys.report.push(Invalid::new(format!(
                "key 'march.scheme': expected implicit-euler or crank-nicolson, got '{other}'"
            )));
            TimeScheme::ImplicitEuler
        }
    };
    let march = MarchConfig {
        dt: keys.f64("march.dt", 1e-3),
        t_final: keys.f64("march.t_final", 30.0),
        picard_tol: keys.f64_opt("march.picard_tol", 1e-10),
        picard_max: keys.usize_opt("march.picard_max", 50),
        map_distortion_max: keys.f64_opt("march.distortion_max", 0.2),
        scheme,
        track_residual: false,
    };

    let kind_name = keys.raw("scenario.kind").unwrap_or_else(|| "displaced-rest".into());
    let eps = keys.f64_opt("scenario.eps", 1e-2);
    let omega0 = keys.f64_opt("scenario.omega0", 0.01);
    let scenario = match InitialKind::parse(&kind_name, eps, omega0) {
        Ok(k) => k,
        Err(e) => {
            keys.report.push(e);
            InitialKind::DisplacedRest
        }
    };

    let trajectory = keys.string_opt("output.trajectory", "trajectory.csv");

    let piston = PistonParams {
        a: phys.a,
        gamma: phys.gamma,
        mu_eff: keys.f64_opt("piston.mu_eff", phys.mu),
        length: keys.f64_opt("piston.length", 2.0),
        m: keys.f64_opt("piston.mass", 1.0),
        h0: keys.f64_opt("piston.h0", 1.0),
        h1: keys.f64_opt("piston.h1", 1.05),
        rho_init: keys.f64_opt("piston.rho_init", phys.rho_bar),
        cells: keys.usize_opt("piston.cells", 40),
        kp_gain: 1.0,
    };

    let leftover = keys.map; // ends the borrow of `report`
    for key in leftover.keys() {
        report.push(Invalid::new(format!("unknown key '{key}'")));
    }

    // cross-validation: every violation is collected, each message citing
    // the hypothesis it violates where one applies
    report.merge(phys.validate());
    report.merge(geom.validate());
    report.merge(ctrl.validate());
    report.merge(march.validate());
    if let Err(e) = piston.validate() {
        report.push(e);
    }
    if n_r < MIN_N_R {
        report.push(Invalid::new(format!("grid.n_r must be at least {MIN_N_R}, got {n_r}")));
    }
    if n_theta < MIN_N_THETA {
        report.push(Invalid::new(format!(
            "grid.n_theta must be at least {MIN_N_THETA}, got {n_theta}"
        )));
    }

    report.into_result().map(|_| RunConfig {
        phys,
        geom,
        ctrl,
        n_r,
        n_theta,
        march,
        scenario,
        trajectory,
        piston,
    })
}
