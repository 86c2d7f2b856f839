use big_cli::config::parse_config;
use big_cli::io::{csv_row, energy_summary_from_csv, write_snapshot, CSV_HEADER};
use big_cli::build_sim;
use big_core::diagnostics::convergence_study;
use big_core::marcher::{initial_state, run};
use big_core::piston::PistonState;
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "big", about = "Ball-in-gas feedback stabilization solver", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration file and report every violation
    Validate { config: PathBuf },
    /// Run the 2-D stabilization solver and write the trajectory CSV
    Simulate {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
        /// write density/velocity field snapshots every N steps
        #[arg(long)]
        snapshot_every: Option<usize>,
        #[arg(long)]
        quiet: bool,
    },
    /// Run the 1-D piston oracle with the shared controller
    Piston {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// Manufactured-solution convergence orders for the discrete operators
    Convergence { config: PathBuf },
    /// Recompute the energy-rate defect from a trajectory CSV
    EnergyReport { trajectory: PathBuf },
}

const EXIT_VALIDATION: u8 = 1;

fn init_threads() {
    if let Ok(v) = std::env::var("BIG_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        } else {
            eprintln!("ignoring BIG_THREADS='{v}' (not a number)");
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    match Cli::parse().command {
        Command::Validate { config } => match parse_config(&config) {
            Ok(_) => {
                println!("{}: ok", config.display());
                ExitCode::SUCCESS
            }
            Err(report) => {
                eprint!("{report}");
                ExitCode::from(EXIT_VALIDATION)
            }
        },
        Command::Simulate { config, output_dir, snapshot_every, quiet } => {
            simulate(&config, &output_dir, snapshot_every, quiet)
        }
        Command::Piston { config, output_dir, quiet } => piston(&config, &output_dir, quiet),
        Command::Convergence { config } => {
            if let Err(report) = parse_config(&config) {
                eprint!("{report}");
                return ExitCode::from(EXIT_VALIDATION);
            }
            match convergence_study() {
                Ok(report) => {
                    print!("{}", report.table());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(3)
                }
            }
        }
        Command::EnergyReport { trajectory } => match energy_summary_from_csv(&trajectory) {
            Ok(s) => {
                println!("samples: {}", s.samples);
                println!("max normalized energy-rate defect: {:.6e}", s.max_defect);
                println!("mean normalized energy-rate defect: {:.6e}", s.mean_defect);
                println!("max per-step energy rise: {:.6e}", s.max_energy_rise);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(EXIT_VALIDATION)
            }
        },
    }
}

fn simulate(
    config: &Path,
    output_dir: &Path,
    snapshot_every: Option<usize>,
    quiet: bool,
) -> ExitCode {
    let cfg = match parse_config(config) {
        Ok(c) => c,
        Err(report) => {
            eprint!("{report}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    if let Err(e) = std::fs::create_dir_all(output_dir) {
        eprintln!("cannot create {}: {e}", output_dir.display());
        return ExitCode::from(EXIT_VALIDATION);
    }
    let (sim, data) = build_sim(&cfg);
    let state = initial_state(&sim, &data);
    let csv_path = output_dir.join(&cfg.trajectory);
    let mut csv = match std::fs::File::create(&csv_path) {
        Ok(f) => std::io::BufWriter::new(f),
        Err(e) => {
            eprintln!("cannot create {}: {e}", csv_path.display());
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let _ = writeln!(csv, "{CSV_HEADER}");

    let n_steps = (cfg.march.t_final / cfg.march.dt).round() as usize;
    let mut io_error: Option<std::io::Error> = None;
    let result = run(&sim, state, &cfg.march, |step, st, rec| {
        if io_error.is_some() {
            return;
        }
        if let Err(e) = writeln!(csv, "{}", csv_row(rec)) {
            io_error = Some(e);
            return;
        }
        if let Some(every) = snapshot_every {
            if every > 0 && step % every == 0 {
                for (name, field) in [
                    ("rho", &st.fluid.rho_tilde),
                    ("ux", &st.fluid.ux),
                    ("uy", &st.fluid.uy),
                ] {
                    let p = output_dir.join(format!("snapshot_{step:07}_{name}.bin"));
                    if let Err(e) =
                        write_snapshot(&p, sim.grid.n_r, sim.grid.n_theta, st.fluid.t, field)
                    {
                        io_error = Some(e);
                        return;
                    }
                }
            }
        }
        if !quiet && step > 0 && step % 5000 == 0 {
            eprintln!("step {step}/{n_steps}, t = {:.3}", st.fluid.t);
        }
    });
    if let Some(e) = io_error {
        eprintln!("write error: {e}");
        return ExitCode::from(3);
    }
    if let Err(e) = csv.flush() {
        eprintln!("write error: {e}");
        return ExitCode::from(3);
    }
    match result {
        Ok(traj) => {
            if !quiet {
                let last = traj.records.last().expect("at least the initial record");
                println!(
                    "done: t = {:.3}, |h - h1| = {:.3e}, E = {:.6e}, rows = {}",
                    last.t,
                    (last.h - sim.geom.h1).norm(),
                    last.energy.total(),
                    traj.records.len()
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("aborted: {e}");
            ExitCode::from(e.exit_class() as u8)
        }
    }
}

fn piston(config: &Path, output_dir: &Path, quiet: bool) -> ExitCode {
    let cfg = match parse_config(config) {
        Ok(c) => c,
        Err(report) => {
            eprint!("{report}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    if let Err(e) = std::fs::create_dir_all(output_dir) {
        eprintln!("cannot create {}: {e}", output_dir.display());
        return ExitCode::from(EXIT_VALIDATION);
    }
    let mut state = match PistonState::new(cfg.piston, cfg.ctrl) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let csv_path = output_dir.join(&cfg.trajectory);
    let mut csv = match std::fs::File::create(&csv_path) {
        Ok(f) => std::io::BufWriter::new(f),
        Err(e) => {
            eprintln!("cannot create {}: {e}", csv_path.display());
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let _ = writeln!(csv, "{CSV_HEADER}");

    let dt = cfg.march.dt;
    let steps = (cfg.march.t_final / dt).round() as usize;
    // keep the CSV a sane size for small dt; fields absent in 1-D are zeros
    let stride = (steps / 20_000).max(1);
    let row = |s: &PistonState| {
        let (ml, mr) = s.masses();
        let num = |v: f64| format!("{v:.17e}");
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},0,{},{}",
            num(s.t),
            num(s.h),
            num(0.0),
            num(s.ell),
            num(0.0),
            num(0.0),
            num(s.energy()),
            num(0.0),
            num(0.0),
            num(0.0),
            num(0.0),
            num(0.0),
            num(0.0),
            num(ml + mr),
            num(0.0),
            num(0.0),
        )
    };
    let _ = writeln!(csv, "{}", row(&state));
    for step in 1..=steps {
        if let Err(e) = state.step(dt) {
            eprintln!("aborted: {e}");
            let _ = csv.flush();
            return ExitCode::from(e.exit_class() as u8);
        }
        if step % stride == 0 || step == steps {
            let _ = writeln!(csv, "{}", row(&state));
        }
    }
    if csv.flush().is_err() {
        return ExitCode::from(3);
    }
    if !quiet {
        println!(
            "done: t = {:.3}, |h - h1| = {:.3e}, E = {:.6e}",
            state.t,
            (state.h - cfg.piston.h1).abs(),
            state.energy()
        );
    }
    ExitCode::SUCCESS
}
