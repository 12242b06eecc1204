use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use tsfp_core::harness::{
    sweep, write_csv_file, write_json_file, write_spectrum, CellStatus, ReferenceCache, SweepResult,
};
use tsfp_core::{
    dispersion, energy, evolve, forward, plane_wave_solution, sobolev_norm, Error, Field,
    InitialPreset, Observers, StatePair,
};

mod config;

use config::{Command, RawConfig, RunConfig};

#[derive(Parser)]
#[command(
    name = "tsfp",
    version,
    about = "Strang-split Fourier pseudospectral solver for the nonlinear Klein-Gordon equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Evolve to the horizon and write the final state and an energy log.
    Simulate,
    /// Mesh refinement study at a fine fixed step.
    SweepSpace,
    /// Step refinement study on a fine fixed mesh.
    SweepTime,
    /// Evolve a plane wave and compare its phase with the exact frequency.
    DispersionCheck,
    /// Report the largest relative energy change over the run.
    EnergyDrift,
}

#[derive(Args)]
struct Overrides {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (output.path).
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    epsilon: Option<String>,
    #[arg(long, global = true)]
    beta: Option<String>,
    #[arg(long, global = true)]
    p: Option<String>,
    /// Number of grid nodes (grid.n).
    #[arg(long, global = true)]
    n: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    dt: Option<String>,
    #[arg(long, global = true)]
    t0: Option<String>,
    /// tvt or vtv.
    #[arg(long, global = true)]
    composition: Option<String>,
    /// uv or psi.
    #[arg(long, global = true)]
    formulation: Option<String>,
    /// real-weak or complex-oscillatory.
    #[arg(long, global = true)]
    kind: Option<String>,
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Any other key, as key=value. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Overrides {
    fn apply(&self, raw: &mut RawConfig) -> Result<()> {
        let pairs = [
            ("output.path", &self.out),
            ("problem.epsilon", &self.epsilon),
            ("problem.beta", &self.beta),
            ("problem.p", &self.p),
            ("grid.n", &self.n),
            ("time.dt", &self.dt),
            ("time.t0", &self.t0),
            ("splitting.composition", &self.composition),
            ("splitting.formulation", &self.formulation),
            ("problem.kind", &self.kind),
            ("problem.preset", &self.preset),
        ];
        for pair in &self.set {
            raw.set_pair(pair)?;
        }
        for (key, value) in pairs {
            if let Some(v) = value {
                raw.set(key, v.as_str())?;
            }
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Returns whether every requested computation completed.
fn run(cli: &Cli) -> Result<bool> {
    let mut raw = match &cli.overrides.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    cli.overrides.apply(&mut raw)?;
    let command = match cli.command {
        Cmd::Simulate => Command::Simulate,
        Cmd::SweepSpace => Command::SweepSpace,
        Cmd::SweepTime => Command::SweepTime,
        Cmd::DispersionCheck => Command::DispersionCheck,
        Cmd::EnergyDrift => Command::EnergyDrift,
    };
    let config = RunConfig::build(command, &raw)?;
    match command {
        Command::Simulate => simulate(&config),
        Command::SweepSpace | Command::SweepTime => run_sweep(&config),
        Command::DispersionCheck => dispersion_check(&config),
        Command::EnergyDrift => energy_drift(&config),
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

fn write_nodal(path: &Path, field: &Field) -> Result<()> {
    let mut out = String::with_capacity(field.values().len() * 72);
    for (x, z) in field.grid().nodes().iter().zip(field.values()) {
        out.push_str(&format!("{x:.17e} {:.17e} {:.17e}\n", z.re, z.im));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

fn report_blow_up(err: Error) -> Result<bool> {
    match err {
        Error::BlowUp { .. } => {
            eprintln!("{err}");
            Ok(false)
        }
        other => Err(other.into()),
    }
}

fn simulate(config: &RunConfig) -> Result<bool> {
    let grid = config.grid()?;
    let observers = Observers::energy(config.observe_every);
    let (state, log) = match evolve(&config.problem, &grid, &config.stepper, &observers) {
        Ok(done) => done,
        Err(e) => return report_blow_up(e),
    };
    let dir = &config.output;
    create_dir(dir)?;
    write_nodal(&dir.join("u.txt"), state.u())?;
    write_nodal(&dir.join("v.txt"), state.v())?;
    write_spectrum(&dir.join("u.spec"), &forward(state.u()), state.time())?;
    write_spectrum(&dir.join("v.spec"), &forward(state.v()), state.time())?;

    let mut csv = String::from("step,time,energy\n");
    for s in &log.energy {
        csv.push_str(&format!("{},{:e},{:e}\n", s.step, s.time, s.energy));
    }
    let energy_path = dir.join("energy.csv");
    fs::write(&energy_path, csv).with_context(|| format!("writing {}", energy_path.display()))?;

    println!(
        "t = {:.6} after {} steps on {} nodes; max |u| = {:.6e}; energy drift = {:.3e}",
        state.time(),
        log.steps,
        grid.len(),
        state.u().max_abs(),
        log.max_relative_energy_drift().unwrap_or(0.0)
    );
    println!("wrote {}", dir.display());
    Ok(true)
}

fn run_sweep(config: &RunConfig) -> Result<bool> {
    let spec = config.sweep.as_ref().expect("sweep commands carry a sweep");
    let cache = match &config.reference_cache {
        Some(dir) => {
            create_dir(dir)?;
            ReferenceCache::with_dir(dir)
        }
        None => ReferenceCache::new(),
    };
    let result = sweep(spec, &cache)?;
    let dir = &config.output;
    create_dir(dir)?;
    write_csv_file(&result, &dir.join("sweep.csv"))?;
    write_json_file(&result, &dir.join("sweep.json"))?;
    print_table(&result)?;
    for cell in result.cells.iter().flatten() {
        if let Some(msg) = &cell.message {
            eprintln!("epsilon {:e}, {:e}: {msg}", cell.epsilon, cell.axis_value);
        }
    }
    println!("wrote {}", dir.display());
    Ok(result.all_ok())
}

fn print_table(result: &SweepResult) -> Result<()> {
    let mut out = std::io::stdout().lock();
    write!(out, "{:>10}", "epsilon")?;
    for v in &result.spec.values {
        write!(out, " {v:>16.4e}")?;
    }
    writeln!(out)?;
    for row in &result.cells {
        write!(out, "{:>10.4e}", row[0].epsilon)?;
        for cell in row {
            let text = match (cell.status, cell.report) {
                (CellStatus::Ok, Some(r)) => match r.observed_order {
                    Some(o) => format!("{:.3e} ({o:.2})", r.error_u),
                    None => format!("{:.3e}", r.error_u),
                },
                (status, _) => status.as_str().to_string(),
            };
            write!(out, " {text:>16}")?;
        }
        writeln!(out)?;
    }
    write!(out, "{:>10}", "e_inf")?;
    for e in &result.e_inf {
        match e {
            Some(e) => write!(out, " {e:>16.3e}")?,
            None => write!(out, " {:>16}", "-")?,
        }
    }
    writeln!(out)?;
    Ok(())
}

fn dispersion_check(config: &RunConfig) -> Result<bool> {
    let problem = &config.problem;
    let InitialPreset::PlaneWave { amplitude, mode } = problem.initial else {
        unreachable!("validated by the config");
    };
    let grid = config.grid()?;
    let (state, _) = match evolve(problem, &grid, &config.stepper, &Observers::default()) {
        Ok(done) => done,
        Err(e) => return report_blow_up(e),
    };
    let exact = plane_wave_solution(problem, &grid, state.time())?;
    let xi = grid.mu(mode).expect("mode validated by the initial state");
    let relation = dispersion(problem, xi, amplitude);

    let numeric = forward(state.u()).coeff(mode).expect("mode on grid");
    let target = forward(exact.u()).coeff(mode).expect("mode on grid");
    let phase_error = (numeric / target).arg().abs();
    let h1_error = difference_norm(&state, &exact);
    let k = config.stepper.dt;
    println!(
        "omega = {:.12e}, group velocity = {:.12e}",
        relation.omega, relation.group_velocity
    );
    println!(
        "phase error = {phase_error:.3e} (/k^2 = {:.3e}); H1 error = {h1_error:.3e}; k = {k:e}, T = {}",
        phase_error / (k * k),
        state.time()
    );
    Ok(true)
}

fn difference_norm(a: &StatePair, b: &StatePair) -> f64 {
    let diff: Vec<_> = a
        .u()
        .values()
        .iter()
        .zip(b.u().values())
        .map(|(x, y)| x - y)
        .collect();
    sobolev_norm(&forward(&Field::new(a.grid().clone(), diff)), 1.0)
}

fn energy_drift(config: &RunConfig) -> Result<bool> {
    let grid = config.grid()?;
    let observers = Observers::energy(config.observe_every);
    let (state, log) = match evolve(&config.problem, &grid, &config.stepper, &observers) {
        Ok(done) => done,
        Err(e) => return report_blow_up(e),
    };
    let e0 = log
        .energy
        .first()
        .map(|s| s.energy)
        .unwrap_or_else(|| energy(&config.problem, &state));
    println!(
        "E(0) = {e0:.12e}; max relative drift = {:.3e} over {} samples to t = {}",
        log.max_relative_energy_drift().unwrap_or(0.0),
        log.energy.len(),
        state.time()
    );
    Ok(true)
}
