use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use iso_landau::config::DistanceTarget;
use iso_landau::geometry::{self, GeodesicState, ShootingOptions};
use iso_landau::io::{self, SnapshotFile, SNAPSHOT_VERSION};
use iso_landau::{exec, init, landau, report, verify};
use iso_landau::{parse_config, Density, Error, Exec, RadialField, RadialGrid, Result, SimConfig};

#[derive(Parser)]
#[command(name = "iso-landau", version, about = "Radial isotropic Landau laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the flow and write trace.csv, snapshots and report.json.
    Simulate(Common),
    /// Integrate the geodesic equations from the configured (ρ₀, Φ₀) and write path.json.
    Geodesic(Common),
    /// Estimate W_K between the initial density and the configured target by shooting.
    Distance(Common),
    /// Run the identity suite and write verify.json.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// INI-style configuration file (an absent file means all defaults).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(common: &Common) -> Result<SimConfig> {
    let text = match &common.config {
        Some(p) => fs::read_to_string(p)?,
        None => String::new(),
    };
    let mut config = parse_config(&text)?;
    if let Some(out) = &common.out {
        config.out_dir = out.clone();
    }
    fs::create_dir_all(&config.out_dir)?;
    fs::write(config.out_dir.join("config.resolved"), config.resolved())?;
    Ok(config)
}

fn threads_from_env() -> Result<()> {
    if let Ok(v) = std::env::var("ISO_LANDAU_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::config("ISO_LANDAU_THREADS", format!("expected a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(Error::config("ISO_LANDAU_THREADS", "must be at least 1"));
        }
        exec::configure_threads(n);
    }
    Ok(())
}

fn cmd_simulate(config: &SimConfig) -> Result<u8> {
    let out = &config.out_dir;
    match landau::simulate(config) {
        Ok(run) => {
            fs::write(out.join("trace.csv"), io::trace_csv(&run.records, None))?;
            write_snapshots(out, config, &run.snapshots)?;
            let rep = report::build_report(config, &run, Exec::auto())?;
            io::write_json(&out.join("report.json"), &rep)?;
            Ok(0)
        }
        Err(failure) => {
            let rows = failure.partial.as_ref().map(|p| p.records.as_slice()).unwrap_or(&[]);
            fs::write(out.join("trace.csv"), io::trace_csv(rows, Some(&failure.error)))?;
            if let Some(p) = &failure.partial {
                write_snapshots(out, config, &p.snapshots)?;
            }
            Err(failure.error)
        }
    }
}

fn write_snapshots(out: &Path, config: &SimConfig, snaps: &[landau::Snapshot]) -> Result<()> {
    if snaps.is_empty() {
        return Ok(());
    }
    let dir = out.join("snapshots");
    fs::create_dir_all(&dir)?;
    for (k, s) in snaps.iter().enumerate() {
        let file = SnapshotFile { version: SNAPSHOT_VERSION, n: config.n, r_max: config.r_max, t: s.t, values: s.values.clone() };
        io::write_json(&dir.join(format!("snapshot_{k:03}.json")), &file)?;
    }
    Ok(())
}

fn phi0(grid: &std::sync::Arc<RadialGrid>, config: &SimConfig) -> RadialField {
    let (a, w) = (config.geodesic.amplitude, config.geodesic.width);
    RadialField::from_fn(grid, iso_landau::Parity::Even, |r| a * (-r * r / (2.0 * w * w)).exp())
}

#[derive(Serialize)]
struct PathFile<'a> {
    t_end: f64,
    dt: f64,
    steps: usize,
    hamiltonian_0: f64,
    max_relative_h_drift: f64,
    action: f64,
    continuity_defect: f64,
    samples: &'a [io::PathSample],
}

fn geodesic_run(config: &SimConfig) -> Result<(std::sync::Arc<RadialGrid>, Density, geometry::GeodesicRun)> {
    let grid = RadialGrid::uniform(config.n, config.r_max)?;
    let rho0 = landau::initial_density(config, &grid)?;
    let state = GeodesicState::new(&rho0, &phi0(&grid, config))?;
    let g = &config.geodesic;
    let run = geometry::geodesic_integrate(&state, g.t_end, g.dt, g.every)?;
    Ok((grid, rho0, run))
}

fn cmd_geodesic(config: &SimConfig) -> Result<u8> {
    let (grid, _, run) = geodesic_run(config)?;
    let action = geometry::path_action(&grid, &run.samples)?;
    let file = PathFile {
        t_end: run.final_state.t,
        dt: config.geodesic.dt,
        steps: run.steps,
        hamiltonian_0: run.final_state.hamiltonian_0,
        max_relative_h_drift: run.max_relative_h_drift,
        action: action.value,
        continuity_defect: action.continuity_defect,
        samples: &run.samples,
    };
    io::write_json(&config.out_dir.join("path.json"), &file)?;
    Ok(0)
}

#[derive(Serialize)]
struct DistanceFile {
    target: String,
    wk_estimate: f64,
    residual: f64,
    iterations: usize,
    converged: bool,
    w1: f64,
    w1_over_wk: f64,
    coefficients: Vec<f64>,
}

fn distance_target(config: &SimConfig, grid: &std::sync::Arc<RadialGrid>, rho0: &Density) -> Result<(String, Density)> {
    match config.distance.target {
        DistanceTarget::Geodesic => {
            let (_, _, run) = geodesic_run(config)?;
            let end = Density::clipped(grid, run.final_state.rho.values().to_vec(), 0.0)?;
            let m = end.mass();
            let end = if m > 0.0 { Density::new(end.field().scale(rho0.mass() / m), false)? } else { end };
            Ok(("geodesic".into(), end))
        }
        DistanceTarget::Profile(_) => {
            let d = init::from_spec(grid, &config.distance.profile, "distance")?;
            let scaled = Density::new(d.field().scale(config.distance.scale), false)?;
            Ok(("profile".into(), scaled))
        }
    }
}

fn cmd_distance(config: &SimConfig) -> Result<u8> {
    let grid = RadialGrid::uniform(config.n, config.r_max)?;
    let rho0 = landau::initial_density(config, &grid)?;
    let (label, rho1) = distance_target(config, &grid, &rho0)?;
    let d = &config.distance;
    let opts = ShootingOptions { dt: d.dt, rtol: d.rtol, max_iter: d.max_iter, exec: Exec::auto() };
    let res = geometry::wk_distance_shooting(&rho0, &rho1, &opts)?;
    io::write_json(&config.out_dir.join("shooting.json"), &res.report())?;
    let w1 = geometry::w1_radial(&rho0, &rho1)?;
    let file = DistanceFile {
        target: label,
        wk_estimate: res.wk_estimate,
        residual: res.terminal_residual,
        iterations: res.iterations,
        converged: res.converged,
        w1,
        w1_over_wk: geometry::w1_wk_inequality_report(&[(w1, res.wk_estimate)]).ratios[0],
        coefficients: res.coefficients.clone(),
    };
    io::write_json(&config.out_dir.join("distance.json"), &file)?;
    if !res.converged {
        return Err(Error::NonConvergence { iterations: res.iterations, residual: res.terminal_residual });
    }
    Ok(0)
}

fn cmd_verify(config: &SimConfig) -> Result<u8> {
    let rep = verify::run_verify(config, Exec::auto())?;
    io::write_json(&config.out_dir.join("verify.json"), &rep)?;
    for e in &rep.entries {
        println!("{:<26} {} measured {:.3e} tolerance {:.1e}", e.name, if e.passed { "pass" } else { "FAIL" }, e.measured, e.tolerance);
    }
    Ok(if rep.all_passed { 0 } else { 1 })
}

fn run(cli: Cli) -> Result<u8> {
    threads_from_env()?;
    match cli.command {
        Command::Simulate(c) => cmd_simulate(&load(&c)?),
        Command::Geodesic(c) => cmd_geodesic(&load(&c)?),
        Command::Distance(c) => cmd_distance(&load(&c)?),
        Command::Verify(c) => cmd_verify(&load(&c)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("iso-landau: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
