//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 for usage and validation errors, 2 for
//! numerical failures.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use floquet_lattice_core::effective::{effective_params, effective_propagate};
use floquet_lattice_core::experiments::{scan_min_p1, scan_spectrum, Grid};
use floquet_lattice_core::floquet::{floquet_modes, monodromy};
use floquet_lattice_core::propagator::{
    min_population, propagate_decimated, StateVector, DEFAULT_STEPS_PER_PERIOD,
};
use floquet_lattice_core::specfun::{bessel_j, j0_zero};

use crate::config::{load_run_config, parse_grid, RunConfig};
use crate::error::{AppError, AppResult};
use crate::executor::{ThreadPool, WORKERS_ENV};
use crate::figures::{reproduce, ReproduceOptions};
use crate::format;
use crate::manifest::Manifest;

const DEFAULT_PERIODS: usize = 200;

#[derive(Debug, Parser)]
#[command(name = "floquet-lattice", version, about = "Boundary-driven tight-binding lattice simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config: a bare spec or {"spec": ..., settings}.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Override a config value, e.g. `a2=24` or `grid.points=61`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Horizon in drive periods.
    #[arg(long, value_name = "N")]
    periods: Option<usize>,
    #[arg(long, value_name = "N")]
    steps_per_period: Option<usize>,
    /// Worker threads for scans [default: available parallelism].
    #[arg(long, value_name = "N", env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Scan grid over A/omega.
    #[arg(long, value_name = "START:STOP:POINTS", value_parser = parse_grid)]
    grid: Option<Grid>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate from a localized state and write the trajectory.
    Propagate {
        #[command(flatten)]
        common: Common,
        /// Initially occupied site (1-based).
        #[arg(long, value_name = "J")]
        site: Option<usize>,
        /// Keep every N-th integrator step.
        #[arg(long, value_name = "N")]
        stride: Option<usize>,
        /// Also write the three-site effective-model trajectory.
        #[arg(long)]
        effective: bool,
    },
    /// One-period propagator, quasi-energies and Floquet modes.
    Floquet {
        #[command(flatten)]
        common: Common,
    },
    /// Min(P1) over the horizon across a grid of A2/omega.
    ScanMinp1 {
        #[command(flatten)]
        common: Common,
    },
    /// Tracked Floquet spectrum across a grid, with crossing classification.
    ScanSpectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Run a bundled figure recipe (fig2..fig8).
    Reproduce {
        figure: String,
        #[command(flatten)]
        common: Common,
    },
    /// Bessel J_k values, or positive zeros of J0.
    Bessel {
        #[arg(long, default_value_t = 0)]
        order: u32,
        /// Print the first N zeros of J0.
        #[arg(long, value_name = "N")]
        zeros: Option<usize>,
        #[arg(allow_negative_numbers = true)]
        x: Vec<f64>,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> AppResult<()> {
    match command {
        Command::Propagate {
            common,
            site,
            stride,
            effective,
        } => cmd_propagate(&common, site, stride, effective, stdout),
        Command::Floquet { common } => cmd_floquet(&common, stdout),
        Command::ScanMinp1 { common } => cmd_scan(&common, false, stdout),
        Command::ScanSpectrum { common } => cmd_scan(&common, true, stdout),
        Command::Reproduce { figure, common } => cmd_reproduce(&figure, &common, stdout),
        Command::Bessel { order, zeros, x } => cmd_bessel(order, zeros, &x, stdout),
    }
}

fn load(common: &Common) -> AppResult<RunConfig> {
    let mut cfg = load_run_config(common.config.as_deref(), &common.set)?;
    if common.periods.is_some() {
        cfg.periods = common.periods;
    }
    if common.steps_per_period.is_some() {
        cfg.steps_per_period = common.steps_per_period;
    }
    if common.grid.is_some() {
        cfg.grid = common.grid;
    }
    Ok(cfg)
}

fn pool(common: &Common) -> ThreadPool {
    match common.workers {
        Some(n) if n > 0 => ThreadPool::new(n),
        _ => ThreadPool::available(),
    }
}

fn out_file(out: &Path, name: &str, files: &mut Vec<String>) -> AppResult<BufWriter<File>> {
    fs::create_dir_all(out).map_err(|e| AppError::io(out, e))?;
    let path = out.join(name);
    let f = File::create(&path).map_err(|e| AppError::io(&path, e))?;
    files.push(name.to_string());
    Ok(BufWriter::new(f))
}

fn io_err(e: std::io::Error) -> AppError {
    AppError::io("<stdout>", e)
}

fn cmd_propagate(
    common: &Common,
    site: Option<usize>,
    stride: Option<usize>,
    effective: bool,
    stdout: &mut dyn Write,
) -> AppResult<()> {
    let started = Instant::now();
    let mut cfg = load(common)?;
    if site.is_some() {
        cfg.initial_site = site;
    }
    if stride.is_some() {
        cfg.stride = stride;
    }
    let spec = cfg.spec;
    let site = cfg.initial_site.unwrap_or(1);
    let periods = cfg.periods.unwrap_or(DEFAULT_PERIODS);
    let steps = cfg.steps_per_period.unwrap_or(DEFAULT_STEPS_PER_PERIOD);
    let stride = cfg.stride.unwrap_or(1);
    let start = StateVector::localized(spec.n_sites, site)?;
    let t_end = periods as f64 * spec.period();
    let traj = propagate_decimated(&spec, &start, t_end, steps, stride)?;
    let min = min_population(&traj, site)?;

    let mut m = Manifest::new("propagate", spec, steps);
    m.horizon_periods = Some(periods);
    m.overrides = common.set.clone();
    format::write_trajectory(out_file(&common.out, "trajectory.csv", &mut m.files)?, &traj)?;
    if effective {
        let params = effective_params(&spec, &start)?;
        let eff = effective_propagate(&params, t_end, traj.step_size() * stride as f64)?;
        format::write_effective_trajectory(
            out_file(&common.out, "trajectory_effective.csv", &mut m.files)?,
            &eff,
        )?;
    }
    m.metrics.insert(format!("min_p{site}"), min);
    if let Some(last) = traj.final_state() {
        m.metrics
            .insert("final_norm_deviation".into(), (last.norm_sqr() - 1.0).abs());
    }
    m.finish(started, &common.out.join("propagate_manifest.json"))?;
    writeln!(stdout, "min_p{site} = {}", format::num(min)).map_err(io_err)?;
    Ok(())
}

fn cmd_floquet(common: &Common, stdout: &mut dyn Write) -> AppResult<()> {
    let started = Instant::now();
    let cfg = load(common)?;
    let spec = cfg.spec;
    let steps = cfg.steps_per_period.unwrap_or(DEFAULT_STEPS_PER_PERIOD);
    let u = monodromy(&spec, steps)?;
    let modes = floquet_modes(&u)?;
    let param = match cfg.scan_parameter.unwrap_or_default() {
        floquet_lattice_core::experiments::ScanParameter::A1 => spec.a1 / spec.omega,
        floquet_lattice_core::experiments::ScanParameter::A2 => spec.a2 / spec.omega,
    };
    let mut m = Manifest::new("floquet", spec, steps);
    m.overrides = common.set.clone();
    format::write_modes(out_file(&common.out, "modes.csv", &mut m.files)?, param, &modes)?;
    format::write_monodromy(out_file(&common.out, "monodromy.csv", &mut m.files)?, u.matrix())?;
    m.metrics.insert("unitarity_residual".into(), u.unitarity_residual());
    for (i, mode) in modes.iter().enumerate() {
        m.metrics.insert(format!("quasienergy[{i}]"), mode.quasienergy);
        writeln!(stdout, "epsilon[{i}] = {}", format::num(mode.quasienergy)).map_err(io_err)?;
    }
    m.finish(started, &common.out.join("floquet_manifest.json"))?;
    Ok(())
}

fn cmd_scan(common: &Common, spectrum: bool, stdout: &mut dyn Write) -> AppResult<()> {
    let started = Instant::now();
    let cfg = load(common)?;
    let scan = cfg.scan_config();
    let pool = pool(common);
    let result = if spectrum {
        scan_spectrum(&scan, &pool)?
    } else {
        scan_min_p1(&scan, &pool)?
    };
    let name = if spectrum { "scan_spectrum" } else { "scan_minp1" };
    let mut m = Manifest::new(name, scan.base_spec, scan.steps_per_period);
    m.grid = Some(scan.grid);
    m.horizon_periods = (!spectrum).then_some(scan.horizon_periods);
    m.overrides = common.set.clone();
    m.workers = pool.workers();
    m.landmarks = result.landmarks.j0_zeros.clone();
    m.classifications = result.landmarks.approaches.clone();
    m.warnings = result.warnings.clone();
    if spectrum {
        format::write_spectrum_scan(out_file(&common.out, "spectrum.csv", &mut m.files)?, &result)?;
        for a in &result.landmarks.approaches {
            writeln!(
                stdout,
                "near J0 zero {}: {:?} at {} (gap {})",
                format::num(a.j0_zero),
                a.kind,
                format::num(a.location),
                format::num(a.gap)
            )
            .map_err(io_err)?;
        }
    } else {
        format::write_min_p1_scan(out_file(&common.out, "minp1.csv", &mut m.files)?, &result)?;
    }
    m.finish(started, &common.out.join(format!("{name}_manifest.json")))?;
    writeln!(stdout, "{} points written to {}", result.points.len(), common.out.display())
        .map_err(io_err)?;
    Ok(())
}

fn cmd_reproduce(figure: &str, common: &Common, stdout: &mut dyn Write) -> AppResult<()> {
    if common.config.is_some() {
        return Err(AppError::Usage(
            "reproduce uses bundled recipes; adjust them with --set instead of --config".into(),
        ));
    }
    let opts = ReproduceOptions {
        overrides: common.set.clone(),
        horizon_periods: common.periods,
        steps_per_period: common.steps_per_period,
        grid: common.grid,
        workers: common.workers.filter(|n| *n > 0),
    };
    let m = reproduce(figure, &common.out, &opts)?;
    for f in &m.files {
        writeln!(stdout, "{}", common.out.join(f).display()).map_err(io_err)?;
    }
    let manifest = common.out.join(format!("{figure}_manifest.json"));
    writeln!(stdout, "{}", manifest.display()).map_err(io_err)?;
    Ok(())
}

fn cmd_bessel(order: u32, zeros: Option<usize>, xs: &[f64], stdout: &mut dyn Write) -> AppResult<()> {
    if let Some(n) = zeros {
        for k in 1..=n {
            writeln!(stdout, "{k},{}", format::num(j0_zero(k)?)).map_err(io_err)?;
        }
    }
    for &x in xs {
        writeln!(stdout, "{},{}", format::num(x), format::num(bessel_j(order, x)?)).map_err(io_err)?;
    }
    if zeros.is_none() && xs.is_empty() {
        return Err(AppError::Usage("bessel needs argument values or --zeros N".into()));
    }
    Ok(())
}
