//! Grid sweeps behind the `hartman` command-line tool.
//!
//! Every subcommand evaluates its grid points independently (in parallel when
//! workers are available) and assembles rows in grid order, so output is
//! byte-identical for any worker count. Set `HARTMAN_WORKERS` to pin the
//! worker count.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use crate::error::Error;
use crate::periodic::{periodic_transmission_of, PeriodicSpec};
use crate::potential::PiecewiseConstantPotential;
use crate::spm::{self, Step};
use crate::transfer::{self, unwrap_phase};

pub use config::{ConfigError, OutputFormat, Requirements, SweepConfig};
pub use output::{Cell, Table};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "HARTMAN_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Compute(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{WORKERS_ENV}: {0}")]
    Workers(String),
}

#[derive(Debug, Parser)]
#[command(
    name = "hartman",
    version,
    about = "Transmission and stationary-phase tunneling times for 1D piecewise-constant potentials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CommandKind {
    Transmit,
    Ttime,
    Periodic,
    Hartman,
    Ghe,
    Fractal,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-cell transmission over the energy grid
    Transmit(Overrides),
    /// Single-cell tunneling time over the energy grid
    Ttime(Overrides),
    /// Closed-form N-cell transmission and time over E × N × L
    Periodic(Overrides),
    /// Thickness saturation scan of the single-cell time
    Hartman(Overrides),
    /// Gap independence of the N-cell time at one energy
    Ghe(Overrides),
    /// Cantor / SVC cell: `ttime` or `hartman` over scaled copies
    Fractal(Overrides),
}

impl Command {
    fn split(self) -> (CommandKind, Overrides) {
        match self {
            Command::Transmit(o) => (CommandKind::Transmit, o),
            Command::Ttime(o) => (CommandKind::Ttime, o),
            Command::Periodic(o) => (CommandKind::Periodic, o),
            Command::Hartman(o) => (CommandKind::Hartman, o),
            Command::Ghe(o) => (CommandKind::Ghe, o),
            Command::Fractal(o) => (CommandKind::Fractal, o),
        }
    }
}

#[derive(Debug, Args)]
struct Overrides {
    /// JSON config document
    #[arg(long)]
    config: PathBuf,
    /// Single energy, replacing the config's energy grid
    #[arg(long = "E")]
    energy: Option<f64>,
    /// Repetition counts, comma separated
    #[arg(long = "N", value_delimiter = ',')]
    repetitions: Option<Vec<usize>>,
    /// Gap lengths, comma separated
    #[arg(long = "L", value_delimiter = ',')]
    gaps: Option<Vec<f64>>,
    /// Thickness grid for scans, or the cell width otherwise
    #[arg(long = "b", value_delimiter = ',')]
    thickness: Option<Vec<f64>>,
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    match s {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => Err(format!("unknown format `{other}` (expected csv or json)")),
    }
}

impl CommandKind {
    fn name(self) -> &'static str {
        match self {
            CommandKind::Transmit => "transmit",
            CommandKind::Ttime => "ttime",
            CommandKind::Periodic => "periodic",
            CommandKind::Hartman => "hartman",
            CommandKind::Ghe => "ghe",
            CommandKind::Fractal => "fractal",
        }
    }

    fn scans_thickness(self, cfg: &SweepConfig) -> bool {
        match self {
            CommandKind::Hartman => true,
            CommandKind::Fractal => fractal_mode(cfg) == config::FractalMode::Hartman,
            _ => false,
        }
    }

    fn requirements(self, cfg: &SweepConfig) -> Requirements {
        match self {
            CommandKind::Transmit | CommandKind::Ttime => Requirements {
                energy: true,
                ..Default::default()
            },
            CommandKind::Periodic => Requirements {
                energy: true,
                periodic: true,
                ..Default::default()
            },
            CommandKind::Ghe => Requirements {
                single_energy: true,
                periodic: true,
                ..Default::default()
            },
            CommandKind::Hartman => Requirements {
                single_energy: true,
                thickness: true,
                ..Default::default()
            },
            CommandKind::Fractal if self.scans_thickness(cfg) => Requirements {
                single_energy: true,
                thickness: true,
                ..Default::default()
            },
            CommandKind::Fractal => Requirements {
                energy: true,
                ..Default::default()
            },
        }
    }
}

fn fractal_mode(cfg: &SweepConfig) -> config::FractalMode {
    cfg.fractal_mode.unwrap_or(if cfg.thickness.is_some() {
        config::FractalMode::Hartman
    } else {
        config::FractalMode::Ttime
    })
}

fn apply_overrides(
    kind: CommandKind,
    mut cfg: SweepConfig,
    o: &Overrides,
) -> Result<SweepConfig, ConfigError> {
    if let Some(e) = o.energy {
        cfg.energy = Some(config::EnergySpec::Single(e));
    }
    if o.repetitions.is_some() || o.gaps.is_some() {
        let mut grid = cfg.periodic.take().unwrap_or(config::PeriodicGrid {
            repetitions: Vec::new(),
            gaps: Vec::new(),
        });
        if let Some(n) = &o.repetitions {
            grid.repetitions = n.clone();
        }
        if let Some(l) = &o.gaps {
            grid.gaps = l.clone();
        }
        cfg.periodic = Some(grid);
    }
    if let Some(f) = o.format {
        cfg.format = f;
    }
    if let Some(b) = &o.thickness {
        if kind == CommandKind::Fractal && cfg.fractal_mode.is_none() {
            cfg.fractal_mode = Some(config::FractalMode::Hartman);
        }
        if kind.scans_thickness(&cfg) {
            cfg.thickness = Some(b.clone());
        } else {
            match b.as_slice() {
                [w] => cfg.potential.set_width(*w)?,
                _ => return Err(ConfigError::new("b", "expects a single cell width here")),
            }
        }
    }
    Ok(cfg)
}

/// Runs one subcommand on a validated config and returns its table.
fn evaluate(kind: CommandKind, cfg: &SweepConfig) -> Result<Table, SweepError> {
    let step = Step::from(cfg.derivative_step);
    let cell = cfg.potential.build()?;
    match kind {
        CommandKind::Transmit => transmit(&cell, &cfg.energies()),
        CommandKind::Ttime => ttime(&cell, &cfg.energies(), step),
        CommandKind::Periodic => periodic(&cell, cfg, step),
        CommandKind::Ghe => ghe(&cell, cfg, step),
        CommandKind::Hartman => hartman(cfg, step),
        CommandKind::Fractal => {
            if !cfg.potential.is_cantor() {
                return Err(ConfigError::new(
                    "potential.type",
                    "fractal expects a cantor potential",
                )
                .into());
            }
            match fractal_mode(cfg) {
                config::FractalMode::Hartman => hartman(cfg, step),
                config::FractalMode::Ttime => ttime(&cell, &cfg.energies(), step),
            }
        }
    }
}

fn transmit(cell: &PiecewiseConstantPotential, energies: &[f64]) -> Result<Table, SweepError> {
    let trans = energies
        .par_iter()
        .map(|&e| transfer::transmission_of(cell, e))
        .collect::<Result<Vec<_>, _>>()?;
    let phases: Vec<f64> = trans.iter().map(|t| t.phase).collect();
    let unwrapped = unwrap_phase(&phases);
    let mut table = Table::new(vec!["E", "k", "log10_T", "delta_unwrapped"]);
    for (t, delta) in trans.iter().zip(unwrapped) {
        table.push(vec![
            t.energy.into(),
            t.energy.sqrt().into(),
            (2.0 * t.log_magnitude / std::f64::consts::LN_10).into(),
            delta.into(),
        ]);
    }
    Ok(table)
}

/// A time that is `None` when the point sits too close to a resonance.
fn time_or_flag(
    r: Result<spm::TunnelingTimeResult, Error>,
) -> Result<Option<spm::TunnelingTimeResult>, Error> {
    match r {
        Ok(t) => Ok(Some(t)),
        Err(Error::ResonanceProximity { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn ttime(
    cell: &PiecewiseConstantPotential,
    energies: &[f64],
    step: Step,
) -> Result<Table, SweepError> {
    let times = energies
        .par_iter()
        .map(|&e| time_or_flag(spm::tunneling_time_single(cell, e, step)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(vec!["E", "tau", "phase_derivative", "geometric_term"]);
    for (&e, t) in energies.iter().zip(times) {
        table.push(vec![
            e.into(),
            t.map(|t| t.tau).into(),
            t.map(|t| t.phase_derivative).into(),
            t.map(|t| t.geometric_term).into(),
        ]);
    }
    Ok(table)
}

fn periodic_grid(cfg: &SweepConfig) -> Vec<(usize, f64)> {
    let grid = cfg.periodic.as_ref().expect("validated");
    grid.repetitions
        .iter()
        .flat_map(|&n| grid.gaps.iter().map(move |&l| (n, l)))
        .collect()
}

fn periodic(
    cell: &PiecewiseConstantPotential,
    cfg: &SweepConfig,
    step: Step,
) -> Result<Table, SweepError> {
    let points: Vec<(f64, usize, f64)> = cfg
        .energies()
        .into_iter()
        .flat_map(|e| periodic_grid(cfg).into_iter().map(move |(n, l)| (e, n, l)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(e, n, l)| -> Result<Vec<Cell>, Error> {
            let spec = PeriodicSpec::for_cell(cell, n, l)?;
            let p = periodic_transmission_of(cell, &spec, e)?;
            let tau = if p.near_singular {
                None
            } else {
                time_or_flag(spm::tunneling_time_periodic(cell, &spec, e, step))?
            };
            Ok(vec![
                e.into(),
                Cell::Int(n as u64),
                l.into(),
                p.chi.into(),
                p.phi_n.into(),
                (p.log_magnitude / std::f64::consts::LN_10).into(),
                tau.map(|t| t.tau).into(),
                Cell::Flag(tau.is_none()),
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(vec![
        "E",
        "N",
        "L",
        "chi",
        "phi_N",
        "log10_T_N",
        "tau_N",
        "resonance_flag",
    ]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(table)
}

fn ghe(
    cell: &PiecewiseConstantPotential,
    cfg: &SweepConfig,
    step: Step,
) -> Result<Table, SweepError> {
    let energy = cfg.energies()[0];
    let tau_0 = time_or_flag(spm::tunneling_time_single(cell, energy, step))?.map(|t| t.tau);
    let grid = periodic_grid(cfg);
    let taus = grid
        .par_iter()
        .map(|&(n, l)| {
            let spec = PeriodicSpec::for_cell(cell, n, l)?;
            Ok(
                time_or_flag(spm::tunneling_time_periodic(cell, &spec, energy, step))?
                    .map(|t| t.tau),
            )
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let valid: Vec<f64> = taus.iter().flatten().copied().collect();
    let spread = if valid.is_empty() {
        None
    } else {
        let max = valid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = valid.iter().copied().fold(f64::INFINITY, f64::min);
        Some(max - min)
    };
    let mut table = Table::new(vec!["N", "L", "tau_N", "tau_0", "abs_diff", "spread"]);
    for (&(n, l), tau) in grid.iter().zip(&taus) {
        let diff = tau.zip(tau_0).map(|(a, b)| (a - b).abs());
        table.push(vec![
            Cell::Int(n as u64),
            l.into(),
            (*tau).into(),
            tau_0.into(),
            diff.into(),
            spread.into(),
        ]);
    }
    table.extra.insert("energy".into(), json!(energy));
    Ok(table)
}

fn hartman(cfg: &SweepConfig, step: Step) -> Result<Table, SweepError> {
    let energy = cfg.energies()[0];
    let thickness = cfg.thickness.as_deref().expect("validated");
    let family = |b: f64| {
        cfg.potential
            .build_with_width(b)
            .map_err(|e| Error::InvalidArgument(e.to_string()))
    };
    let scan = spm::saturation_scan(family, energy, thickness, cfg.tolerance.saturation, step)?;
    let limit = cfg
        .potential
        .rectangular_height()
        .and_then(|v| spm::hartman_limit_rect(v, energy).ok());

    let mut table = Table::new(vec!["b", "tau", "tau_limit", "abs_err"]);
    for (&b, tau) in scan.thickness.iter().zip(&scan.tau) {
        let err = tau.zip(limit).map(|(t, l)| (t - l).abs());
        table.push(vec![b.into(), (*tau).into(), limit.into(), err.into()]);
    }
    table.extra.insert("energy".into(), json!(energy));
    table
        .extra
        .insert("converged".into(), json!(scan.converged));
    table
        .extra
        .insert("tau_0_estimate".into(), json!(scan.tau_0_estimate));
    table.extra.insert("excluded".into(), json!(scan.excluded));
    Ok(table)
}

fn worker_pool() -> Result<rayon::ThreadPool, SweepError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(WORKERS_ENV) {
        let n: usize = raw.trim().parse().map_err(|_| {
            SweepError::Workers(format!("expected a positive integer, got `{raw}`"))
        })?;
        if n == 0 {
            return Err(SweepError::Workers("must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| SweepError::Workers(e.to_string()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), SweepError> {
    fs::write(path, bytes).map_err(|source| SweepError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn execute(kind: CommandKind, o: &Overrides, stdout: &mut dyn Write) -> Result<(), SweepError> {
    let text = fs::read_to_string(&o.config).map_err(|source| SweepError::Io {
        path: o.config.display().to_string(),
        source,
    })?;
    let cfg = apply_overrides(kind, SweepConfig::from_json(&text)?, o)?;
    cfg.validate(kind.requirements(&cfg))?;

    let table = worker_pool()?.install(|| evaluate(kind, &cfg))?;

    let mut buf = Vec::new();
    let io_err = |source| SweepError::Io {
        path: "<output>".into(),
        source,
    };
    match cfg.format {
        OutputFormat::Csv => table.write_csv(&mut buf).map_err(io_err)?,
        OutputFormat::Json => table
            .write_json(&mut buf, kind.name(), cfg.to_json())
            .map_err(io_err)?,
    }
    match &o.out {
        Some(path) => {
            write_file(path, &buf)?;
            if cfg.format == OutputFormat::Csv {
                let meta = table.metadata(kind.name(), cfg.to_json());
                let mut text = serde_json::to_vec_pretty(&meta).expect("metadata serialises");
                text.push(b'\n');
                write_file(&sidecar_path(path), &text)?;
            }
        }
        None => stdout.write_all(&buf).map_err(io_err)?,
    }
    Ok(())
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit status. Diagnostics go to `stderr` as a single line.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
            } else {
                let _ = write!(stdout, "{rendered}");
            }
            return code;
        }
    };
    let (kind, overrides) = cli.command.split();
    match execute(kind, &overrides, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            let _ = writeln!(stderr, "error: {line}");
            match e {
                SweepError::Config(_) | SweepError::Workers(_) => 2,
                _ => 1,
            }
        }
    }
}
