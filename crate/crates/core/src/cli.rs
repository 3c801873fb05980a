//! `calibrate`, `validate` and `report` subcommands.
//!
//! Exit codes: 0 success, 1 a Monte Carlo diagnostic breached its tolerance,
//! 2 bad input. Nothing is written when the exit code is 2.

use std::ffi::OsString;
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::calibrator::{bootstrap_with_factors, CalibrationReport, SolveStatus};
use crate::curve::{DiscountCurve, SwapSchedule};
use crate::error::{Error, Result};
use crate::factors::decompose;
use crate::market_io::{
    load_config, load_curve, load_quotes, load_surface, write_calibration_report, write_model_report,
    write_surface, ModelConfig, ModelVolRow,
};
use crate::mcengine::{bond_from, estimate, PathFunctional, DiscountCurveFunctional, HjmModel, PriceEstimate, Side, SwaptionBook};
use crate::svapprox::{pv_conversion, pv_target_to_quote, variance_from_price, ForwardVolSurface};

pub const CALIBRATION_FILE: &str = "calibration.csv";
pub const SURFACE_FILE: &str = "surface.csv";

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    ValidationFailure = 1,
    InputError = 2,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Parser)]
#[command(name = "hjm-sva", version, about = "Small-vol HJM swaption calibration and Monte Carlo validation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Copy)]
struct Overrides {
    /// Override the Monte Carlo seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the Monte Carlo path count from the config.
    #[arg(long)]
    paths: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bootstrap the forward-vol surface from ATM swaption quotes.
    Calibrate {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        quotes: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Output directory for calibration.csv and surface.csv.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check discounted bond prices are martingales under the calibrated model.
    Validate {
        #[arg(long)]
        surface: PathBuf,
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, hide = true)]
        debug_zero_drift: bool,
    },
    /// Reprice every quote by Monte Carlo and tabulate model vs market vols.
    Report {
        #[arg(long)]
        surface: PathBuf,
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        quotes: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Parse `args` (including the program name) and run, writing human-readable
/// output to `stdout` and errors to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { ExitStatus::InputError } else { ExitStatus::Success };
        }
    };
    let result = match cli.command {
        Command::Calibrate { curve, quotes, config, out, overrides: _ } => {
            cmd_calibrate(&curve, &quotes, &config, &out, stdout)
        }
        Command::Validate { surface, curve, config, overrides, debug_zero_drift } => {
            cmd_validate(&surface, &curve, &config, overrides.seed, overrides.paths, debug_zero_drift, stdout)
        }
        Command::Report { surface, curve, quotes, config, out, overrides } => {
            cmd_report(&surface, &curve, &quotes, &config, &out, overrides.seed, overrides.paths, stdout)
        }
    };
    match result {
        Ok(status) => status,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            ExitStatus::InputError
        }
    }
}

fn with_overrides(mut cfg: ModelConfig, seed: Option<u64>, paths: Option<usize>) -> Result<ModelConfig> {
    if let Some(s) = seed {
        cfg.sim.seed = s;
    }
    if let Some(p) = paths {
        cfg.sim.n_paths = p;
    }
    cfg.sim.validate()?;
    Ok(cfg)
}

fn write_file(path: &Path, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    body(&mut buf)?;
    fs::write(path, buf).map_err(|source| Error::Io { path: path.to_owned(), source })
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io { path: PathBuf::from("<stdout>"), source: e }
}

/// Bootstrap and write `calibration.csv` and `surface.csv` into `out`.
pub fn cmd_calibrate(curve: &Path, quotes: &Path, config: &Path, out: &Path, stdout: &mut dyn Write) -> Result<ExitStatus> {
    let cfg = load_config(config)?;
    let curve = load_curve(curve, cfg.dt)?;
    let grid = load_quotes(quotes, cfg.dt)?;
    let report = bootstrap_with_factors(&curve, grid.quotes(), cfg.dt, &cfg.factors)?;

    fs::create_dir_all(out).map_err(|source| Error::Io { path: out.to_owned(), source })?;
    write_file(&out.join(CALIBRATION_FILE), |b| write_calibration_report(&report, b))?;
    write_file(&out.join(SURFACE_FILE), |b| write_surface(&report.surface, b))?;
    print_calibration_summary(&report, stdout).map_err(io_err)?;
    Ok(ExitStatus::Success)
}

fn print_calibration_summary(report: &CalibrationReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "quotes:        {}", report.records.len())?;
    writeln!(out, "cells solved:  {}", report.surface.n_known())?;
    writeln!(out, "max residual:  {:e}", report.max_residual())?;
    writeln!(out, "clamp count:   {}", report.clamp_count())?;
    writeln!(out, "skipped:       {}", report.count(SolveStatus::SkippedNoUnknowns))
}

fn load_model_inputs(
    surface: &Path,
    curve: &Path,
    config: &Path,
    seed: Option<u64>,
    paths: Option<usize>,
) -> Result<(ModelConfig, DiscountCurve, ForwardVolSurface)> {
    let cfg = with_overrides(load_config(config)?, seed, paths)?;
    let curve = load_curve(curve, cfg.dt)?;
    let surface = load_surface(surface, cfg.dt)?;
    Ok((cfg, curve, surface))
}

/// Bond martingale check for every grid maturity up to the configured horizon.
pub fn cmd_validate(
    surface: &Path,
    curve: &Path,
    config: &Path,
    seed: Option<u64>,
    paths: Option<usize>,
    zero_drift: bool,
    stdout: &mut dyn Write,
) -> Result<ExitStatus> {
    let (cfg, curve, surface) = load_model_inputs(surface, curve, config, seed, paths)?;
    let last = (cfg.report.horizon_years / cfg.dt).round() as usize;
    let fsurf = decompose(&surface, &cfg.factors)?;
    let mut model = HjmModel::new(&curve, &fsurf, &cfg.factors, last, last)?;
    if zero_drift {
        model = model.without_drift();
    }
    let estimates = estimate(&model, &cfg.sim, &DiscountCurveFunctional { last })?;

    let mut worst: f64 = 0.0;
    let mut failed = 0;
    writeln!(stdout, "maturity,ratio,ratio_se,z").map_err(io_err)?;
    for (j, est) in (1..=last).zip(&estimates) {
        let initial = bond_from(model.initial_forwards(), j, cfg.dt);
        let (ratio, se) = (est.mean / initial, est.std_error / initial);
        let dev = (ratio - 1.0).abs();
        let z = if dev == 0.0 { 0.0 } else { dev / se };
        worst = worst.max(z);
        if z > cfg.report.se_multiple {
            failed += 1;
        }
        writeln!(stdout, "{},{ratio:.8},{se:.3e},{z:.2}", j as f64 * cfg.dt).map_err(io_err)?;
    }
    writeln!(stdout, "paths: {}  worst z: {worst:.2}  breaches: {failed}", cfg.sim.n_paths).map_err(io_err)?;
    Ok(if failed > 0 { ExitStatus::ValidationFailure } else { ExitStatus::Success })
}

/// Model-implied ATM vols for every quote, from one Monte Carlo pass.
pub fn model_vols(
    curve: &DiscountCurve,
    surface: &ForwardVolSurface,
    cfg: &ModelConfig,
    quotes: &[(f64, f64, f64)],
) -> Result<Vec<ModelVolRow>> {
    let scheds = quotes
        .iter()
        .map(|&(e, t, _)| SwapSchedule::new(e, t, cfg.dt))
        .collect::<Result<Vec<_>>>()?;
    let mut book = SwaptionBook::new();
    for s in &scheds {
        book.push(*s, curve.atm_rate(s)?, Side::Receiver);
    }
    let fsurf = decompose(surface, &cfg.factors)?;
    let model = HjmModel::new(curve, &fsurf, &cfg.factors, book.last_step(), book.required_size())?;
    let prices = estimate(&model, &cfg.sim, &book)?;
    scheds
        .iter()
        .zip(quotes)
        .zip(&prices)
        .map(|((s, &(expiry, tenor, market_vol)), p)| {
            let (vol, se) = implied_vol(curve, s, p)?;
            Ok(ModelVolRow {
                expiry,
                tenor,
                market_vol_bp: market_vol * 1e4,
                model_vol_bp: vol * 1e4,
                mc_se_bp: se * 1e4,
            })
        })
        .collect()
}

/// Annualised normal vol implied by an ATM price, with its standard error.
/// The map is linear in price, so the SE carries over exactly.
pub fn implied_vol(curve: &DiscountCurve, sched: &SwapSchedule, price: &PriceEstimate) -> Result<(f64, f64)> {
    let vol = pv_target_to_quote(curve, sched, variance_from_price(price.mean.max(0.0)))?;
    let scale = (2.0 * PI).sqrt() / (pv_conversion(curve, sched)? * sched.expiry().sqrt());
    Ok((vol, price.std_error * scale))
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_report(
    surface: &Path,
    curve: &Path,
    quotes: &Path,
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    paths: Option<usize>,
    stdout: &mut dyn Write,
) -> Result<ExitStatus> {
    let (cfg, curve, surface) = load_model_inputs(surface, curve, config, seed, paths)?;
    let grid = load_quotes(quotes, cfg.dt)?;
    let q: Vec<_> = grid.quotes().iter().map(|q| (q.expiry, q.tenor, q.vol)).collect();
    let rows = model_vols(&curve, &surface, &cfg, &q)?;
    write_file(out, |b| write_model_report(&rows, b))?;

    let max_diff = rows.iter().map(|r| r.diff_bp().abs()).fold(0.0, f64::max);
    let max_se = rows.iter().map(|r| r.mc_se_bp).fold(0.0, f64::max);
    writeln!(
        stdout,
        "quotes: {}  paths: {}  max |diff|: {max_diff:.3} bp  max se: {max_se:.3} bp",
        rows.len(),
        cfg.sim.n_paths
    )
    .map_err(io_err)?;
    Ok(ExitStatus::Success)
}
