//! CSV and TOML ingestion plus the CSV writers used by the command line.
//!
//! Loaders reject malformed input rather than repairing it; every error
//! carries the file and line (or config key) it came from.
//!
//! File formats (UTF-8, LF or CRLF):
//!
//! * curve: `maturity_years,discount_factor`
//! * quotes: `expiry_years,tenor_years,normal_vol_bp`
//! * surface: `t_i,T_j,sigma`
//! * config: TOML, see [`ModelConfig`].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibrator::{CalibrationReport, QuoteGrid, SwaptionQuote};
use crate::curve::{grid_index, DiscountCurve, SwapSchedule, DEFAULT_DT};
use crate::error::{Error, Result};
use crate::factors::FactorSet;
use crate::mcengine::SimConfig;
use crate::svapprox::ForwardVolSurface;

pub const CURVE_HEADER: [&str; 2] = ["maturity_years", "discount_factor"];
pub const QUOTES_HEADER: [&str; 3] = ["expiry_years", "tenor_years", "normal_vol_bp"];
pub const SURFACE_HEADER: [&str; 3] = ["t_i", "T_j", "sigma"];
pub const CALIBRATION_HEADER: [&str; 10] =
    ["expiry", "tenor", "market_vol", "solved_sigma", "A", "B", "C", "target", "residual", "status"];
pub const MODEL_REPORT_HEADER: [&str; 6] =
    ["expiry", "tenor", "market_vol_bp", "model_vol_bp", "diff_bp", "mc_se_bp"];

const BP: f64 = 1e4;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })
}

/// Numeric rows of a headed CSV as `(line, values)`.
fn parse_rows(text: &str, origin: &Path, header: &[&str]) -> Result<Vec<(usize, Vec<f64>)>> {
    let err = |line: usize, msg: String| Error::Parse { path: origin.to_owned(), line, msg };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let found = reader.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if found.iter().map(|h| h.trim_start_matches('\u{feff}')).ne(header.iter().copied()) {
        return Err(err(1, format!("expected header `{}`", header.join(","))));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let values = rec
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(line, format!("malformed number `{field}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((line, values));
    }
    Ok(rows)
}

/// Parse curve CSV text; `origin` only labels errors.
pub fn parse_curve(text: &str, origin: &Path, dt: f64) -> Result<DiscountCurve> {
    let rows = parse_rows(text, origin, &CURVE_HEADER)?;
    let err = |line: usize, msg: String| Error::Parse { path: origin.to_owned(), line, msg };
    if rows.is_empty() {
        return Err(err(1, "no pillars".into()));
    }
    let mut last = None;
    let mut pillars = Vec::with_capacity(rows.len());
    for (line, v) in rows {
        let (t, df) = (v[0], v[1]);
        if df <= 0.0 {
            return Err(err(line, format!("discount factor {df} must be positive")));
        }
        if t < 0.0 || last.is_some_and(|l| t <= l) {
            return Err(err(line, format!("maturity {t} not increasing")));
        }
        if t == 0.0 && df != 1.0 {
            return Err(err(line, format!("discount factor at maturity 0 must be 1, got {df}")));
        }
        last = Some(t);
        pillars.push((t, df));
    }
    DiscountCurve::new(&pillars, dt)
}

pub fn load_curve(path: impl AsRef<Path>, dt: f64) -> Result<DiscountCurve> {
    let path = path.as_ref();
    parse_curve(&read(path)?, path, dt)
}

/// Parse quote CSV text; vols are converted from bp to absolute.
pub fn parse_quotes(text: &str, origin: &Path, dt: f64) -> Result<QuoteGrid> {
    let err = |line: usize, msg: String| Error::Parse { path: origin.to_owned(), line, msg };
    let rows = parse_rows(text, origin, &QUOTES_HEADER)?;
    if rows.is_empty() {
        return Err(err(1, "no quotes".into()));
    }
    let mut seen = std::collections::HashMap::new();
    let mut quotes = Vec::with_capacity(rows.len());
    for (line, v) in rows {
        let (expiry, tenor, bp) = (v[0], v[1], v[2]);
        if bp < 0.0 {
            return Err(err(line, format!("negative vol {bp}")));
        }
        let sched = SwapSchedule::new(expiry, tenor, dt).map_err(|e| err(line, e.to_string()))?;
        if sched.expiry_index() == 0 {
            return Err(err(line, "expiry must be positive".into()));
        }
        if let Some(first) = seen.insert((sched.expiry_index(), sched.n_payments()), line) {
            return Err(err(line, format!("duplicate quote ({expiry}, {tenor}), first on line {first}")));
        }
        quotes.push(SwaptionQuote::new(expiry, tenor, bp / BP));
    }
    QuoteGrid::new(quotes, dt)
}

pub fn load_quotes(path: impl AsRef<Path>, dt: f64) -> Result<QuoteGrid> {
    let path = path.as_ref();
    parse_quotes(&read(path)?, path, dt)
}

pub fn parse_surface(text: &str, origin: &Path, dt: f64) -> Result<ForwardVolSurface> {
    let err = |line: usize, msg: String| Error::Parse { path: origin.to_owned(), line, msg };
    let rows = parse_rows(text, origin, &SURFACE_HEADER)?;
    let mut cells = Vec::with_capacity(rows.len());
    for (line, v) in rows {
        let (i, j) = match (grid_index(v[0], dt), grid_index(v[1], dt)) {
            (Some(i), Some(j)) if i <= j => (i, j),
            _ => return Err(err(line, format!("cell ({}, {}) not on the dt={dt} grid with t_i <= T_j", v[0], v[1]))),
        };
        if v[2] < 0.0 {
            return Err(err(line, format!("negative vol {}", v[2])));
        }
        cells.push((i, j, v[2]));
    }
    let size = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
    let mut s = ForwardVolSurface::empty(dt, size);
    for (i, j, v) in cells {
        s.set(i, j, v);
    }
    Ok(s)
}

pub fn load_surface(path: impl AsRef<Path>, dt: f64) -> Result<ForwardVolSurface> {
    let path = path.as_ref();
    parse_surface(&read(path)?, path, dt)
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Io { path: PathBuf::from("<output>"), source: std::io::Error::other(e.to_string()) }
}

/// Known cells as `t_i,T_j,sigma`.
pub fn write_surface(surface: &ForwardVolSurface, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SURFACE_HEADER).map_err(csv_err)?;
    let dt = surface.dt();
    for (i, j, s) in surface.known_cells() {
        w.write_record(&[(i as f64 * dt).to_string(), (j as f64 * dt).to_string(), s.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

pub fn write_calibration_report(report: &CalibrationReport, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CALIBRATION_HEADER).map_err(csv_err)?;
    for r in &report.records {
        w.write_record(&[
            r.quote.expiry.to_string(),
            r.quote.tenor.to_string(),
            r.quote.vol.to_string(),
            r.sigma.map(|s| s.to_string()).unwrap_or_default(),
            r.quadratic.a.to_string(),
            r.quadratic.b.to_string(),
            r.quadratic.c.to_string(),
            r.target.to_string(),
            r.residual.to_string(),
            r.status.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// One row of the model-vs-market table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelVolRow {
    pub expiry: f64,
    pub tenor: f64,
    pub market_vol_bp: f64,
    pub model_vol_bp: f64,
    pub mc_se_bp: f64,
}

impl ModelVolRow {
    pub fn diff_bp(&self) -> f64 {
        self.model_vol_bp - self.market_vol_bp
    }
}

pub fn write_model_report(rows: &[ModelVolRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MODEL_REPORT_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record(&[
            r.expiry.to_string(),
            r.tenor.to_string(),
            r.market_vol_bp.to_string(),
            r.model_vol_bp.to_string(),
            r.diff_bp().to_string(),
            r.mc_se_bp.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFactor {
    weight: f64,
    kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMonteCarlo {
    paths: Option<u64>,
    seed: Option<u64>,
    antithetic: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReport {
    horizon_years: Option<f64>,
    se_multiple: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    correlation: Option<Vec<f64>>,
    #[serde(default, rename = "factor")]
    factors: Vec<RawFactor>,
    monte_carlo: Option<RawMonteCarlo>,
    report: Option<RawReport>,
}

/// Validation and report settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    /// Bond martingale checks run for maturities up to this horizon.
    pub horizon_years: f64,
    /// Tolerance, in standard errors, for MC diagnostics.
    pub se_multiple: f64,
}

/// Model configuration.
///
/// ```toml
/// dt = 0.25                          # grid step, years
/// correlation = [1.0, 0.3,           # row-major N×N, default identity
///                0.3, 1.0]
///
/// [[factor]]                         # repeated; default one factor a=1, κ=0
/// weight = 1.0
/// kappa = 0.0
///
/// [[factor]]
/// weight = 0.5
/// kappa = 0.3
///
/// [monte_carlo]
/// paths = 100000
/// seed = 42
/// antithetic = true
///
/// [report]
/// horizon_years = 10.0
/// se_multiple = 3.0
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub dt: f64,
    pub factors: FactorSet,
    pub sim: SimConfig,
    pub report: ReportOptions,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            factors: FactorSet::single(),
            sim: SimConfig { n_paths: 100_000, seed: 42, antithetic: true },
            report: ReportOptions { horizon_years: 10.0, se_multiple: 3.0 },
        }
    }
}

impl ModelConfig {
    pub fn to_toml(&self) -> String {
        let n = self.factors.len();
        let raw = RawConfig {
            dt: Some(self.dt),
            correlation: Some(self.factors.correlation().iter().flatten().copied().collect()),
            factors: (0..n)
                .map(|m| RawFactor { weight: self.factors.weights()[m], kappa: self.factors.kappas()[m] })
                .collect(),
            monte_carlo: Some(RawMonteCarlo {
                paths: Some(self.sim.n_paths as u64),
                seed: Some(self.sim.seed),
                antithetic: Some(self.sim.antithetic),
            }),
            report: Some(RawReport {
                horizon_years: Some(self.report.horizon_years),
                se_multiple: Some(self.report.se_multiple),
            }),
        };
        toml::to_string(&raw).expect("config serialises")
    }
}

pub fn parse_config(text: &str) -> Result<ModelConfig> {
    let cfg_err = |key: &str, msg: String| Error::Config { key: key.to_owned(), msg };
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_owned();
        // toml reports the offending key in the message for unknown/mistyped fields
        cfg_err(&key_from_toml_error(&e, text), msg)
    })?;
    let defaults = ModelConfig::default();

    let dt = raw.dt.unwrap_or(defaults.dt);
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(cfg_err("dt", format!("must be positive, got {dt}")));
    }

    let factors = if raw.factors.is_empty() { vec![RawFactor { weight: 1.0, kappa: 0.0 }] } else { raw.factors };
    let n = factors.len();
    for (m, f) in factors.iter().enumerate() {
        if !(f.weight > 0.0 && f.weight.is_finite()) {
            return Err(cfg_err(&format!("factor[{m}].weight"), format!("must be positive, got {}", f.weight)));
        }
        if !(f.kappa >= 0.0 && f.kappa.is_finite()) {
            return Err(cfg_err(&format!("factor[{m}].kappa"), format!("must be >= 0, got {}", f.kappa)));
        }
    }
    let rho: Vec<Vec<f64>> = match raw.correlation {
        None => (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
        Some(flat) => {
            if flat.len() != n * n {
                return Err(cfg_err("correlation", format!("expected {} entries for {n} factors, got {}", n * n, flat.len())));
            }
            if let Some(r) = flat.iter().find(|r| !(r.abs() <= 1.0)) {
                return Err(cfg_err("correlation", format!("entry {r} outside [-1, 1]")));
            }
            flat.chunks(n).map(<[f64]>::to_vec).collect()
        }
    };
    let fset = FactorSet::new(
        factors.iter().map(|f| f.weight).collect(),
        factors.iter().map(|f| f.kappa).collect(),
        rho,
    )
    .map_err(|e| cfg_err("correlation", e.to_string()))?;

    let mc = raw.monte_carlo.unwrap_or(RawMonteCarlo { paths: None, seed: None, antithetic: None });
    let sim = SimConfig {
        n_paths: mc.paths.map_or(defaults.sim.n_paths, |p| p as usize),
        seed: mc.seed.unwrap_or(defaults.sim.seed),
        antithetic: mc.antithetic.unwrap_or(defaults.sim.antithetic),
    };
    sim.validate().map_err(|e| cfg_err("monte_carlo.paths", e.to_string()))?;

    let rep = raw.report.unwrap_or(RawReport { horizon_years: None, se_multiple: None });
    let report = ReportOptions {
        horizon_years: rep.horizon_years.unwrap_or(defaults.report.horizon_years),
        se_multiple: rep.se_multiple.unwrap_or(defaults.report.se_multiple),
    };
    if grid_index(report.horizon_years, dt).is_none_or(|k| k == 0) {
        return Err(cfg_err("report.horizon_years", format!("{} is not a positive multiple of dt", report.horizon_years)));
    }
    if !(report.se_multiple > 0.0) {
        return Err(cfg_err("report.se_multiple", format!("must be positive, got {}", report.se_multiple)));
    }
    Ok(ModelConfig { dt, factors: fset, sim, report })
}

fn key_from_toml_error(e: &toml::de::Error, text: &str) -> String {
    e.span()
        .and_then(|span| text.get(span))
        .map(|s| s.split(['=', '\n']).next().unwrap_or("").trim().trim_matches('"').to_owned())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "<root>".to_owned())
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ModelConfig> {
    let path = path.as_ref();
    parse_config(&read(path)?).map_err(|e| match e {
        Error::Config { key, msg } => Error::Config { key, msg: format!("{msg} (in {})", path.display()) },
        other => other,
    })
}
