//! Discrete-time multi-factor HJM Monte Carlo.
//!
//! The forward curve lives on the `dt` grid. Over one step
//!
//! ```text
//! f(t_{i+1}, t_k) = f(t_i, t_k) + α(t_i, t_k)·dt + Σ_m σ_m(t_i, t_k)·ΔW_m,   k > i
//! ```
//!
//! with `ΔW = √dt·L·z`. The money-market account accrues `f(t_i, t_i)·dt` and
//! bonds are `B(t_i, t_j) = exp(−Σ_{k=i}^{j−1} f(t_i, t_k)·dt)`. Under that
//! scheme a bond maturing at `t_j` is exposed over step `i` to
//! `J_m(i, j) = Σ_{k=i+1}^{j−1} σ_m(t_i, t_k)·dt`, and the drift
//! `α(t_i, t_k) = (D(i, k+1) − D(i, k)) / dt` with
//! `D(i, j) = ½ Σ_mn ρ_mn J_m J_n` makes every discounted bond an exact
//! one-step martingale for Gaussian increments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::curve::{DiscountCurve, SwapSchedule};
use crate::error::{Error, Result};
use crate::factors::{FactorSet, FactorVolSurface};

const CHUNK: usize = 512;

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_paths: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl SimConfig {
    pub fn new(n_paths: usize, seed: u64, antithetic: bool) -> Result<Self> {
        let cfg = Self { n_paths, seed, antithetic };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 paths, got {}", self.n_paths)));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "antithetic sampling needs an even path count, got {}",
                self.n_paths
            )));
        }
        Ok(())
    }

    /// Independent samples: pairs when antithetic.
    fn n_samples(&self) -> usize {
        if self.antithetic {
            self.n_paths / 2
        } else {
            self.n_paths
        }
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

/// Streaming mean/variance with an order-fixed merge.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * self.n as f64 * o.n as f64 / n as f64;
        self.n = n;
    }

    fn estimate(&self, n_paths: usize) -> PriceEstimate {
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        PriceEstimate { mean: self.mean, std_error: (var.max(0.0) / self.n as f64).sqrt(), n_paths }
    }
}

/// `Σ_{k=i}^{j−1} σ_m(t_i, t_k)·dt`.
pub fn integrated_loading(fsurf: &FactorVolSurface, m: usize, i: usize, j: usize) -> Result<f64> {
    let s = &fsurf.factors[m];
    let mut acc = 0.0;
    for k in i..j {
        acc += s.get(i, k).ok_or(Error::MissingCells {
            cells: vec![(i as f64 * s.dt(), k as f64 * s.dt())],
        })?;
    }
    Ok(acc * s.dt())
}

/// Drift `α(t_i, t_k)` for `k = i..size`, indexed by `k − i`. The `k = i`
/// entry is zero: `f(t_i, t_i)` has already been used for discounting.
pub fn discrete_drift(fsurf: &FactorVolSurface, fset: &FactorSet, i: usize, size: usize) -> Result<Vec<f64>> {
    let dt = fsurf.dt();
    let mut exposure = vec![0.0; fset.len()];
    let mut prev = 0.0;
    let mut drift = vec![0.0; size - i];
    for k in i + 1..size {
        for (m, e) in exposure.iter_mut().enumerate() {
            *e += fsurf.factors[m].get(i, k).ok_or(Error::MissingCells {
                cells: vec![(i as f64 * dt, k as f64 * dt)],
            })? * dt;
        }
        let d = 0.5 * fset.quadratic_form(&exposure, &exposure);
        drift[k - i] = (d - prev) / dt;
        prev = d;
    }
    Ok(drift)
}

/// Simulation-ready model: initial forwards, driver-space vols and drift.
#[derive(Debug, Clone)]
pub struct HjmModel {
    dt: f64,
    size: usize,
    steps: usize,
    n_drivers: usize,
    initial: Vec<f64>,
    // row i holds k = i+1..size; vols are driver-major within each k
    row_start: Vec<usize>,
    vols: Vec<f64>,
    drift: Vec<f64>,
}

impl HjmModel {
    /// Model on maturities `t_k`, `k < size`, simulated for up to `steps`
    /// steps. Needs `σ_m(t_i, t_k)` for all `i < steps`, `i < k < size`.
    pub fn new(
        curve: &DiscountCurve,
        fsurf: &FactorVolSurface,
        fset: &FactorSet,
        steps: usize,
        size: usize,
    ) -> Result<Self> {
        let dt = fsurf.dt();
        if steps > size {
            return Err(Error::InvalidInput(format!("{steps} steps exceed the {size}-point maturity grid")));
        }
        if (curve.dt() - dt).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("curve dt {} differs from surface dt {dt}", curve.dt())));
        }
        if fsurf.len() != fset.len() {
            return Err(Error::InvalidFactors(format!(
                "{} factor surfaces for {} factors",
                fsurf.len(),
                fset.len()
            )));
        }
        let missing: Vec<_> = (0..steps)
            .flat_map(|i| (i + 1..size).map(move |k| (i, k)))
            .filter(|&(i, k)| fsurf.factors.iter().any(|s| !s.is_known(i, k)))
            .map(|(i, k)| (i as f64 * dt, k as f64 * dt))
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingCells { cells: missing });
        }
        let initial = curve.forward_grid(size as f64 * dt)?;
        let n_drivers = fset.len();
        let mut row_start = Vec::with_capacity(size + 1);
        let mut vols = Vec::new();
        let mut drift = Vec::new();
        for i in 0..steps {
            row_start.push(drift.len());
            let alpha = discrete_drift(fsurf, fset, i, size)?;
            for k in i + 1..size {
                let x: Vec<f64> = fsurf.factors.iter().map(|s| s.value(i, k)).collect();
                vols.extend(fset.to_drivers(&x));
                drift.push(alpha[k - i]);
            }
        }
        row_start.push(drift.len());
        Ok(Self { dt, size, steps, n_drivers, initial, row_start, vols, drift })
    }

    /// Drop the drift; discounted bonds then pick up a convexity bias.
    pub fn without_drift(mut self) -> Self {
        self.drift.iter_mut().for_each(|a| *a = 0.0);
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of grid maturities tracked.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Maximum number of simulated steps.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn n_drivers(&self) -> usize {
        self.n_drivers
    }

    pub fn initial_forwards(&self) -> &[f64] {
        &self.initial
    }

    /// `α(t_i, t_k)` for `i < steps`, `i < k < size`.
    pub fn drift(&self, i: usize, k: usize) -> f64 {
        assert!(i < self.steps && i < k && k < self.size);
        self.drift[self.row_start[i] + k - i - 1]
    }

    /// Vol of `f(·, t_k)` on independent driver `d` over step `i`.
    pub fn driver_vol(&self, i: usize, k: usize, d: usize) -> f64 {
        assert!(i < self.steps && i < k && k < self.size && d < self.n_drivers);
        self.vols[(self.row_start[i] + k - i - 1) * self.n_drivers + d]
    }

    /// Run one path, calling `visit(step, f(t_step, t_step..), discount)` at
    /// steps `0..=last`. `normals` holds `last × n_drivers` draws.
    fn run_path(&self, normals: &[f64], sign: f64, last: usize, f: &mut Vec<f64>, mut visit: impl FnMut(usize, &[f64], f64)) {
        f.clear();
        f.extend_from_slice(&self.initial);
        let sqrt_dt = self.dt.sqrt();
        let nd = self.n_drivers;
        let mut log_disc = 0.0_f64;
        for i in 0..=last {
            visit(i, &f[i.min(self.size)..], log_disc.exp());
            if i == last {
                break;
            }
            log_disc -= f[i] * self.dt;
            let z = &normals[i * nd..(i + 1) * nd];
            let base = self.row_start[i];
            for k in i + 1..self.size {
                let cell = base + k - i - 1;
                let vols = &self.vols[cell * nd..(cell + 1) * nd];
                let shock: f64 = vols.iter().zip(z).map(|(v, z)| v * z).sum();
                f[k] += self.drift[cell] * self.dt + sign * sqrt_dt * shock;
            }
        }
    }

    fn draw_normals(&self, seed: u64, sample: usize, last: usize, out: &mut Vec<f64>) {
        let nd = self.n_drivers;
        out.resize(last * nd, 0.0);
        for d in 0..nd {
            let mut rng = driver_rng(seed, d, sample);
            for i in 0..last {
                out[i * nd + d] = StandardNormal.sample(&mut rng);
            }
        }
    }
}

/// Counter-based stream for `(seed, driver, sample)`; driver `d` draws the
/// same numbers whatever the number of factors.
fn driver_rng(seed: u64, driver: usize, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (driver as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(sample as u64);
    rng
}

/// A set of per-path quantities evaluated along each simulated path.
pub trait PathFunctional: Sync {
    fn n_outputs(&self) -> usize;

    /// Last step at which [`evaluate`](Self::evaluate) needs to be called.
    fn last_step(&self) -> usize;

    /// Called at every step `0..=last_step` with `f(t_step, t_k)` for
    /// `k ≥ step` and the money-market discount to `t_step`.
    fn evaluate(&self, step: usize, forwards: &[f64], discount: f64, dt: f64, out: &mut [f64]);
}

/// Mean and standard error of each output of `functional`.
///
/// Paths are generated in fixed-size chunks in parallel and reduced in chunk
/// order, so results are bit-for-bit reproducible for a given seed.
pub fn estimate(model: &HjmModel, cfg: &SimConfig, functional: &impl PathFunctional) -> Result<Vec<PriceEstimate>> {
    cfg.validate()?;
    let last = functional.last_step();
    if last > model.steps() {
        return Err(Error::InvalidInput(format!(
            "functional needs step {last} but model covers {} steps",
            model.steps()
        )));
    }
    let n_out = functional.n_outputs();
    let n_samples = cfg.n_samples();
    let chunks: Vec<Vec<Moments>> = (0..n_samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![Moments::default(); n_out];
            let mut normals = Vec::new();
            let mut f = Vec::with_capacity(model.size());
            let mut out = vec![0.0; n_out];
            let mut anti = vec![0.0; n_out];
            for sample in c * CHUNK..((c + 1) * CHUNK).min(n_samples) {
                model.draw_normals(cfg.seed, sample, last, &mut normals);
                out.iter_mut().for_each(|x| *x = 0.0);
                model.run_path(&normals, 1.0, last, &mut f, |i, fw, disc| {
                    functional.evaluate(i, fw, disc, model.dt(), &mut out)
                });
                if cfg.antithetic {
                    anti.iter_mut().for_each(|x| *x = 0.0);
                    model.run_path(&normals, -1.0, last, &mut f, |i, fw, disc| {
                        functional.evaluate(i, fw, disc, model.dt(), &mut anti)
                    });
                    for (o, a) in out.iter_mut().zip(&anti) {
                        *o = 0.5 * (*o + a);
                    }
                }
                for (m, x) in acc.iter_mut().zip(&out) {
                    m.push(*x);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Moments::default(); n_out];
    for chunk in &chunks {
        for (t, c) in total.iter_mut().zip(chunk) {
            t.merge(c);
        }
    }
    Ok(total.iter().map(|m| m.estimate(cfg.n_paths)).collect())
}

/// Discounts at every step and forward curves at the observed steps.
type StoredPath = (Vec<f64>, Vec<Vec<f64>>);

/// Simulated paths stored at a set of observation steps.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    dt: f64,
    antithetic: bool,
    initial: Vec<f64>,
    observed: Vec<usize>,
    /// `[path][step]` money-market discount for steps `0..=last`.
    discounts: Vec<Vec<f64>>,
    /// `[path][obs]` forward curve `f(t_obs, t_k)`, `k ≥ obs`.
    snapshots: Vec<Vec<Vec<f64>>>,
}

impl PathSet {
    pub fn n_paths(&self) -> usize {
        self.discounts.len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn observed_steps(&self) -> &[usize] {
        &self.observed
    }

    pub fn discount(&self, path: usize, step: usize) -> f64 {
        self.discounts[path][step]
    }

    /// `f(t_step, t_k)` for `k ≥ step` on `path`, if `step` was observed.
    pub fn forwards(&self, path: usize, step: usize) -> Option<&[f64]> {
        let o = self.observed.iter().position(|&s| s == step)?;
        Some(&self.snapshots[path][o])
    }

    pub fn initial_forwards(&self) -> &[f64] {
        &self.initial
    }

    /// Reduce per-path values to an estimate, pairing antithetic paths.
    pub fn summarise(&self, values: impl Iterator<Item = f64>) -> PriceEstimate {
        let mut m = Moments::default();
        if self.antithetic {
            let v: Vec<f64> = values.collect();
            for pair in v.chunks(2) {
                m.push(pair.iter().sum::<f64>() / pair.len() as f64);
            }
        } else {
            values.for_each(|x| m.push(x));
        }
        m.estimate(self.n_paths())
    }
}

/// Simulate `cfg.n_paths` paths up to the largest of `observe`, storing the
/// forward curve at each observed step. Antithetic partners are adjacent.
pub fn simulate(model: &HjmModel, cfg: &SimConfig, observe: &[usize]) -> Result<PathSet> {
    cfg.validate()?;
    let mut observed = observe.to_vec();
    observed.sort_unstable();
    observed.dedup();
    let last = observed.last().copied().unwrap_or(0);
    if last > model.steps() {
        return Err(Error::InvalidInput(format!(
            "observation step {last} beyond model horizon {}",
            model.steps()
        )));
    }
    let per_sample: Vec<Vec<StoredPath>> = (0..cfg.n_samples())
        .into_par_iter()
        .map(|sample| {
            let mut normals = Vec::new();
            model.draw_normals(cfg.seed, sample, last, &mut normals);
            let signs: &[f64] = if cfg.antithetic { &[1.0, -1.0] } else { &[1.0] };
            let mut f = Vec::new();
            signs
                .iter()
                .map(|&sign| {
                    let mut discs = Vec::with_capacity(last + 1);
                    let mut snaps = Vec::with_capacity(observed.len());
                    model.run_path(&normals, sign, last, &mut f, |i, fw, disc| {
                        discs.push(disc);
                        if observed.binary_search(&i).is_ok() {
                            snaps.push(fw.to_vec());
                        }
                    });
                    (discs, snaps)
                })
                .collect()
        })
        .collect();
    let (discounts, snapshots) = per_sample.into_iter().flatten().unzip();
    Ok(PathSet {
        dt: model.dt(),
        antithetic: cfg.antithetic,
        initial: model.initial_forwards().to_vec(),
        observed,
        discounts,
        snapshots,
    })
}

/// Discounted bond `E[D(t_i)·B(t_i, T_j)]` against its initial price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartingaleCheck {
    pub estimate: PriceEstimate,
    pub initial: f64,
}

impl MartingaleCheck {
    pub fn ratio(&self) -> f64 {
        self.estimate.mean / self.initial
    }

    pub fn ratio_se(&self) -> f64 {
        self.estimate.std_error / self.initial
    }

    /// `|ratio − 1|` in standard errors (infinite if SE is zero and the ratio is off).
    pub fn z_score(&self) -> f64 {
        let dev = (self.ratio() - 1.0).abs();
        if dev == 0.0 {
            0.0
        } else {
            dev / self.ratio_se()
        }
    }
}

/// `exp(−Σ_{k<n} f_k·dt)`, accumulated in the same order as the
/// money-market account so deterministic paths reproduce it exactly.
pub fn bond_from(forwards: &[f64], n: usize, dt: f64) -> f64 {
    let mut log_b = 0.0;
    for f in &forwards[..n] {
        log_b -= f * dt;
    }
    log_b.exp()
}

/// Martingale diagnostic for the bond maturing at step `maturity`, observed
/// at step `step ≤ maturity` (which must have been stored, unless it equals
/// `maturity`).
pub fn bond_martingale_check(paths: &PathSet, step: usize, maturity: usize) -> Result<MartingaleCheck> {
    if step > maturity {
        return Err(Error::InvalidInput(format!("observation step {step} after maturity {maturity}")));
    }
    if maturity > paths.initial.len() {
        return Err(Error::InvalidInput(format!("maturity step {maturity} beyond simulated curve")));
    }
    let initial = bond_from(&paths.initial, maturity, paths.dt);
    let values: Vec<f64> = if step == maturity {
        if step >= paths.discounts[0].len() {
            return Err(Error::InvalidInput(format!("step {step} not simulated")));
        }
        (0..paths.n_paths()).map(|p| paths.discount(p, step)).collect()
    } else {
        (0..paths.n_paths())
            .map(|p| {
                let fw = paths
                    .forwards(p, step)
                    .ok_or_else(|| Error::InvalidInput(format!("step {step} not observed")))?;
                Ok(paths.discount(p, step) * bond_from(fw, maturity - step, paths.dt))
            })
            .collect::<Result<_>>()?
    };
    Ok(MartingaleCheck { estimate: paths.summarise(values.into_iter()), initial })
}

/// Side of a European swaption on the `r_s` fixed leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Pay fixed: `max(1 − B(T_e,T_N) − r_s·Σ B(T_e,T_n), 0)`.
    Payer,
    /// Receive fixed: `max(r_s·Σ B(T_e,T_n) − 1 + B(T_e,T_N), 0)`.
    Receiver,
}

/// Swaption payoff at expiry from `f(T_e, t_k)`, `k ≥ E`.
pub fn swaption_payoff(forwards: &[f64], n_payments: usize, strike: f64, side: Side, dt: f64) -> f64 {
    let mut log_b = 0.0;
    let mut annuity = 0.0;
    for f in &forwards[..n_payments] {
        log_b -= f * dt;
        annuity += log_b.exp();
    }
    let receiver = strike * annuity - 1.0 + log_b.exp();
    match side {
        Side::Receiver => receiver.max(0.0),
        Side::Payer => (-receiver).max(0.0),
    }
}

/// European swaption value from stored paths.
pub fn price_swaption(paths: &PathSet, sched: &SwapSchedule, strike: f64, side: Side) -> Result<PriceEstimate> {
    if (sched.dt() - paths.dt).abs() > 1e-12 {
        return Err(Error::InvalidSchedule(format!("schedule dt {} differs from path dt {}", sched.dt(), paths.dt)));
    }
    let e = sched.expiry_index();
    if sched.last_index() > paths.initial.len() {
        return Err(Error::InvalidSchedule(format!(
            "last payment {} beyond simulated curve",
            sched.last_index() as f64 * paths.dt
        )));
    }
    let values = (0..paths.n_paths())
        .map(|p| {
            let fw = paths
                .forwards(p, e)
                .ok_or_else(|| Error::InvalidSchedule(format!("expiry step {e} not observed")))?;
            Ok(paths.discount(p, e) * swaption_payoff(fw, sched.n_payments(), strike, side, paths.dt))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(paths.summarise(values.into_iter()))
}

/// Many swaptions priced in one streaming pass.
#[derive(Debug, Clone, Default)]
pub struct SwaptionBook {
    entries: Vec<(SwapSchedule, f64, Side)>,
}

impl SwaptionBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sched: SwapSchedule, strike: f64, side: Side) {
        self.entries.push((sched, strike, side));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest last-payment index: the model size needed.
    pub fn required_size(&self) -> usize {
        self.entries.iter().map(|e| e.0.last_index()).max().unwrap_or(0)
    }
}

impl PathFunctional for SwaptionBook {
    fn n_outputs(&self) -> usize {
        self.entries.len()
    }

    fn last_step(&self) -> usize {
        self.entries.iter().map(|e| e.0.expiry_index()).max().unwrap_or(0)
    }

    fn evaluate(&self, step: usize, forwards: &[f64], discount: f64, dt: f64, out: &mut [f64]) {
        for (o, (sched, strike, side)) in out.iter_mut().zip(&self.entries) {
            if sched.expiry_index() == step {
                *o = discount * swaption_payoff(forwards, sched.n_payments(), *strike, *side, dt);
            }
        }
    }
}

/// Money-market discount to each `t_j`, `j = 1..=last`: the discounted
/// bond `D(t_j)·B(t_j, t_j)`, whose expectation must equal `B(0, t_j)`.
#[derive(Debug, Clone, Copy)]
pub struct DiscountCurveFunctional {
    pub last: usize,
}

impl PathFunctional for DiscountCurveFunctional {
    fn n_outputs(&self) -> usize {
        self.last
    }

    fn last_step(&self) -> usize {
        self.last
    }

    fn evaluate(&self, step: usize, _forwards: &[f64], discount: f64, _dt: f64, out: &mut [f64]) {
        if step > 0 {
            out[step - 1] = discount;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::DEFAULT_DT;
    use crate::factors::decompose;
    use crate::svapprox::ForwardVolSurface;
    use approx::assert_relative_eq;

    fn curve() -> DiscountCurve {
        DiscountCurve::flat(0.03, 30.0, DEFAULT_DT).unwrap()
    }

    fn single(sigma: f64, size: usize) -> (FactorVolSurface, FactorSet) {
        let fset = FactorSet::single();
        let fs = decompose(&ForwardVolSurface::constant(DEFAULT_DT, size, sigma), &fset).unwrap();
        (fs, fset)
    }

    #[test]
    fn integrated_loading_examples() {
        let (fs, _) = single(0.01, 10);
        assert_eq!(integrated_loading(&fs, 0, 3, 3).unwrap(), 0.0);
        assert_relative_eq!(integrated_loading(&fs, 0, 2, 7).unwrap(), 0.01 * 5.0 * 0.25, epsilon = 1e-16);
        let fs = FactorVolSurface { factors: vec![ForwardVolSurface::from_fn(DEFAULT_DT, 10, |i, j| (i + j) as f64 * 1e-3)] };
        let direct: f64 = (2..6).map(|k| (2 + k) as f64 * 1e-3 * 0.25).sum();
        assert_relative_eq!(integrated_loading(&fs, 0, 2, 6).unwrap(), direct, epsilon = 1e-16);
        // additive in j
        let split = integrated_loading(&fs, 0, 2, 4).unwrap() + (4..6).map(|k| (2 + k) as f64 * 1e-3 * 0.25).sum::<f64>();
        assert_relative_eq!(split, direct, epsilon = 1e-16);
    }

    #[test]
    fn drift_examples() {
        let (fs, fset) = single(0.0, 12);
        assert!(discrete_drift(&fs, &fset, 3, 12).unwrap().iter().all(|&a| a == 0.0));

        let s = 0.012;
        let (fs, fset) = single(s, 12);
        let alpha = discrete_drift(&fs, &fset, 2, 12).unwrap();
        assert_eq!(alpha[0], 0.0);
        for k in 3..12 {
            let want = s * s * ((k - 2) as f64 * 0.25 - 0.125);
            assert_relative_eq!(alpha[k - 2], want, max_relative = 1e-12);
        }
    }

    #[test]
    fn model_requires_coverage() {
        let mut partial = ForwardVolSurface::constant(DEFAULT_DT, 8, 0.01);
        partial = {
            let mut p = ForwardVolSurface::empty(DEFAULT_DT, 8);
            for (i, j, v) in partial.known_cells().filter(|&(i, j, _)| (i, j) != (2, 5)) {
                p.set(i, j, v);
            }
            p
        };
        let fs = FactorVolSurface { factors: vec![partial] };
        match HjmModel::new(&curve(), &fs, &FactorSet::single(), 8, 8) {
            Err(Error::MissingCells { cells }) => assert_eq!(cells, vec![(0.5, 1.25)]),
            other => panic!("unexpected {other:?}"),
        }
        // smaller horizon avoids the gap
        assert!(HjmModel::new(&curve(), &fs, &FactorSet::single(), 5, 5).is_ok());
    }

    #[test]
    fn zero_vol_is_deterministic() {
        let (fs, fset) = single(0.0, 20);
        let model = HjmModel::new(&curve(), &fs, &fset, 20, 20).unwrap();
        let cfg = SimConfig::new(16, 3, true).unwrap();
        let paths = simulate(&model, &cfg, &[0, 4, 10]).unwrap();
        for p in 0..paths.n_paths() {
            assert_eq!(paths.forwards(p, 4).unwrap(), &model.initial_forwards()[4..]);
        }
        for j in [4usize, 10, 15] {
            let chk = bond_martingale_check(&paths, 4, j).unwrap();
            assert_relative_eq!(chk.ratio(), 1.0, epsilon = 1e-14);
        }
        let chk = bond_martingale_check(&paths, 10, 10).unwrap();
        assert_relative_eq!(chk.ratio(), 1.0, epsilon = 1e-14);
        let s = SwapSchedule::new(1.0, 2.0, DEFAULT_DT).unwrap();
        let atm = curve().atm_rate(&s).unwrap();
        let price = price_swaption(&paths, &s, atm, Side::Payer).unwrap();
        assert!(price.mean.abs() < 1e-15);
    }

    #[test]
    fn one_step_variance() {
        let s = 0.01;
        let (fs, fset) = single(s, 12);
        let model = HjmModel::new(&curve(), &fs, &fset, 12, 12).unwrap();
        let paths = simulate(&model, &SimConfig::new(40_000, 11, false).unwrap(), &[1]).unwrap();
        let f0 = model.initial_forwards();
        for k in [1usize, 5, 11] {
            let incs: Vec<f64> = (0..paths.n_paths()).map(|p| paths.forwards(p, 1).unwrap()[k - 1] - f0[k]).collect();
            let n = incs.len() as f64;
            let mean = incs.iter().sum::<f64>() / n;
            let var = incs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let want = s * s * 0.25;
            // SE of a normal sample variance is var·sqrt(2/(n−1))
            assert!((var - want).abs() < 3.0 * want * (2.0 / (n - 1.0)).sqrt(), "k={k} var={var}");
        }
    }

    #[test]
    fn same_seed_same_paths() {
        let (fs, fset) = single(0.009, 12);
        let model = HjmModel::new(&curve(), &fs, &fset, 12, 12).unwrap();
        let cfg = SimConfig::new(300, 99, true).unwrap();
        assert_eq!(simulate(&model, &cfg, &[2, 6]).unwrap(), simulate(&model, &cfg, &[2, 6]).unwrap());
        let other = SimConfig { seed: 100, ..cfg };
        assert_ne!(simulate(&model, &cfg, &[6]).unwrap(), simulate(&model, &other, &[6]).unwrap());
    }

    #[test]
    fn streaming_matches_stored_paths() {
        let (fs, fset) = single(0.009, 12);
        let model = HjmModel::new(&curve(), &fs, &fset, 12, 12).unwrap();
        let cfg = SimConfig::new(1000, 5, true).unwrap();
        let s = SwapSchedule::new(1.0, 1.0, DEFAULT_DT).unwrap();
        let strike = curve().atm_rate(&s).unwrap();
        let paths = simulate(&model, &cfg, &[4]).unwrap();
        let stored = price_swaption(&paths, &s, strike, Side::Receiver).unwrap();
        let mut book = SwaptionBook::new();
        book.push(s, strike, Side::Receiver);
        let streamed = estimate(&model, &cfg, &book).unwrap()[0];
        assert_relative_eq!(stored.mean, streamed.mean, max_relative = 1e-12);
        assert_relative_eq!(stored.std_error, streamed.std_error, max_relative = 1e-9);
        assert_eq!(streamed.n_paths, 1000);
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(1, 0, false).is_err());
        assert!(SimConfig::new(3, 0, true).is_err());
        assert!(SimConfig::new(3, 0, false).is_ok());
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|k| ((k * 7919) % 613) as f64 * 0.01).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut merged = Moments::default();
        for c in xs.chunks(77) {
            let mut m = Moments::default();
            c.iter().for_each(|&x| m.push(x));
            merged.merge(&m);
        }
        assert_relative_eq!(whole.mean, merged.mean, max_relative = 1e-13);
        assert_relative_eq!(whole.m2, merged.m2, max_relative = 1e-11);
    }

    #[test]
    fn payoff_sides() {
        let fw = vec![0.03; 8];
        let dt = 0.25;
        let annuity: f64 = (1..=4).map(|n| (-0.03 * dt * n as f64).exp()).sum();
        let bn = (-0.03f64).exp();
        let atm = (1.0 - bn) / annuity;
        assert!(swaption_payoff(&fw, 4, atm, Side::Payer, dt).abs() < 1e-15);
        let hi = swaption_payoff(&fw, 4, atm + 0.001, Side::Receiver, dt);
        assert_relative_eq!(hi, 0.001 * annuity, max_relative = 1e-10);
        assert_eq!(swaption_payoff(&fw, 4, atm + 0.001, Side::Payer, dt), 0.0);
    }
}
