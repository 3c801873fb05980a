//! Sequential bootstrap of the forward-vol surface from ATM swaption quotes.
//!
//! Quotes are processed by expiry, then tenor. Each quote's region contains
//! some cells fixed by earlier quotes and a block of new cells that share a
//! single unknown vol. The swap PV variance is quadratic in that unknown, so
//! every step reduces to one root of `Aσ² + 2Bσ + C = target`.
//!
//! With more than one factor the same holds: the unknown scales the total
//! per-cell vol, which [`decompose`](crate::factors::decompose) shares out
//! across factors, and `A`, `B`, `C` are summed over the independent drivers.

use std::fmt;

use crate::curve::{grid_index, DiscountCurve, SwapSchedule};
use crate::error::{Error, Result};
use crate::factors::FactorSet;
use crate::svapprox::{quote_region, quote_to_pv_target, ForwardVolSurface, SwapVolWeights, VolProfile};

/// Leading coefficient below which a quote is treated as adding no unknowns.
pub const NO_UNKNOWNS_THRESHOLD: f64 = 1e-14;

/// ATM normal-vol quote. `vol` is an annualised absolute rate vol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwaptionQuote {
    pub expiry: f64,
    pub tenor: f64,
    pub vol: f64,
}

impl SwaptionQuote {
    pub fn new(expiry: f64, tenor: f64, vol: f64) -> Self {
        Self { expiry, tenor, vol }
    }

    pub fn schedule(&self, dt: f64) -> Result<SwapSchedule> {
        SwapSchedule::new(self.expiry, self.tenor, dt)
    }
}

/// Validated quotes ordered by `(expiry, tenor)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuoteGrid {
    quotes: Vec<SwaptionQuote>,
    dt: f64,
}

impl QuoteGrid {
    /// Sorts the quotes and rejects duplicates, negative vols and off-grid
    /// dates.
    pub fn new(mut quotes: Vec<SwaptionQuote>, dt: f64) -> Result<Self> {
        for q in &quotes {
            if !(q.vol >= 0.0 && q.vol.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "quote ({}, {}) has invalid vol {}",
                    q.expiry, q.tenor, q.vol
                )));
            }
            q.schedule(dt)?;
            if grid_index(q.expiry, dt) == Some(0) {
                return Err(Error::InvalidSchedule(format!("quote expiry {} must be positive", q.expiry)));
            }
        }
        quotes.sort_by_key(|q| key(q, dt));
        if let Some(w) = quotes.windows(2).find(|w| key(&w[0], dt) == key(&w[1], dt)) {
            return Err(Error::InvalidInput(format!(
                "duplicate quote (expiry {}, tenor {})",
                w[1].expiry, w[1].tenor
            )));
        }
        Ok(Self { quotes, dt })
    }

    pub fn quotes(&self) -> &[SwaptionQuote] {
        &self.quotes
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.quotes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotes.is_empty()
    }
}

fn key(q: &SwaptionQuote, dt: f64) -> (usize, usize) {
    (grid_index(q.expiry, dt).unwrap_or(usize::MAX), grid_index(q.tenor, dt).unwrap_or(usize::MAX))
}

/// Outcome of one quadratic solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Exact,
    ClampedDiscriminant,
    FlooredZero,
    SkippedNoUnknowns,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Exact => "exact",
            SolveStatus::ClampedDiscriminant => "clamped-discriminant",
            SolveStatus::FlooredZero => "floored-zero",
            SolveStatus::SkippedNoUnknowns => "skipped-no-unknowns",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SolveStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "exact" => SolveStatus::Exact,
            "clamped-discriminant" => SolveStatus::ClampedDiscriminant,
            "floored-zero" => SolveStatus::FlooredZero,
            "skipped-no-unknowns" => SolveStatus::SkippedNoUnknowns,
            other => return Err(Error::InvalidInput(format!("unknown status `{other}`"))),
        })
    }
}

/// `A σ² + 2 B σ + C`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Quadratic {
    pub fn eval(&self, sigma: f64) -> f64 {
        (self.a * sigma + 2.0 * self.b) * sigma + self.c
    }
}

impl std::ops::Add for Quadratic {
    type Output = Quadratic;

    fn add(self, o: Quadratic) -> Quadratic {
        Quadratic { a: self.a + o.a, b: self.b + o.b, c: self.c + o.c }
    }
}

/// Split `v(t_i)` into the part from known cells and the per-unit-vol weight
/// of the unknown cells: `v(t_i) = K_i + σ·U_i`.
pub fn split_profile(
    curve: &DiscountCurve,
    fvs: &ForwardVolSurface,
    sched: &SwapSchedule,
) -> Result<(VolProfile, VolProfile)> {
    let (mut k, mut u) = split_factor_profiles(curve, fvs, sched, &FactorSet::single())?;
    Ok((k.remove(0), u.remove(0)))
}

/// Driver-space version of [`split_profile`]: one `(K, U)` pair per
/// independent driver of `fset`.
pub fn split_factor_profiles(
    curve: &DiscountCurve,
    fvs: &ForwardVolSurface,
    sched: &SwapSchedule,
    fset: &FactorSet,
) -> Result<(Vec<VolProfile>, Vec<VolProfile>)> {
    let weights = SwapVolWeights::atm(curve, sched)?;
    split_with_weights(&weights, fvs, fset, &driver_shapes(fset, sched.last_index(), fvs.dt())?)
}

/// Driver-space shapes `y_n = Σ_m L_mn s_m` indexed by lag `j − i`.
fn driver_shapes(fset: &FactorSet, max_lag: usize, dt: f64) -> Result<Vec<Vec<f64>>> {
    (0..max_lag.max(1))
        .map(|lag| fset.shape(0, lag, dt).map(|s| fset.to_drivers(&s)))
        .collect()
}

fn split_with_weights(
    weights: &SwapVolWeights,
    fvs: &ForwardVolSurface,
    fset: &FactorSet,
    shapes: &[Vec<f64>],
) -> Result<(Vec<VolProfile>, Vec<VolProfile>)> {
    let sched = weights.schedule();
    let (e, p) = (sched.expiry_index(), sched.last_index());
    if p > fvs.size() {
        return Err(Error::OutsideRegion { i: e.saturating_sub(1), j: p - 1 });
    }
    let c = weights.by_maturity();
    let dt = sched.dt();
    let mut known = vec![VolProfile::zeros(e, dt); fset.len()];
    let mut unknown = vec![VolProfile::zeros(e, dt); fset.len()];
    for i in 0..e {
        for j in i..p {
            let y = &shapes[j - i];
            match fvs.get(i, j) {
                Some(sigma) => {
                    for (d, yd) in y.iter().enumerate() {
                        known[d].values[i] += c[j] * sigma * yd;
                    }
                }
                None => {
                    for (d, yd) in y.iter().enumerate() {
                        unknown[d].values[i] += c[j] * yd;
                    }
                }
            }
        }
    }
    Ok((known, unknown))
}

/// `A = Σ U²dt`, `B = Σ K·U dt`, `C = Σ K²dt`.
pub fn assemble_quadratic(known: &VolProfile, unknown: &VolProfile) -> Quadratic {
    let dt = known.dt;
    let mut q = Quadratic::default();
    for (k, u) in known.values.iter().zip(&unknown.values) {
        q.a += u * u * dt;
        q.b += k * u * dt;
        q.c += k * k * dt;
    }
    q
}

/// Non-negative root of `Aσ² + 2Bσ + C = target`.
///
/// A negative discriminant returns the vertex `max(−B/A, 0)`; a negative root
/// is floored at zero.
pub fn solve_vol(q: &Quadratic, target: f64) -> Result<(f64, SolveStatus)> {
    if !(q.a > 0.0) {
        return Err(Error::DegenerateQuadratic(q.a));
    }
    let rhs = target - q.c;
    let disc = q.b * q.b + q.a * rhs;
    if disc < 0.0 {
        return Ok(((-q.b / q.a).max(0.0), SolveStatus::ClampedDiscriminant));
    }
    let sq = disc.sqrt();
    // avoid cancellation between −B and sqrt(disc)
    let root = if q.b > 0.0 { rhs / (q.b + sq) } else { (sq - q.b) / q.a };
    if root < 0.0 {
        Ok((0.0, SolveStatus::FlooredZero))
    } else {
        Ok((root, SolveStatus::Exact))
    }
}

/// Per-quote bootstrap outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct QuoteRecord {
    pub quote: SwaptionQuote,
    /// `None` when the quote added no unknowns.
    pub sigma: Option<f64>,
    pub quadratic: Quadratic,
    pub target: f64,
    pub residual: f64,
    pub status: SolveStatus,
}

#[derive(Debug, Clone)]
pub struct CalibrationReport {
    pub records: Vec<QuoteRecord>,
    pub surface: ForwardVolSurface,
}

impl CalibrationReport {
    pub fn max_residual(&self) -> f64 {
        self.records.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn count(&self, status: SolveStatus) -> usize {
        self.records.iter().filter(|r| r.status == status).count()
    }

    /// Quotes whose discriminant was clamped or whose root was floored.
    pub fn clamp_count(&self) -> usize {
        self.count(SolveStatus::ClampedDiscriminant) + self.count(SolveStatus::FlooredZero)
    }
}

/// Single-factor bootstrap.
pub fn bootstrap(curve: &DiscountCurve, grid: &QuoteGrid) -> Result<CalibrationReport> {
    bootstrap_with_factors(curve, grid.quotes(), grid.dt(), &FactorSet::single())
}

/// Bootstrap under a factor structure. The returned surface holds the total
/// per-cell vol; pass it through `decompose` with the same `fset`.
///
/// `quotes` must already be ordered by `(expiry, tenor)`.
pub fn bootstrap_with_factors(
    curve: &DiscountCurve,
    quotes: &[SwaptionQuote],
    dt: f64,
    fset: &FactorSet,
) -> Result<CalibrationReport> {
    let size = quotes
        .iter()
        .map(|q| q.schedule(dt).map(|s| s.last_index()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap_or(0);
    extend_surface(curve, quotes, fset, ForwardVolSurface::empty(dt, size))
}

/// Continue a bootstrap from a partially known surface. Cells already known
/// are held fixed; a quote whose region holds no new cells is recorded as
/// skipped along with its repricing residual.
pub fn extend_surface(
    curve: &DiscountCurve,
    quotes: &[SwaptionQuote],
    fset: &FactorSet,
    mut surface: ForwardVolSurface,
) -> Result<CalibrationReport> {
    let dt = surface.dt();
    let scheds = quotes.iter().map(|q| q.schedule(dt)).collect::<Result<Vec<_>>>()?;
    for (pos, w) in scheds.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        if (a.expiry_index(), a.n_payments()) >= (b.expiry_index(), b.n_payments()) {
            return Err(Error::UnsortedQuotes(pos + 1));
        }
    }
    let size = surface.size();
    if let Some(s) = scheds.iter().find(|s| s.last_index() > size) {
        return Err(Error::OutsideRegion { i: s.expiry_index().saturating_sub(1), j: s.last_index() - 1 });
    }
    let max_t = size as f64 * dt;
    if max_t > curve.max_maturity() * (1.0 + 1e-12) {
        return Err(Error::OutOfRange { time: max_t, max: curve.max_maturity() });
    }
    let shapes = driver_shapes(fset, size, dt)?;
    let mut records = Vec::with_capacity(quotes.len());

    for (quote, sched) in quotes.iter().zip(&scheds) {
        if sched.expiry_index() == 0 {
            return Err(Error::InvalidSchedule("quote expiry must be positive".into()));
        }
        let weights = SwapVolWeights::atm(curve, sched)?;
        let (known, unknown) = split_with_weights(&weights, &surface, fset, &shapes)?;
        let quadratic = known
            .iter()
            .zip(&unknown)
            .map(|(k, u)| assemble_quadratic(k, u))
            .fold(Quadratic::default(), |acc, q| acc + q);
        let target = quote_to_pv_target(curve, sched, quote.vol)?;

        let (sigma, status) = if quadratic.a < NO_UNKNOWNS_THRESHOLD {
            (None, SolveStatus::SkippedNoUnknowns)
        } else {
            let (s, status) = solve_vol(&quadratic, target)?;
            (Some(s), status)
        };
        if let Some(s) = sigma {
            let fresh: Vec<_> = quote_region(sched).filter(|&(i, j)| !surface.is_known(i, j)).collect();
            for (i, j) in fresh {
                surface.set(i, j, s);
            }
        }
        let residual = (quadratic.eval(sigma.unwrap_or(0.0)) - target).abs();
        records.push(QuoteRecord { quote: *quote, sigma, quadratic, target, residual, status });
    }
    Ok(CalibrationReport { records, surface })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::DEFAULT_DT;
    use crate::svapprox::{integrated_variance, pv_target_to_quote, vol_profile};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn curve() -> DiscountCurve {
        DiscountCurve::flat(0.03, 30.0, DEFAULT_DT).unwrap()
    }

    /// Quotes implied by a surface through the small-vol pricer.
    fn quotes_from(curve: &DiscountCurve, fvs: &ForwardVolSurface, pairs: &[(f64, f64)]) -> Vec<SwaptionQuote> {
        pairs
            .iter()
            .map(|&(e, t)| {
                let s = SwapSchedule::new(e, t, DEFAULT_DT).unwrap();
                let w = integrated_variance(&vol_profile(curve, fvs, &s).unwrap());
                SwaptionQuote::new(e, t, pv_target_to_quote(curve, &s, w).unwrap())
            })
            .collect()
    }

    #[test]
    fn quote_grid_sorts_and_validates() {
        let g = QuoteGrid::new(
            vec![SwaptionQuote::new(1.0, 2.0, 0.01), SwaptionQuote::new(0.25, 1.0, 0.01), SwaptionQuote::new(1.0, 1.0, 0.01)],
            DEFAULT_DT,
        )
        .unwrap();
        let keys: Vec<_> = g.quotes().iter().map(|q| (q.expiry, q.tenor)).collect();
        assert_eq!(keys, vec![(0.25, 1.0), (1.0, 1.0), (1.0, 2.0)]);

        let dup = vec![SwaptionQuote::new(0.25, 1.0, 0.01), SwaptionQuote::new(0.25, 1.0, 0.02)];
        assert!(QuoteGrid::new(dup, DEFAULT_DT).is_err());
        assert!(QuoteGrid::new(vec![SwaptionQuote::new(0.3, 1.0, 0.01)], DEFAULT_DT).is_err());
        assert!(QuoteGrid::new(vec![SwaptionQuote::new(0.25, 1.0, -0.01)], DEFAULT_DT).is_err());
    }

    #[test]
    fn split_profile_degenerate_masks() {
        let c = curve();
        let s = SwapSchedule::new(1.0, 2.0, DEFAULT_DT).unwrap();
        let full = ForwardVolSurface::from_fn(DEFAULT_DT, 12, |i, j| 0.005 + 0.0002 * (i + j) as f64);
        let (k, u) = split_profile(&c, &full, &s).unwrap();
        assert!(u.values.iter().all(|&x| x == 0.0));
        assert_eq!(k, vol_profile(&c, &full, &s).unwrap());

        let empty = ForwardVolSurface::empty(DEFAULT_DT, 12);
        let (k, u) = split_profile(&c, &empty, &s).unwrap();
        assert!(k.values.iter().all(|&x| x == 0.0));
        let unit = vol_profile(&c, &ForwardVolSurface::constant(DEFAULT_DT, 12, 1.0), &s).unwrap();
        for (a, b) in u.values.iter().zip(&unit.values) {
            assert_relative_eq!(*a, *b, epsilon = 1e-16);
        }
    }

    #[test]
    fn split_profile_consistency() {
        let c = curve();
        let s = SwapSchedule::new(1.0, 2.0, DEFAULT_DT).unwrap();
        let star = 0.0071;
        let mut partial = ForwardVolSurface::empty(DEFAULT_DT, 12);
        let base = |i: usize, j: usize| 0.004 + 0.0003 * i as f64 + 0.0001 * j as f64;
        for i in 0..12 {
            for j in i..12 {
                if (i + j) % 2 == 0 {
                    partial.set(i, j, base(i, j));
                }
            }
        }
        let full = ForwardVolSurface::from_fn(DEFAULT_DT, 12, |i, j| if (i + j) % 2 == 0 { base(i, j) } else { star });
        let (k, u) = split_profile(&c, &partial, &s).unwrap();
        let v = vol_profile(&c, &full, &s).unwrap();
        for i in 0..4 {
            assert_relative_eq!(k.values[i] + star * u.values[i], v.values[i], max_relative = 1e-13);
        }
    }

    #[test]
    fn assemble_examples() {
        let q = assemble_quadratic(&VolProfile { values: vec![0.0], dt: 0.25 }, &VolProfile { values: vec![1.0], dt: 0.25 });
        assert_eq!(q, Quadratic { a: 0.25, b: 0.0, c: 0.0 });
        let q = assemble_quadratic(&VolProfile { values: vec![2.0], dt: 0.25 }, &VolProfile { values: vec![1.0], dt: 0.25 });
        assert_eq!(q, Quadratic { a: 0.25, b: 0.5, c: 1.0 });
    }

    #[test]
    fn solve_examples() {
        let solve = |a, b, c, t| solve_vol(&Quadratic { a, b, c }, t).unwrap();
        let (s, st) = solve(1.0, 0.0, 0.0, 0.04);
        assert_relative_eq!(s, 0.2, epsilon = 1e-15);
        assert_eq!(st, SolveStatus::Exact);
        assert_eq!(solve(1.0, 1.0, 0.0, 3.0), (1.0, SolveStatus::Exact));
        assert_eq!(solve(2.0, 3.0, 1.0, 1.0), (0.0, SolveStatus::Exact));
        assert_eq!(solve(1.0, 0.0, 1.0, 0.5), (0.0, SolveStatus::ClampedDiscriminant));
        assert_eq!(solve(1.0, -0.5, 1.0, 0.5), (0.5, SolveStatus::ClampedDiscriminant));
        assert_eq!(solve(1.0, 2.0, 1.0, 0.5), (0.0, SolveStatus::FlooredZero));
        assert!(solve_vol(&Quadratic { a: 0.0, b: 1.0, c: 0.0 }, 1.0).is_err());
    }

    #[test]
    fn first_quote_fills_one_block() {
        let c = curve();
        let report = bootstrap(&c, &QuoteGrid::new(vec![SwaptionQuote::new(0.25, 1.0, 0.008)], DEFAULT_DT).unwrap()).unwrap();
        let s = &report.surface;
        assert_eq!(s.size(), 5);
        let sigma = report.records[0].sigma.unwrap();
        for k in 0..5 {
            assert_eq!(s.get(0, k), Some(sigma));
        }
        assert_eq!(s.n_known(), 5);
        // the solved block reprices the quote
        let sched = SwapSchedule::new(0.25, 1.0, DEFAULT_DT).unwrap();
        let w = integrated_variance(&vol_profile(&c, s, &sched).unwrap());
        assert_relative_eq!(pv_target_to_quote(&c, &sched, w).unwrap(), 0.008, max_relative = 1e-12);
        // rate vol and forward vol differ only by curve-shape effects
        assert!((sigma - 0.008).abs() < 1e-4);
    }

    #[test]
    fn round_trip_flat_surface() {
        let c = curve();
        let pairs: Vec<_> = [0.25, 0.5, 1.0, 2.0, 5.0]
            .iter()
            .flat_map(|&e| [1.0, 2.0, 5.0].map(|t| (e, t)))
            .collect();
        let fvs = ForwardVolSurface::constant(DEFAULT_DT, 40, 0.008);
        let grid = QuoteGrid::new(quotes_from(&c, &fvs, &pairs), DEFAULT_DT).unwrap();
        let report = bootstrap(&c, &grid).unwrap();
        assert_eq!(report.records.len(), pairs.len());
        for (_, _, s) in report.surface.known_cells() {
            assert!((s - 0.008).abs() < 1e-8);
        }
        for r in &report.records {
            assert_eq!(r.status, SolveStatus::Exact);
            assert!(r.residual <= 1e-12 * r.target);
        }
    }

    #[test]
    fn zero_quotes_give_zero_surface() {
        let grid = QuoteGrid::new(
            vec![SwaptionQuote::new(0.25, 1.0, 0.0), SwaptionQuote::new(0.5, 2.0, 0.0), SwaptionQuote::new(1.0, 1.0, 0.0)],
            DEFAULT_DT,
        )
        .unwrap();
        let report = bootstrap(&curve(), &grid).unwrap();
        assert!(report.surface.known_cells().all(|(_, _, s)| s == 0.0));
        assert!(report.records.iter().all(|r| r.residual == 0.0));
    }

    #[test]
    fn covered_quote_is_skipped() {
        let c = curve();
        let prior = ForwardVolSurface::constant(DEFAULT_DT, 9, 0.008);
        let report = extend_surface(&c, &[SwaptionQuote::new(0.25, 1.0, 0.009)], &FactorSet::single(), prior.clone()).unwrap();
        let r = &report.records[0];
        assert_eq!(r.status, SolveStatus::SkippedNoUnknowns);
        assert_eq!(r.sigma, None);
        let s = SwapSchedule::new(0.25, 1.0, DEFAULT_DT).unwrap();
        let model = integrated_variance(&vol_profile(&c, &prior, &s).unwrap());
        assert_relative_eq!(r.residual, (model - r.target).abs(), max_relative = 1e-12);
        assert!(r.residual > 0.0);
        assert_eq!(report.surface, prior);
    }

    #[test]
    fn unsorted_quotes_rejected() {
        let quotes = vec![SwaptionQuote::new(1.0, 1.0, 0.008), SwaptionQuote::new(0.5, 1.0, 0.008)];
        assert!(matches!(
            bootstrap_with_factors(&curve(), &quotes, DEFAULT_DT, &FactorSet::single()),
            Err(Error::UnsortedQuotes(1))
        ));
    }

    #[test]
    fn region_beyond_curve_rejected() {
        let c = DiscountCurve::flat(0.03, 5.0, DEFAULT_DT).unwrap();
        let grid = QuoteGrid::new(vec![SwaptionQuote::new(2.0, 5.0, 0.008)], DEFAULT_DT).unwrap();
        assert!(matches!(bootstrap(&c, &grid), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn inconsistent_quotes_are_clamped() {
        // a tiny long-tenor vol after a large short-tenor vol cannot be matched
        let grid = QuoteGrid::new(vec![SwaptionQuote::new(1.0, 1.0, 0.02), SwaptionQuote::new(1.0, 10.0, 0.0005)], DEFAULT_DT).unwrap();
        let report = bootstrap(&curve(), &grid).unwrap();
        assert_eq!(report.records[0].status, SolveStatus::Exact);
        assert_ne!(report.records[1].status, SolveStatus::Exact);
        assert!(report.clamp_count() > 0);
        assert!(report.surface.known_cells().all(|(_, _, s)| s >= 0.0));
    }

    proptest! {
        #[test]
        fn quadratic_identity(
            k in proptest::collection::vec(-1.0f64..1.0, 1..8),
            u in proptest::collection::vec(-1.0f64..1.0, 8),
            sigma in -2.0f64..2.0,
        ) {
            let n = k.len();
            let kp = VolProfile { values: k.clone(), dt: 0.25 };
            let up = VolProfile { values: u[..n].to_vec(), dt: 0.25 };
            let q = assemble_quadratic(&kp, &up);
            let direct: f64 = k.iter().zip(&u).map(|(a, b)| (a + sigma * b).powi(2) * 0.25).sum();
            prop_assert!((q.eval(sigma) - direct).abs() < 1e-12);
            prop_assert!(q.a >= 0.0 && q.c >= 0.0);
        }

        #[test]
        fn exact_roots_reprice(a in 1e-6f64..10.0, b in -1.0f64..1.0, c in 0.0f64..1.0, t in 0.0f64..5.0) {
            let q = Quadratic { a, b, c };
            let (s, st) = solve_vol(&q, t).unwrap();
            prop_assert!(s >= 0.0);
            if st == SolveStatus::Exact {
                prop_assert!((q.eval(s) - t).abs() <= 1e-12 * t.max(q.c).max(1e-300) * 10.0);
            }
        }

        #[test]
        fn known_cells_never_change(v1 in 0.003f64..0.015, v2 in 0.003f64..0.015, v3 in 0.003f64..0.015) {
            let c = curve();
            let first = bootstrap(&c, &QuoteGrid::new(vec![SwaptionQuote::new(0.5, 1.0, v1)], DEFAULT_DT).unwrap()).unwrap();
            let all = bootstrap(&c, &QuoteGrid::new(
                vec![SwaptionQuote::new(0.5, 1.0, v1), SwaptionQuote::new(0.5, 3.0, v2), SwaptionQuote::new(1.0, 2.0, v3)],
                DEFAULT_DT,
            ).unwrap()).unwrap();
            for (i, j, s) in first.surface.known_cells() {
                prop_assert_eq!(all.surface.get(i, j), Some(s));
            }
        }
    }
}
