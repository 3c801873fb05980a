//! Small-volatility pricing of ATM swaptions.
//!
//! To first order in the forward volatility the discounted swap PV at expiry
//! is Gaussian. Its volatility at time `t_i` is a weighted sum of the forward
//! vols `σ(t_i, t_j)` along row `i`; the weights depend only on the curve and
//! the swap, not on `i`. Integrals over maturity and over time are both taken
//! with the left-point rule on the `dt` grid.

use std::f64::consts::PI;

use crate::curve::{DiscountCurve, SwapSchedule};
use crate::error::{Error, Result};

/// Lower-triangular grid of forward vols `σ(t_i, T_j)`, `0 ≤ i ≤ j < M`,
/// with a per-cell known flag used while bootstrapping.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardVolSurface {
    dt: f64,
    size: usize,
    values: Vec<f64>,
    known: Vec<bool>,
}

fn packed_len(size: usize) -> usize {
    size * (size + 1) / 2
}

impl ForwardVolSurface {
    /// All cells unknown and zero.
    pub fn empty(dt: f64, size: usize) -> Self {
        let n = packed_len(size);
        Self { dt, size, values: vec![0.0; n], known: vec![false; n] }
    }

    /// All cells known and equal to `sigma`.
    pub fn constant(dt: f64, size: usize, sigma: f64) -> Self {
        let n = packed_len(size);
        Self { dt, size, values: vec![sigma; n], known: vec![true; n] }
    }

    /// Build from a closure over `(i, j)`; all cells known.
    pub fn from_fn(dt: f64, size: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut s = Self::empty(dt, size);
        for i in 0..size {
            for j in i..size {
                s.set(i, j, f(i, j));
            }
        }
        s
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Grid dimension `M`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Value if the cell exists and is known.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if i > j || j >= self.size {
            return None;
        }
        let k = self.offset(i, j);
        self.known[k].then_some(self.values[k])
    }

    /// Raw value regardless of the known flag. Panics outside the grid.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        assert!(i <= j && j < self.size, "cell ({i}, {j}) outside grid");
        self.values[self.offset(i, j)]
    }

    pub fn is_known(&self, i: usize, j: usize) -> bool {
        i <= j && j < self.size && self.known[self.offset(i, j)]
    }

    /// Set a cell and mark it known. Panics outside the grid or on a negative
    /// or non-finite value.
    pub fn set(&mut self, i: usize, j: usize, sigma: f64) {
        assert!(i <= j && j < self.size, "cell ({i}, {j}) outside grid");
        assert!(sigma.is_finite() && sigma >= 0.0, "vol must be finite and >= 0, got {sigma}");
        let k = self.offset(i, j);
        self.values[k] = sigma;
        self.known[k] = true;
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// Known cells as `(i, j, σ)` in row-major order.
    pub fn known_cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.size)
            .flat_map(move |i| (i..self.size).map(move |j| (i, j)))
            .filter_map(|(i, j)| self.get(i, j).map(|s| (i, j, s)))
    }

    pub fn n_known(&self) -> usize {
        self.known.iter().filter(|&&k| k).count()
    }

    /// Fail with the list of unknown cells among `cells`.
    pub fn require(&self, cells: impl IntoIterator<Item = (usize, usize)>) -> Result<()> {
        let missing: Vec<_> = cells
            .into_iter()
            .filter(|&(i, j)| !self.is_known(i, j))
            .map(|(i, j)| (i as f64 * self.dt, j as f64 * self.dt))
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::MissingCells { cells: missing })
        }
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        // rows 0..i hold size, size-1, ..., size-i+1 cells
        i * self.size - i * i.saturating_sub(1) / 2 + (j - i)
    }
}

/// Cells `(i, j)` with `i < E` and `i ≤ j < P` that a swaption depends on.
pub fn quote_region(sched: &SwapSchedule) -> impl Iterator<Item = (usize, usize)> {
    let (e, p) = (sched.expiry_index(), sched.last_index());
    (0..e).flat_map(move |i| (i..p).map(move |j| (i, j)))
}

/// Swap PV volatility `v(t_i)` for `i = 0..E`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolProfile {
    pub values: Vec<f64>,
    pub dt: f64,
}

impl VolProfile {
    pub fn zeros(len: usize, dt: f64) -> Self {
        Self { values: vec![0.0; len], dt }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-maturity weights `c(j)` of `σ(t_i, t_j)` in `v(t_i)` for one swap.
#[derive(Debug, Clone)]
pub struct SwapVolWeights {
    sched: SwapSchedule,
    strike: f64,
    weights: Vec<f64>,
}

impl SwapVolWeights {
    /// Weights at the ATM strike.
    pub fn atm(curve: &DiscountCurve, sched: &SwapSchedule) -> Result<Self> {
        let strike = curve.atm_rate(sched)?;
        Self::with_strike(curve, sched, strike)
    }

    /// Weights for a per-period fixed rate `strike`:
    /// `c(j) = dt·[r_s·Σ_{T_n > t_j} B(0,T_n) − B(0,T_e)·1{t_j < T_e} + B(0,T_N)·1{t_j < T_N}]`.
    pub fn with_strike(curve: &DiscountCurve, sched: &SwapSchedule, strike: f64) -> Result<Self> {
        let dt = sched.dt();
        let (e, p) = (sched.expiry_index(), sched.last_index());
        let bonds = (0..=p).map(|k| curve.discount_at(k)).collect::<Result<Vec<_>>>()?;
        // tail[j] = Σ_{n: T_n > t_j} B(0, T_n)
        let mut tail = vec![0.0; p + 1];
        for j in (0..p).rev() {
            tail[j] = tail[j + 1] + if j + 1 > e { bonds[j + 1] } else { 0.0 };
        }
        let weights = (0..p)
            .map(|j| {
                let start = if j < e { bonds[e] } else { 0.0 };
                dt * (strike * tail[j] - start + bonds[p])
            })
            .collect();
        Ok(Self { sched: *sched, strike, weights })
    }

    pub fn schedule(&self) -> &SwapSchedule {
        &self.sched
    }

    pub fn strike(&self) -> f64 {
        self.strike
    }

    /// Weight of cell `(i, j)`; zero for `j ≥ P`.
    pub fn coefficient(&self, i: usize, j: usize) -> Result<f64> {
        if i >= self.sched.expiry_index() || j < i {
            return Err(Error::OutsideRegion { i, j });
        }
        Ok(self.weights.get(j).copied().unwrap_or(0.0))
    }

    /// Weights indexed by maturity `j < P`.
    pub fn by_maturity(&self) -> &[f64] {
        &self.weights
    }

    /// `v(t_i) = Σ_j c(j)·σ(t_i, t_j)`.
    pub fn profile(&self, fvs: &ForwardVolSurface) -> Result<VolProfile> {
        fvs.require(quote_region(&self.sched))?;
        let values = (0..self.sched.expiry_index())
            .map(|i| (i..self.weights.len()).map(|j| self.weights[j] * fvs.value(i, j)).sum())
            .collect();
        Ok(VolProfile { values, dt: self.sched.dt() })
    }
}

/// Single weight `c(i, j)` at the ATM strike.
pub fn coefficient(curve: &DiscountCurve, sched: &SwapSchedule, i: usize, j: usize) -> Result<f64> {
    SwapVolWeights::atm(curve, sched)?.coefficient(i, j)
}

/// ATM swap PV volatility profile.
pub fn vol_profile(
    curve: &DiscountCurve,
    fvs: &ForwardVolSurface,
    sched: &SwapSchedule,
) -> Result<VolProfile> {
    SwapVolWeights::atm(curve, sched)?.profile(fvs)
}

/// `Σ²T = Σ_i v(t_i)²·dt`.
pub fn integrated_variance(profile: &VolProfile) -> f64 {
    profile.values.iter().map(|v| v * v).sum::<f64>() * profile.dt
}

/// `E[max(PV, 0)]` for a centred normal PV with the given variance.
pub fn atm_price(variance: f64) -> Result<f64> {
    if !(variance >= 0.0) {
        return Err(Error::InvalidInput(format!("negative variance {variance}")));
    }
    Ok((variance / (2.0 * PI)).sqrt())
}

/// PV variance implied by an ATM price; inverse of [`atm_price`].
pub fn variance_from_price(price: f64) -> f64 {
    2.0 * PI * price * price
}

/// Converts an annualised rate vol into per-period PV vol: `dt·Σ B(0,T_n)`.
pub fn pv_conversion(curve: &DiscountCurve, sched: &SwapSchedule) -> Result<f64> {
    Ok(sched.dt() * curve.annuity(sched)?)
}

/// Market quote to PV-variance target `(D·vol)²·T_e`.
pub fn quote_to_pv_target(curve: &DiscountCurve, sched: &SwapSchedule, quote_vol: f64) -> Result<f64> {
    if !(quote_vol >= 0.0) {
        return Err(Error::InvalidInput(format!("negative quote vol {quote_vol}")));
    }
    let d = pv_conversion(curve, sched)?;
    Ok((d * quote_vol).powi(2) * sched.expiry())
}

/// Annualised normal rate vol implied by a PV variance; inverse of
/// [`quote_to_pv_target`].
pub fn pv_target_to_quote(curve: &DiscountCurve, sched: &SwapSchedule, variance: f64) -> Result<f64> {
    let d = pv_conversion(curve, sched)?;
    Ok((variance.max(0.0) / sched.expiry()).sqrt() / d)
}

/// Small-vol ATM price of a swaption on a single-factor surface.
pub fn swaption_price(curve: &DiscountCurve, fvs: &ForwardVolSurface, sched: &SwapSchedule) -> Result<f64> {
    atm_price(integrated_variance(&vol_profile(curve, fvs, sched)?))
}
