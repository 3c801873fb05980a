//! Discount curve and swap-schedule arithmetic.
//!
//! Rates are per period internally: a fixed leg pays `r_s` per period with no
//! separate accrual factor, so annualised figures only appear at the I/O edges.

use crate::error::{Error, Result};

/// Default grid step: quarterly.
pub const DEFAULT_DT: f64 = 0.25;

const GRID_TOL: f64 = 1e-9;

/// Round `x / dt` to an integer, failing if `x` is not on the grid.
pub(crate) fn grid_index(x: f64, dt: f64) -> Option<usize> {
    let k = (x / dt).round();
    if k < 0.0 || (x - k * dt).abs() > GRID_TOL * dt.max(1.0) {
        return None;
    }
    Some(k as usize)
}

/// Zero-coupon discount factors `B(0,T)` with log-linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscountCurve {
    maturities: Vec<f64>,
    log_dfs: Vec<f64>,
    dt: f64,
}

impl DiscountCurve {
    /// Build from `(maturity, discount_factor)` pillars. A pillar at 0 is
    /// optional; if present it must be exactly 1.
    pub fn new(pillars: &[(f64, f64)], dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidCurve(format!("dt must be positive, got {dt}")));
        }
        let mut maturities = vec![0.0];
        let mut log_dfs = vec![0.0];
        for (k, &(t, df)) in pillars.iter().enumerate() {
            if !t.is_finite() || !df.is_finite() {
                return Err(Error::InvalidCurve(format!("pillar {k} is not finite")));
            }
            if df <= 0.0 {
                return Err(Error::InvalidCurve(format!(
                    "pillar {k}: discount factor {df} must be positive"
                )));
            }
            if t == 0.0 && k == 0 {
                if df != 1.0 {
                    return Err(Error::InvalidCurve(format!(
                        "discount factor at maturity 0 must be 1, got {df}"
                    )));
                }
                continue;
            }
            let last = *maturities.last().unwrap();
            if t <= last {
                return Err(Error::InvalidCurve(format!(
                    "pillar {k}: maturity {t} not after {last}"
                )));
            }
            maturities.push(t);
            log_dfs.push(df.ln());
        }
        if maturities.len() < 2 {
            return Err(Error::InvalidCurve("no pillars".into()));
        }
        Ok(Self { maturities, log_dfs, dt })
    }

    /// Flat continuously compounded curve out to `horizon`.
    pub fn flat(rate: f64, horizon: f64, dt: f64) -> Result<Self> {
        Self::new(&[(horizon, (-rate * horizon).exp())], dt)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn max_maturity(&self) -> f64 {
        *self.maturities.last().unwrap()
    }

    /// Pillars excluding the implied `(0, 1)` anchor.
    pub fn pillars(&self) -> Vec<(f64, f64)> {
        self.maturities
            .iter()
            .zip(&self.log_dfs)
            .skip(1)
            .map(|(&t, &l)| (t, l.exp()))
            .collect()
    }

    /// `B(0,T)`.
    pub fn discount(&self, t: f64) -> Result<f64> {
        let max = self.max_maturity();
        // tolerate float noise from grid arithmetic at the last pillar
        if !(t >= 0.0) || t > max * (1.0 + 1e-12) {
            return Err(Error::OutOfRange { time: t, max });
        }
        let t = t.min(max);
        let k = self.maturities.partition_point(|&m| m < t);
        if k == 0 {
            return Ok(1.0);
        }
        if self.maturities[k] == t {
            return Ok(self.log_dfs[k].exp());
        }
        let (t0, t1) = (self.maturities[k - 1], self.maturities[k]);
        let (l0, l1) = (self.log_dfs[k - 1], self.log_dfs[k]);
        let w = (t - t0) / (t1 - t0);
        Ok((l0 + w * (l1 - l0)).exp())
    }

    /// Discount factor at grid point `k·dt`.
    pub fn discount_at(&self, k: usize) -> Result<f64> {
        self.discount(k as f64 * self.dt)
    }

    /// Initial discrete forwards `f(0, t_j)` for `t_j < horizon`.
    pub fn forward_grid(&self, horizon: f64) -> Result<Vec<f64>> {
        let n = grid_index(horizon, self.dt).ok_or_else(|| {
            Error::InvalidSchedule(format!("horizon {horizon} not a multiple of dt {}", self.dt))
        })?;
        let logs = (0..=n)
            .map(|k| self.discount_at(k).map(f64::ln))
            .collect::<Result<Vec<_>>>()?;
        Ok(logs.windows(2).map(|w| -(w[1] - w[0]) / self.dt).collect())
    }

    /// ATM per-period swap rate `(B(0,T_e) − B(0,T_N)) / Σ B(0,T_n)`.
    pub fn atm_rate(&self, sched: &SwapSchedule) -> Result<f64> {
        let annuity = self.annuity(sched)?;
        let start = self.discount_at(sched.expiry_index())?;
        let end = self.discount_at(sched.last_index())?;
        Ok((start - end) / annuity)
    }

    /// Undiscounted-by-accrual annuity `Σ_{n=1}^N B(0,T_n)`.
    pub fn annuity(&self, sched: &SwapSchedule) -> Result<f64> {
        if sched.n_payments() == 0 {
            return Err(Error::InvalidSchedule("empty schedule".into()));
        }
        sched
            .payment_indices()
            .map(|k| self.discount_at(k))
            .sum()
    }
}

/// Expiry and payment dates of a swap on the `dt` grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapSchedule {
    expiry_index: usize,
    n_payments: usize,
    dt: f64,
}

impl SwapSchedule {
    pub fn new(expiry: f64, tenor: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidSchedule(format!("dt must be positive, got {dt}")));
        }
        let expiry_index = grid_index(expiry, dt).ok_or_else(|| {
            Error::InvalidSchedule(format!("expiry {expiry} not a multiple of dt {dt}"))
        })?;
        let n_payments = grid_index(tenor, dt).ok_or_else(|| {
            Error::InvalidSchedule(format!("tenor {tenor} not a multiple of dt {dt}"))
        })?;
        if n_payments == 0 {
            return Err(Error::InvalidSchedule("tenor must cover at least one period".into()));
        }
        Ok(Self { expiry_index, n_payments, dt })
    }

    pub fn from_indices(expiry_index: usize, n_payments: usize, dt: f64) -> Result<Self> {
        if n_payments == 0 {
            return Err(Error::InvalidSchedule("tenor must cover at least one period".into()));
        }
        Ok(Self { expiry_index, n_payments, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn expiry(&self) -> f64 {
        self.expiry_index as f64 * self.dt
    }

    pub fn tenor(&self) -> f64 {
        self.n_payments as f64 * self.dt
    }

    /// `E` with `T_e = E·dt`.
    pub fn expiry_index(&self) -> usize {
        self.expiry_index
    }

    /// `N`, the number of fixed-leg payments.
    pub fn n_payments(&self) -> usize {
        self.n_payments
    }

    /// Grid index of the final payment `T_N`.
    pub fn last_index(&self) -> usize {
        self.expiry_index + self.n_payments
    }

    pub fn payment_indices(&self) -> impl Iterator<Item = usize> {
        self.expiry_index + 1..=self.last_index()
    }

    pub fn payment_times(&self) -> Vec<f64> {
        self.payment_indices().map(|k| k as f64 * self.dt).collect()
    }
}
