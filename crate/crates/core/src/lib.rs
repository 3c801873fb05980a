//! Calibration and Monte Carlo pricing for multi-factor HJM models using the
//! small-volatility approximation of ATM swaption prices.
//!
//! The pipeline:
//!
//! 1. [`curve`]: discount factors `B(0,T)`, ATM swap rates on a quarterly grid.
//! 2. [`svapprox`]: Gaussian swap-PV variance as a linear functional of the
//!    forward-vol surface, and the resulting ATM option price.
//! 3. [`calibrator`]: bootstrap of the surface, one quadratic per quote.
//! 4. [`factors`]: split of the surface across correlated mean-reverting
//!    factors.
//! 5. [`mcengine`]: exact-drift discrete HJM Monte Carlo to check the result.
//!
//! [`market_io`] and [`cli`] handle files and the `hjm-sva` binary.

// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the maths.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod calibrator;
pub mod cli;
pub mod curve;
pub mod error;
pub mod factors;
pub mod market_io;
pub mod mcengine;
pub mod svapprox;

pub use calibrator::{bootstrap, bootstrap_with_factors, CalibrationReport, QuoteGrid, SolveStatus, SwaptionQuote};
pub use curve::{DiscountCurve, SwapSchedule, DEFAULT_DT};
pub use error::{Error, Result};
pub use factors::{decompose, FactorSet, FactorVolSurface};
pub use mcengine::{HjmModel, PriceEstimate, Side, SimConfig};
pub use svapprox::{ForwardVolSurface, VolProfile};
