//! Generate quotes from a known surface, bootstrap them back and compare.

use hjm_sva::svapprox::{pv_target_to_quote, swaption_price, variance_from_price};
use hjm_sva::{bootstrap, DiscountCurve, ForwardVolSurface, QuoteGrid, SwapSchedule, SwaptionQuote, DEFAULT_DT};

fn main() -> hjm_sva::Result<()> {
    let curve = DiscountCurve::flat(0.025, 30.0, DEFAULT_DT)?;
    let truth = ForwardVolSurface::from_fn(DEFAULT_DT, 81, |i, j| 0.006 + 0.004 * (-0.1 * (j - i) as f64).exp());

    let mut quotes = Vec::new();
    for e in [0.5, 1.0, 2.0, 5.0, 10.0] {
        for t in [1.0, 2.0, 5.0, 10.0] {
            let s = SwapSchedule::new(e, t, DEFAULT_DT)?;
            let w = variance_from_price(swaption_price(&curve, &truth, &s)?);
            quotes.push(SwaptionQuote::new(e, t, pv_target_to_quote(&curve, &s, w)?));
        }
    }
    let report = bootstrap(&curve, &QuoteGrid::new(quotes, DEFAULT_DT)?)?;

    println!("max residual {:e}, clamps {}", report.max_residual(), report.clamp_count());
    for r in report.records.iter().take(6) {
        println!("{:>4} x {:>4}: quote {:.2} bp, sigma {:.6}", r.quote.expiry, r.quote.tenor, r.quote.vol * 1e4, r.sigma.unwrap_or(0.0));
    }
    // A single sigma per block cannot follow the true shape exactly, but
    // every quote is repriced.
    let s = SwapSchedule::new(10.0, 10.0, DEFAULT_DT)?;
    println!(
        "10y x 10y price: truth {:.6}, calibrated {:.6}",
        swaption_price(&curve, &truth, &s)?,
        swaption_price(&curve, &report.surface, &s)?
    );
    Ok(())
}
