//! Small-vol ATM swaption prices on a flat forward-vol surface.

use hjm_sva::svapprox::{pv_target_to_quote, swaption_price, variance_from_price};
use hjm_sva::{DiscountCurve, ForwardVolSurface, SwapSchedule, DEFAULT_DT};

fn main() -> hjm_sva::Result<()> {
    let curve = DiscountCurve::flat(0.03, 30.0, DEFAULT_DT)?;
    let surface = ForwardVolSurface::constant(DEFAULT_DT, 81, 0.008);
    println!("expiry tenor   price      quote vol (bp)");
    for (e, t) in [(1.0, 1.0), (1.0, 10.0), (5.0, 5.0), (10.0, 10.0)] {
        let s = SwapSchedule::new(e, t, DEFAULT_DT)?;
        let price = swaption_price(&curve, &surface, &s)?;
        let vol = pv_target_to_quote(&curve, &s, variance_from_price(price))?;
        println!("{e:>6} {t:>5}   {price:.6}   {:.2}", vol * 1e4);
    }
    Ok(())
}
