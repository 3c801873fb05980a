//! Discount curve interpolation, forward rates and ATM swap rates.

use hjm_sva::market_io::load_curve;
use hjm_sva::{SwapSchedule, DEFAULT_DT};

fn main() -> hjm_sva::Result<()> {
    let curve = load_curve(concat!(env!("CARGO_MANIFEST_DIR"), "/data/curve.csv"), DEFAULT_DT)?;
    println!("B(0, 2.3y) = {:.8}", curve.discount(2.3)?);

    let fwd = curve.forward_grid(5.0)?;
    for (k, f) in fwd.iter().enumerate().step_by(4) {
        println!("f(0, {:>4.2}) = {:.4}%", k as f64 * DEFAULT_DT, f * 100.0);
    }

    for (e, t) in [(1.0, 5.0), (5.0, 5.0), (10.0, 10.0)] {
        let s = SwapSchedule::new(e, t, DEFAULT_DT)?;
        // The ATM rate is per period; annualise for display.
        let rate = curve.atm_rate(&s)? / DEFAULT_DT;
        println!("{e}y x {t}y: ATM rate {:.4}%, annuity {:.4}", rate * 100.0, curve.annuity(&s)? * DEFAULT_DT);
    }
    Ok(())
}
