//! Simulate a calibrated model and check discounted bonds are martingales.

use hjm_sva::market_io::{load_curve, load_quotes};
use hjm_sva::mcengine::{bond_martingale_check, simulate};
use hjm_sva::{bootstrap, decompose, FactorSet, HjmModel, SimConfig, DEFAULT_DT};

fn main() -> hjm_sva::Result<()> {
    let dir = env!("CARGO_MANIFEST_DIR");
    let curve = load_curve(format!("{dir}/data/curve.csv"), DEFAULT_DT)?;
    let grid = load_quotes(format!("{dir}/data/quotes.csv"), DEFAULT_DT)?;
    let report = bootstrap(&curve, &grid)?;

    let fset = FactorSet::single();
    let model = HjmModel::new(&curve, &decompose(&report.surface, &fset)?, &fset, 20, 40)?;
    let paths = simulate(&model, &SimConfig::new(20_000, 1, true)?, &[4, 20])?;

    for (step, maturity) in [(4, 8), (4, 40), (20, 20), (20, 40)] {
        let c = bond_martingale_check(&paths, step, maturity)?;
        println!(
            "E[D(t_{step}) B(t_{step}, T_{maturity})] / B(0, T_{maturity}) = {:.6} +- {:.6}  (z {:.2})",
            c.ratio(),
            c.ratio_se(),
            c.z_score()
        );
    }
    Ok(())
}
