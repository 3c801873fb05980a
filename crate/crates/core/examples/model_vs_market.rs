//! Calibrate, reprice every quote by Monte Carlo and print the vol table.

use hjm_sva::cli::model_vols;
use hjm_sva::market_io::{load_config, load_curve, load_quotes};
use hjm_sva::bootstrap_with_factors;

fn main() -> hjm_sva::Result<()> {
    let dir = env!("CARGO_MANIFEST_DIR");
    let mut cfg = load_config(format!("{dir}/data/three_factor.toml"))?;
    cfg.sim.n_paths = 20_000;
    let curve = load_curve(format!("{dir}/data/curve.csv"), cfg.dt)?;
    let grid = load_quotes(format!("{dir}/data/quotes.csv"), cfg.dt)?;
    let report = bootstrap_with_factors(&curve, grid.quotes(), cfg.dt, &cfg.factors)?;

    let quotes: Vec<_> = grid.quotes().iter().map(|q| (q.expiry, q.tenor, q.vol)).collect();
    let rows = model_vols(&curve, &report.surface, &cfg, &quotes)?;
    println!("expiry tenor  market   model    diff     se   (bp)");
    for r in rows.iter().step_by(5) {
        println!(
            "{:>6} {:>5} {:>7.2} {:>7.2} {:>7.2} {:>6.2}",
            r.expiry,
            r.tenor,
            r.market_vol_bp,
            r.model_vol_bp,
            r.diff_bp(),
            r.mc_se_bp
        );
    }
    Ok(())
}
