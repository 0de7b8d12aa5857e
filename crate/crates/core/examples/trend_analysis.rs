//! Trend in the yearly number of high-risk days over a warming record.

use wnvcast::config::RunConfig;
use wnvcast::pipeline::{fit_rate_model, simulate_years};
use wnvcast::trend::{annual_risky_days, trend_report};

const CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/warming/config.toml");

fn main() -> wnvcast::Result<()> {
    let cfg = RunConfig::load(CONFIG)?;
    let county = cfg.load_county()?;
    let s = &cfg.forecast;
    let trajs = simulate_years(&county.params, &county.temps, &county.years(), s)?;
    let rate = fit_rate_model(&county.case_years(), &trajs, &county.cases, s)?;
    let series = annual_risky_days(&rate, &trajs, s.risky_threshold)?;
    for (y, c) in series.years.iter().zip(&series.counts) {
        println!("{y}  {c:>4.0}  {}", "#".repeat((*c / 4.0) as usize));
    }
    let r = trend_report(&series, cfg.trend.continuity_correction)?;
    println!("OLS slope {:.2} days/yr, p = {:.2e}", r.ols.slope, r.ols.p);
    println!("Spearman rho {:.2}, p = {:.2e}", r.spearman.rho, r.spearman.p);
    println!(
        "Mann-Kendall S = {}, z = {:.2}, p = {:.2e}, Sen slope {:.2}",
        r.mann_kendall.s, r.mann_kendall.z, r.mann_kendall.p, r.mann_kendall.sen_slope
    );
    Ok(())
}
