//! The case-rate surface λ(M, T) and the daily risk it implies.

use wnvcast::config::RunConfig;
use wnvcast::pipeline::{fit_rate_model, forecast_trajectory, simulate_years};
use wnvcast::severity::{count_risky_days, daily_risk, weekly_rates, RateEstimator};

const CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/synthetic/config.toml");

fn main() -> wnvcast::Result<()> {
    let cfg = RunConfig::load(CONFIG)?;
    let county = cfg.load_county()?;
    let target = 2024;
    let training: Vec<i32> = county.case_years().into_iter().filter(|&y| y < target).collect();
    let traj = forecast_trajectory(&county.params, &county.temps, target, &cfg.forecast)?;

    for estimator in [RateEstimator::ConditionalMean, RateEstimator::ScaledIntensity] {
        let mut s = cfg.forecast.clone();
        s.rate.estimator = estimator;
        let trajs = simulate_years(&county.params, &county.temps, &training, &s)?;
        let rate = fit_rate_model(&training, &trajs, &county.cases, &s)?;
        let risk = daily_risk(&rate, &traj, county.onset_day(target, &s).unwrap_or(1));
        let weekly = weekly_rates(&rate, &traj, s.week_convention, s.weeks());
        let observed = county.cases.weekly_counts(target, s.weeks());
        println!("{estimator:?}: {} risky days", count_risky_days(&risk, s.risky_threshold));
        println!("  week  predicted  observed");
        for ((w, l), o) in s.weeks().zip(&weekly).zip(&observed) {
            if *o > 0 || *l >= 1.0 {
                println!("  {w:>4}  {l:>9.2}  {o:>8}");
            }
        }
    }
    Ok(())
}
