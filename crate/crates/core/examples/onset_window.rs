//! Onset density in the (M, T) plane, its risk regions and the onset
//! window they imply for a new season.

use std::fs::File;

use wnvcast::calendar::days_in_year;
use wnvcast::config::RunConfig;
use wnvcast::onset::{classify_days, write_timeline_csv, IntervalLength};
use wnvcast::pipeline::{fit_onset_model, forecast_trajectory, simulate_years};

const CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/synthetic/config.toml");

fn main() -> wnvcast::Result<()> {
    let cfg = RunConfig::load(CONFIG)?;
    let county = cfg.load_county()?;
    let s = &cfg.forecast;
    let target = 2024;
    let training: Vec<i32> = county.case_years().into_iter().filter(|&y| y < target).collect();
    let trajs = simulate_years(&county.params, &county.temps, &training, s)?;
    let model = fit_onset_model(&training, &trajs, &county.cases, s)?;
    println!(
        "{} onset samples, bandwidth (M {:.3e}, T {:.3})",
        model.samples.len(),
        model.surface.bandwidth.m,
        model.surface.bandwidth.t
    );

    // observed temperatures up to the cutoff, climatology afterwards
    let traj = forecast_trajectory(&county.params, &county.temps, target, s)?;
    let n = days_in_year(target);
    let observed = county.onset_day(target, s);
    for region in &model.regions {
        let f = classify_days(&model.surface, region, &traj, (1, n))?.shifted(s.delay_days, n);
        println!(
            "alpha {:.2}: region {:>5} cells, window {:?}, {} days (observed onset {:?})",
            region.alpha,
            region.cell_count(),
            f.interval,
            f.length(IntervalLength::Hull),
            observed
        );
        if region.alpha == 0.9 {
            write_timeline_csv(&f, File::create(std::env::temp_dir().join("onset_timeline.csv")).unwrap())
                .expect("write timeline");
        }
    }
    Ok(())
}
