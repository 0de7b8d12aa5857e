//! Recovering the aquatic carrying capacity from weekly case counts.

use wnvcast::model::{calibrate_carrying_capacity, CalibrationMethod, CalibrationSettings, ModelParams};
use wnvcast::pipeline::{simulate_years, ForecastSettings};
use wnvcast::synth::{sample_cases_from_incidence, SyntheticClimate};

fn main() -> wnvcast::Result<()> {
    let climate = SyntheticClimate {
        start_year: 2016,
        end_year: 2020,
        ..Default::default()
    };
    let temps = climate.generate();
    let truth = ModelParams::default().with_carrying_capacity(1.0e5);
    let settings = ForecastSettings::default();
    let trajs = simulate_years(&truth, &temps, &temps.full_years(), &settings)?;
    let cases = sample_cases_from_incidence("demo", &trajs, settings.week_convention, settings.weeks(), 3);
    println!("observed cases: {}", cases.entries().iter().map(|e| e.count as u64).sum::<u64>());

    let start = truth.with_carrying_capacity(3.0e4);
    let kalman = calibrate_carrying_capacity(&start, &temps, &cases, &CalibrationSettings::default())?;
    println!(
        "ensemble Kalman: K = {:.3e} (var of ln K {:.2e}, {} iterations)",
        kalman.k, kalman.log_k_variance, kalman.iterations
    );

    let grid = CalibrationSettings {
        method: CalibrationMethod::GridSearch,
        ..Default::default()
    };
    let g = calibrate_carrying_capacity(&start, &temps, &cases, &grid)?;
    println!("grid search:     K = {:.3e}", g.k);
    Ok(())
}
