//! Writes the bundled synthetic fixtures: a 19-year county and a 35-year
//! warming county, each as `temperature.csv`, `cases.csv` and `config.toml`.
//!
//!     cargo run --example generate_fixtures -- fixtures

use std::fs::{self, File};
use std::path::Path;

use wnvcast::ingest::{write_cases_csv, write_temperature_csv};
use wnvcast::synth::{SyntheticClimate, SyntheticCounty};

fn write_county(dir: &Path, spec: &SyntheticCounty, case_years: Option<(i32, i32)>, extra: &str) -> wnvcast::Result<()> {
    fs::create_dir_all(dir).expect("create fixture dir");
    let g = spec.generate()?;
    let cases = match case_years {
        Some((a, b)) => g.county.cases.only_years(&(a..=b).collect::<Vec<_>>()),
        None => g.county.cases.clone(),
    };
    write_temperature_csv(&g.county.temps, File::create(dir.join("temperature.csv")).unwrap())?;
    write_cases_csv(&cases, File::create(dir.join("cases.csv")).unwrap())?;
    let config = format!(
        r#"location_id = "{id}"
seed = 7

[paths]
temperature = "temperature.csv"
cases = "cases.csv"
output_dir = "out"

[model]
carrying_capacity = {k:e}

[forecast]
delay_days = {delay}
cutoff_day = 140
alphas = [0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99]
{extra}"#,
        id = spec.climate.location_id,
        k = spec.params.carrying_capacity,
        delay = spec.settings.delay_days,
    );
    fs::write(dir.join("config.toml"), config).expect("write config");
    println!(
        "{}: {} days, {} case weeks, rate peak at M = {:.3e}, T = {:.2}",
        dir.display(),
        g.county.temps.len(),
        cases.entries().iter().filter(|e| e.count > 0).count(),
        g.rate.m_center,
        g.rate.t_center
    );
    Ok(())
}

fn main() -> wnvcast::Result<()> {
    let root = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into());
    let root = Path::new(&root);

    let county = SyntheticCounty {
        climate: SyntheticClimate {
            location_id: "synthetic-valley".into(),
            ..Default::default()
        },
        ..Default::default()
    };
    write_county(&root.join("synthetic"), &county, None, "")?;

    let warming = SyntheticCounty {
        climate: SyntheticClimate {
            location_id: "synthetic-warming".into(),
            start_year: 1990,
            end_year: 2024,
            warming_per_year: 0.05,
            seed: 1990,
            ..Default::default()
        },
        ..Default::default()
    };
    write_county(&root.join("warming"), &warming, Some((2006, 2024)), "\n[trend]\ncontinuity_correction = true\n")?;
    Ok(())
}
