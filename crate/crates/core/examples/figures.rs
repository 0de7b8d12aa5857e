//! Rendering the SVG figures: onset density with risk regions, onset
//! timeline and daily risk strip.
//!
//!     cargo run --release --example figures -- /tmp/figures

use std::fs;
use std::path::PathBuf;

use wnvcast::config::RunConfig;
use wnvcast::eval::BinScheme;
use wnvcast::pipeline::{fit_models, forecast_trajectory, forecast_year, simulate_years};
use wnvcast::plot;

const CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/synthetic/config.toml");

fn main() -> wnvcast::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "figures".into()));
    fs::create_dir_all(&dir).expect("create output dir");
    let cfg = RunConfig::load(CONFIG)?;
    let county = cfg.load_county()?;
    let s = &cfg.forecast;
    let target = 2024;
    let training = cfg.training_years_for(&county, target)?;
    let trajs = simulate_years(&county.params, &county.temps, &training, s)?;
    let models = fit_models(&training, &trajs, &county.cases, s)?;
    let traj = forecast_trajectory(&county.params, &county.temps, target, s)?;
    let observed = county.onset_day(target, s);
    let fc = forecast_year(&models, &traj, observed, s)?;

    let points: Vec<(f64, f64)> = models.onset.samples.iter().map(|p| (p.m, p.t)).collect();
    let figures = [
        (
            "onset_density.svg",
            plot::surface_svg(&models.onset.surface.grid, &models.onset.surface.values, &models.onset.regions, &points, "Onset density"),
        ),
        ("onset_timeline.svg", plot::onset_timeline_svg(&fc.onset, observed, "Onset forecast 2024")),
        ("daily_risk.svg", plot::risk_strip_svg(&fc.risk, "Daily expected cases 2024")),
        ("pmf_week34.svg", plot::pmf_panel_svg(fc.predicted(34).unwrap_or(0.0), county.cases.count(target, 34), &BinScheme::default(), "Week 34")),
    ];
    for (name, svg) in figures {
        fs::write(dir.join(name), svg).expect("write figure");
        println!("wrote {}", dir.join(name).display());
    }
    Ok(())
}
