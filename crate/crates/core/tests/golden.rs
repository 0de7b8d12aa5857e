//! Regression against published county numbers. Needs real surveillance
//! data, so it only runs when `WNVCAST_GOLDEN` names a golden spec file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use wnvcast::config::RunConfig;
use wnvcast::eval::retrospective;
use wnvcast::pipeline::{fit_rate_model, simulate_years};
use wnvcast::trend::{annual_risky_days, trend_report};

#[derive(Debug, Deserialize)]
struct Severity {
    target_year: i32,
    training_years: Vec<i32>,
    weeks: Vec<u32>,
    lambda: Vec<f64>,
    tolerance: f64,
}

#[derive(Debug, Deserialize)]
struct Trend {
    ols_slope: f64,
    ols_p: f64,
    spearman_rho: f64,
    spearman_p: f64,
    mann_kendall_p: f64,
    sen_slope: f64,
    slope_tolerance: f64,
    p_tolerance: f64,
}

#[derive(Debug, Deserialize)]
struct Golden {
    config: PathBuf,
    severity: Option<Severity>,
    trend: Option<Trend>,
}

fn spec() -> Option<(PathBuf, Golden)> {
    let path = PathBuf::from(std::env::var_os("WNVCAST_GOLDEN")?);
    let text = std::fs::read_to_string(&path).expect("golden spec readable");
    let golden: Golden = toml::from_str(&text).expect("golden spec parses");
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    Some((base.join(&golden.config), golden))
}

#[test]
fn published_weekly_rates() {
    let Some((config, golden)) = spec() else {
        eprintln!("WNVCAST_GOLDEN not set; skipping");
        return;
    };
    let Some(s) = golden.severity else { return };
    let cfg = RunConfig::load(config).unwrap();
    let county = cfg.load_county().unwrap();
    let report = retrospective(&county, &s.training_years, s.target_year, &cfg.forecast, None).unwrap();
    for (week, want) in s.weeks.iter().zip(&s.lambda) {
        let got = report.fold.forecast.predicted(*week).unwrap();
        assert!((got - want).abs() <= s.tolerance, "week {week}: {got:.3} vs {want}");
    }
}

#[test]
fn published_trend() {
    let Some((config, golden)) = spec() else {
        eprintln!("WNVCAST_GOLDEN not set; skipping");
        return;
    };
    let Some(t) = golden.trend else { return };
    let cfg = RunConfig::load(config).unwrap();
    let county = cfg.load_county().unwrap();
    let trajs = simulate_years(&county.params, &county.temps, &county.years(), &cfg.forecast).unwrap();
    let training = if cfg.trend.training_years.is_empty() {
        county.case_years()
    } else {
        cfg.trend.training_years.clone()
    };
    let rate = fit_rate_model(&training, &trajs, &county.cases, &cfg.forecast).unwrap();
    let series = annual_risky_days(&rate, &trajs, cfg.forecast.risky_threshold).unwrap();
    let r = trend_report(&series, cfg.trend.continuity_correction).unwrap();
    assert!((r.ols.slope - t.ols_slope).abs() <= t.slope_tolerance, "{:?}", r.ols);
    assert!((r.mann_kendall.sen_slope - t.sen_slope).abs() <= t.slope_tolerance, "{:?}", r.mann_kendall);
    assert!((r.spearman.rho - t.spearman_rho).abs() <= 0.1, "{:?}", r.spearman);
    for (got, want) in [(r.ols.p, t.ols_p), (r.spearman.p, t.spearman_p), (r.mann_kendall.p, t.mann_kendall_p)] {
        assert!((got - want).abs() <= t.p_tolerance, "p {got} vs {want}");
    }
}
