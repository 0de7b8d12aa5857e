//! Command-line front end. Every subcommand reads one run config, writes its
//! artifacts plus `manifest.json` into the output directory and maps errors
//! to exit codes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, OUTPUT_DIR_ENV};
use crate::error::{exit_code, Error, Result};
use crate::eval::{
    loyo_cv, loyo_cv_calibrated, retrospective, write_intervals_csv, write_weekly_csv, CvReport, RetroReport,
};
use crate::manifest::OutputDir;
use crate::model::{calibrate_carrying_capacity, write_trajectory_csv, SimulationTrajectory};
use crate::onset::{write_timeline_csv, OnsetSample, RegionExport};
use crate::pipeline::{
    fit_models, fit_onset_model, fit_rate_model, forecast_trajectory, forecast_year, simulate_years, County,
    YearForecast,
};
use crate::severity::write_risk_csv;
use crate::trend::{annual_risky_days, trend_report, TrendReport};
use crate::{kde, plot};

#[derive(Debug, Parser)]
#[command(name = "wnvcast", version, about = "Temperature-driven West Nile virus spillover forecasts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long, short)]
    pub config: PathBuf,
    /// Output directory; beats the config and the environment.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Config override, `dotted.key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate the inputs, then summarize them.
    IngestCheck(Common),
    /// Simulate the transmission model for every full year.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Restrict to these years.
        #[arg(long)]
        year: Vec<i32>,
    },
    /// Estimate the mosquito carrying capacity from reported cases.
    CalibrateK(Common),
    /// Fit the onset density and its risk regions.
    FitOnset(Common),
    /// Fit the case-rate surface.
    FitRate(Common),
    /// Forecast one season from earlier years.
    Forecast {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        target_year: Option<i32>,
    },
    /// Leave-one-year-out cross-validation.
    EvaluateLoyo(Common),
    /// Forecast and score one year trained only on earlier years.
    EvaluateRetro {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        target_year: Option<i32>,
    },
    /// Trend in the annual number of high-risk days.
    Trend(Common),
    /// Render figures from the reports already in the output directory.
    Plot(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::IngestCheck(_) => "ingest-check",
            Command::Simulate { .. } => "simulate",
            Command::CalibrateK(_) => "calibrate-k",
            Command::FitOnset(_) => "fit-onset",
            Command::FitRate(_) => "fit-rate",
            Command::Forecast { .. } => "forecast",
            Command::EvaluateLoyo(_) => "evaluate-loyo",
            Command::EvaluateRetro { .. } => "evaluate-retro",
            Command::Trend(_) => "trend",
            Command::Plot(_) => "plot",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::IngestCheck(c)
            | Command::CalibrateK(c)
            | Command::FitOnset(c)
            | Command::FitRate(c)
            | Command::EvaluateLoyo(c)
            | Command::Trend(c)
            | Command::Plot(c) => c,
            Command::Simulate { common, .. }
            | Command::Forecast { common, .. }
            | Command::EvaluateRetro { common, .. } => common,
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit_code::CONFIG } else { exit_code::OK };
        }
    };
    match execute(&cli.command) {
        Ok(()) => exit_code::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

struct Session {
    cfg: RunConfig,
    out: OutputDir,
    config_text: String,
}

impl Session {
    fn open(common: &Common) -> Result<Self> {
        let cfg = RunConfig::load_with_overrides(&common.config, &common.overrides)?;
        let root = common.output_dir.clone().unwrap_or_else(|| cfg.output_dir());
        log::info!("writing to {} (override with --output-dir or {OUTPUT_DIR_ENV})", root.display());
        let config_text = cfg.to_toml_string()?;
        Ok(Self {
            out: OutputDir::create(root)?,
            cfg,
            config_text,
        })
    }

    fn finish(self, command: &str) -> Result<()> {
        let mut inputs: Vec<&Path> = vec![&self.cfg.paths.temperature, &self.cfg.paths.cases];
        if let Some(t) = &self.cfg.paths.traits {
            inputs.push(t);
        }
        let inputs: Vec<&Path> = inputs.into_iter().filter(|p| p.is_file()).collect();
        self.out.finish(command, &self.config_text, &inputs)?;
        Ok(())
    }

    /// The county with `K` calibrated first when the config asks for it.
    fn county(&self, training_years: Option<&[i32]>) -> Result<County> {
        let mut county = self.cfg.load_county()?;
        if self.cfg.calibrate {
            let mut cs = self.cfg.calibration_settings();
            if let Some(years) = training_years {
                cs.years = years.to_vec();
            }
            let est = calibrate_carrying_capacity(&county.params, &county.temps, &county.cases, &cs)?;
            log::info!("calibrated K = {:.4e}", est.k);
            county.params = county.params.with_carrying_capacity(est.k);
        }
        Ok(county)
    }

    fn target_year(&self, flag: Option<i32>, county: &County) -> Result<i32> {
        match flag.or(self.cfg.target_year) {
            Some(y) => Ok(y),
            None => county
                .evaluable_years()
                .last()
                .copied()
                .ok_or_else(|| Error::config("target_year", "not set and no evaluable year")),
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    let mut s = Session::open(command.common())?;
    match command {
        Command::IngestCheck(_) => ingest_check(&mut s)?,
        Command::Simulate { year, .. } => simulate(&mut s, year)?,
        Command::CalibrateK(_) => calibrate(&mut s)?,
        Command::FitOnset(_) => fit_onset(&mut s)?,
        Command::FitRate(_) => fit_rate(&mut s)?,
        Command::Forecast { target_year, .. } => forecast(&mut s, *target_year)?,
        Command::EvaluateLoyo(_) => evaluate_loyo(&mut s)?,
        Command::EvaluateRetro { target_year, .. } => evaluate_retro(&mut s, *target_year)?,
        Command::Trend(_) => trend(&mut s)?,
        Command::Plot(_) => plot_reports(&mut s)?,
    }
    s.finish(command.name())
}

#[derive(Debug, Serialize)]
struct YearSummary {
    year: i32,
    total_cases: u64,
    first_case_week: Option<u32>,
    onset_day: Option<u32>,
    mean_temperature: f64,
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    location_id: String,
    temperature_days: usize,
    first_date: String,
    last_date: String,
    full_years: Vec<i32>,
    case_record_years: Vec<i32>,
    evaluable_years: Vec<i32>,
    case_years: Vec<i32>,
    years: Vec<YearSummary>,
}

fn ingest_check(s: &mut Session) -> Result<()> {
    let county = s.cfg.load_county()?;
    let temps = &county.temps;
    let mut years = Vec::new();
    for y in county.evaluable_years() {
        let t = temps.year(y)?;
        years.push(YearSummary {
            year: y,
            total_cases: county.cases.year_total(y),
            first_case_week: county.cases.first_case_week(y),
            onset_day: county.onset_day(y, &s.cfg.forecast),
            mean_temperature: t.temps.iter().sum::<f64>() / t.len() as f64,
        });
    }
    let summary = IngestSummary {
        location_id: temps.location_id.clone(),
        temperature_days: temps.len(),
        first_date: temps.start_date.to_string(),
        last_date: temps.end_date().map(|d| d.to_string()).unwrap_or_default(),
        full_years: county.years(),
        case_record_years: county.cases.years(),
        evaluable_years: county.evaluable_years(),
        case_years: county.case_years(),
        years,
    };
    println!(
        "{}: {} days of temperature, {} evaluable years, {} with cases",
        summary.location_id,
        summary.temperature_days,
        summary.evaluable_years.len(),
        summary.case_years.len()
    );
    s.out.write_json("ingest_summary.json", &summary)?;
    Ok(())
}

fn simulate(s: &mut Session, only: &[i32]) -> Result<()> {
    let county = s.county(None)?;
    let years: Vec<i32> = if only.is_empty() {
        county.years()
    } else {
        only.to_vec()
    };
    let trajs = simulate_years(&county.params, &county.temps, &years, &s.cfg.forecast)?;
    for (y, traj) in &trajs {
        s.out
            .write_with(&format!("trajectories/{y}.csv"), |buf| write_trajectory_csv(traj, buf))?;
    }
    let totals: BTreeMap<i32, f64> = trajs
        .iter()
        .map(|(&y, t)| (y, t.incidence.iter().sum()))
        .collect();
    s.out.write_json("simulated_incidence.json", &totals)?;
    println!("simulated {} years", trajs.len());
    Ok(())
}

fn calibrate(s: &mut Session) -> Result<()> {
    let county = s.cfg.load_county()?;
    let est = calibrate_carrying_capacity(&county.params, &county.temps, &county.cases, &s.cfg.calibration_settings())?;
    println!("K = {:.6e} ({:?})", est.k, est.method);
    s.out.write_json("carrying_capacity.json", &est)?;
    Ok(())
}

/// Trajectories for every evaluable year plus the subset used for fitting.
fn training_set(s: &Session, county: &County) -> Result<(Vec<i32>, BTreeMap<i32, SimulationTrajectory>)> {
    let years = if s.cfg.training_years.is_empty() {
        county.evaluable_years()
    } else {
        s.cfg.training_years.clone()
    };
    let trajs = simulate_years(&county.params, &county.temps, &years, &s.cfg.forecast)?;
    Ok((years, trajs))
}

#[derive(Debug, Serialize, Deserialize)]
struct OnsetModelOutput {
    training_years: Vec<i32>,
    samples: Vec<OnsetSample>,
    bandwidth: kde::Bandwidth,
    grid: kde::Grid2,
    regions: Vec<RegionExport>,
}

fn fit_onset(s: &mut Session) -> Result<()> {
    let county = s.county(None)?;
    let (years, trajs) = training_set(s, &county)?;
    let model = fit_onset_model(&years, &trajs, &county.cases, &s.cfg.forecast)?;
    let points: Vec<(f64, f64)> = model.samples.iter().map(|p| (p.m, p.t)).collect();
    let svg = plot::surface_svg(
        &model.surface.grid,
        &model.surface.values,
        &model.regions,
        &points,
        "Onset density and risk regions",
    );
    s.out.write_bytes("onset_density.svg", svg.as_bytes())?;
    s.out.write_json(
        "onset_model.json",
        &OnsetModelOutput {
            training_years: years,
            samples: model.samples,
            bandwidth: model.surface.bandwidth,
            grid: model.surface.grid,
            regions: model.regions.iter().map(|r| r.to_export()).collect(),
        },
    )?;
    for r in &model.regions {
        println!("alpha {:.2}: {} cells, threshold {:.4e}", r.alpha, r.cell_count(), r.threshold);
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct RateModelOutput {
    training_years: Vec<i32>,
    case_points: usize,
    background_days: usize,
    bandwidth: kde::Bandwidth,
    background_bandwidth: kde::Bandwidth,
    grid: kde::Grid2,
    peak_m: f64,
    peak_t: f64,
    peak_rate: f64,
}

fn fit_rate(s: &mut Session) -> Result<()> {
    let county = s.county(None)?;
    let (years, trajs) = training_set(s, &county)?;
    let rate = fit_rate_model(&years, &trajs, &county.cases, &s.cfg.forecast)?;
    let (i, j) = rate.argmax();
    let out = RateModelOutput {
        training_years: years,
        case_points: rate.cases.len(),
        background_days: rate.background.len(),
        bandwidth: rate.bandwidth,
        background_bandwidth: rate.background_bandwidth,
        grid: rate.grid,
        peak_m: rate.grid.m(i),
        peak_t: rate.grid.t(j),
        peak_rate: rate.node_value(i, j),
    };
    println!("peak rate {:.3} at M = {:.4e}, T = {:.3}", out.peak_rate, out.peak_m, out.peak_t);
    s.out.write_json("rate_model.json", &out)?;
    s.out.write_with("rate_grid.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["m", "t", "lambda"])?;
        for j in 0..rate.grid.nt {
            for i in 0..rate.grid.nm {
                w.serialize((rate.grid.m(i), rate.grid.t(j), rate.node_value(i, j)))?;
            }
        }
        w.flush()?;
        Ok(())
    })?;
    let points: Vec<(f64, f64)> = rate.cases.iter().map(|c| (c.m, c.t)).collect();
    let svg = plot::surface_svg(&rate.grid, &rate.values, &[], &points, "Expected cases per week");
    s.out.write_bytes("rate_surface.svg", svg.as_bytes())?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ForecastOutput {
    pub location_id: String,
    pub training_years: Vec<i32>,
    pub carrying_capacity: f64,
    pub forecast: YearForecast,
}

fn forecast(s: &mut Session, flag: Option<i32>) -> Result<()> {
    let base = s.cfg.load_county()?;
    let target = s.target_year(flag, &base)?;
    let training = s.cfg.training_years_for(&base, target)?;
    if training.is_empty() {
        return Err(Error::config("training_years", format!("no evaluable years before {target}")));
    }
    let county = s.county(Some(&training))?;
    let settings = &s.cfg.forecast;
    let trajs = simulate_years(&county.params, &county.temps, &training, settings)?;
    let models = fit_models(&training, &trajs, &county.cases, settings)?;
    let traj = forecast_trajectory(&county.params, &county.temps, target, settings)?;
    // The observed onset is unknown at forecast time.
    let fc = forecast_year(&models, &traj, None, settings)?;
    for f in &fc.onset {
        let alpha = (f.alpha * 100.0).round() as u32;
        s.out
            .write_with(&format!("timeline_{target}_a{alpha:03}.csv"), |buf| write_timeline_csv(f, buf))?;
        match f.interval {
            Some((a, b)) => println!("alpha {:.2}: onset window days {a}-{b}", f.alpha),
            None => println!("alpha {:.2}: no risky days", f.alpha),
        }
    }
    s.out.write_with(&format!("risk_{target}.csv"), |buf| write_risk_csv(&fc.risk, buf))?;
    s.out.write_bytes(
        &format!("timeline_{target}.svg"),
        plot::onset_timeline_svg(&fc.onset, None, &format!("Onset forecast {target}")).as_bytes(),
    )?;
    s.out.write_bytes(
        &format!("risk_{target}.svg"),
        plot::risk_strip_svg(&fc.risk, &format!("Daily expected cases {target}")).as_bytes(),
    )?;
    println!("{} days with lambda >= {}", fc.risky_days, settings.risky_threshold);
    s.out.write_json(
        &format!("forecast_{target}.json"),
        &ForecastOutput {
            location_id: county.temps.location_id.clone(),
            training_years: training,
            carrying_capacity: county.params.carrying_capacity,
            forecast: fc,
        },
    )?;
    Ok(())
}

fn evaluate_loyo(s: &mut Session) -> Result<()> {
    let county = s.cfg.load_county()?;
    let report = if s.cfg.calibrate {
        loyo_cv_calibrated(&county, &s.cfg.forecast, &s.cfg.calibration_settings())?
    } else {
        loyo_cv(&county, &s.cfg.forecast)?
    };
    for a in &report.aggregates {
        println!(
            "alpha {:.2}: beta {:.1}%, mean length {:.1} days",
            a.alpha, a.beta, a.mean_length
        );
    }
    let ls = &report.summary.mean_log_score;
    println!(
        "mean log score: model {:?}, null {:?}, negative binomial {:?}",
        ls.eco_epi, ls.null_poisson, ls.negative_binomial
    );
    write_loyo(&mut s.out, &report)
}

fn write_loyo(out: &mut OutputDir, report: &CvReport) -> Result<()> {
    out.write_with("loyo_intervals.csv", |buf| write_intervals_csv(&report.folds, buf))?;
    out.write_with("loyo_weekly.csv", |buf| write_weekly_csv(&report.folds, buf))?;
    out.write_bytes(
        "loyo_nrmse.svg",
        plot::nrmse_bars_svg(&report.folds, "Weekly NRMSE by held-out year").as_bytes(),
    )?;
    out.write_json("cv_report.json", report)?;
    Ok(())
}

fn evaluate_retro(s: &mut Session, flag: Option<i32>) -> Result<()> {
    let county = s.cfg.load_county()?;
    let target = s.target_year(flag, &county)?;
    let training = s.cfg.training_years_for(&county, target)?;
    let calibration = s.cfg.calibrate.then(|| s.cfg.calibration_settings());
    let report = retrospective(&county, &training, target, &s.cfg.forecast, calibration.as_ref())?;
    write_retro(&mut s.out, &report)
}

fn write_retro(out: &mut OutputDir, report: &RetroReport) -> Result<()> {
    let f = &report.fold;
    for i in &f.intervals {
        println!(
            "alpha {:.2}: [{}, {}] observed {} {}",
            i.alpha,
            i.start.map_or("-".into(), |d| d.to_string()),
            i.end.map_or("-".into(), |d| d.to_string()),
            i.true_onset,
            if i.captured { "captured" } else { "missed" }
        );
    }
    let y = f.year;
    out.write_with(&format!("retro_{y}_intervals.csv"), |buf| write_intervals_csv([f], buf))?;
    out.write_with(&format!("retro_{y}_weekly.csv"), |buf| write_weekly_csv([f], buf))?;
    out.write_bytes(
        &format!("retro_{y}_timeline.svg"),
        plot::onset_timeline_svg(&f.forecast.onset, f.observed_onset, &format!("Retrospective onset {y}")).as_bytes(),
    )?;
    out.write_json(&format!("retro_{y}.json"), report)?;
    Ok(())
}

fn trend(s: &mut Session) -> Result<()> {
    let county = s.county(None)?;
    let settings = &s.cfg.forecast;
    let all_years = county.years();
    let trajs = simulate_years(&county.params, &county.temps, &all_years, settings)?;
    let training = if s.cfg.trend.training_years.is_empty() {
        county.case_years()
    } else {
        s.cfg.trend.training_years.clone()
    };
    let rate = fit_rate_model(&training, &trajs, &county.cases, settings)?;
    let series = annual_risky_days(&rate, &trajs, settings.risky_threshold)?;
    let report = trend_report(&series, s.cfg.trend.continuity_correction)?;
    println!(
        "OLS slope {:.3} days/yr (p = {:.3e}); Spearman rho {:.3} (p = {:.3e}); Mann-Kendall p = {:.3e}, Sen slope {:.3}",
        report.ols.slope,
        report.ols.p,
        report.spearman.rho,
        report.spearman.p,
        report.mann_kendall.p,
        report.mann_kendall.sen_slope
    );
    s.out.write_with("annual_risky_days.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["year", "risky_days"])?;
        for (y, c) in series.years.iter().zip(&series.counts) {
            w.serialize((y, c))?;
        }
        w.flush()?;
        Ok(())
    })?;
    s.out
        .write_bytes("trend.svg", plot::trend_svg(&report, "Annual high-risk days").as_bytes())?;
    s.out.write_json("trend_report.json", &report)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Serialize(format!("{}: {e}", path.display())))
}

fn plot_reports(s: &mut Session) -> Result<()> {
    let root = s.out.root().to_path_buf();
    let mut names: Vec<String> = std::fs::read_dir(&root)
        .map_err(|e| Error::io(format!("listing {}", root.display()), e))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".json"))
        .collect();
    names.sort();
    let mut rendered = 0;
    for name in names {
        let path = root.join(&name);
        if name == "cv_report.json" {
            let report: CvReport = read_json(&path)?;
            s.out.write_bytes(
                "figures/loyo_nrmse.svg",
                plot::nrmse_bars_svg(&report.folds, "Weekly NRMSE by held-out year").as_bytes(),
            )?;
            for f in &report.folds {
                s.out.write_bytes(
                    &format!("figures/loyo_timeline_{}.svg", f.year),
                    plot::onset_timeline_svg(&f.forecast.onset, f.observed_onset, &format!("Held-out {}", f.year))
                        .as_bytes(),
                )?;
            }
            rendered += 1;
        } else if name == "trend_report.json" {
            let report: TrendReport = read_json(&path)?;
            s.out
                .write_bytes("figures/trend.svg", plot::trend_svg(&report, "Annual high-risk days").as_bytes())?;
            rendered += 1;
        } else if name.starts_with("forecast_") {
            let fc: ForecastOutput = read_json(&path)?;
            let y = fc.forecast.year;
            s.out.write_bytes(
                &format!("figures/timeline_{y}.svg"),
                plot::onset_timeline_svg(&fc.forecast.onset, None, &format!("Onset forecast {y}")).as_bytes(),
            )?;
            s.out.write_bytes(
                &format!("figures/risk_{y}.svg"),
                plot::risk_strip_svg(&fc.forecast.risk, &format!("Daily expected cases {y}")).as_bytes(),
            )?;
            rendered += 1;
        } else if name.starts_with("retro_") {
            let report: RetroReport = read_json(&path)?;
            let f = &report.fold;
            s.out.write_bytes(
                &format!("figures/retro_{}.svg", f.year),
                plot::onset_timeline_svg(&f.forecast.onset, f.observed_onset, &format!("Retrospective {}", f.year))
                    .as_bytes(),
            )?;
            rendered += 1;
        }
    }
    if rendered == 0 {
        return Err(Error::Serialize(format!(
            "no reports to plot in {} (run forecast, evaluate-loyo, evaluate-retro or trend first)",
            root.display()
        )));
    }
    println!("rendered figures from {rendered} reports");
    Ok(())
}
