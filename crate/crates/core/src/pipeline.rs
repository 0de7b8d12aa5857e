//! The forecasting chain for one county: simulate every year, fit the onset
//! density and the rate surface on training years, then forecast a target
//! year from its hybrid observed/climatological temperatures.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calendar::{days_in_year, WeekConvention};
use crate::error::{Error, Result};
use crate::eval::{BinScheme, NrmseNormalizer};
use crate::ingest::{build_climatology, hybrid_forecast_temps, reference_years, CaseSeries, TemperatureSeries};
use crate::model::{simulate, CompartmentState, ModelParams, SimulationTrajectory, ThermalMetric};
use crate::onset::{
    build_onset_samples, classify_days, fit_onset_pdf, hdr_region, DensitySurface, IntervalLength, OnsetForecast,
    OnsetSample, RiskRegion,
};
use crate::severity::{
    count_risky_days, daily_risk, fit_rate_surface, rate_training_data, weekly_rates, DailyRiskSeries, RateSettings,
    RateSurface,
};

/// Every tunable of the fit/forecast/score chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastSettings {
    pub init: CompartmentState,
    pub dt: f64,
    pub metric: ThermalMetric,
    pub week_convention: WeekConvention,
    /// In-season reporting weeks (inclusive).
    pub first_week: u32,
    pub last_week: u32,
    /// Days between infection and case reporting.
    pub delay_days: u32,
    pub alphas: Vec<f64>,
    pub onset_grid: usize,
    pub interval_length: IntervalLength,
    pub rate: RateSettings,
    /// Let years without cases add background mass to the rate surface.
    pub include_zero_case_years: bool,
    /// Last observed day of the target year; later days use climatology.
    pub cutoff_day: u32,
    pub climatology_years: usize,
    pub bins: BinScheme,
    pub normalizer: NrmseNormalizer,
    /// Compute NRMSE over case weeks only instead of every in-season week
    /// from the observed onset on.
    pub nrmse_case_weeks_only: bool,
    pub risky_threshold: f64,
}

impl Default for ForecastSettings {
    fn default() -> Self {
        Self {
            init: CompartmentState::seasonal_default(),
            dt: 0.1,
            metric: ThermalMetric::YearToDate,
            week_convention: WeekConvention::SevenDayBlocks,
            first_week: 1,
            last_week: 52,
            delay_days: 14,
            alphas: vec![0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99],
            onset_grid: 256,
            interval_length: IntervalLength::Hull,
            rate: RateSettings::default(),
            include_zero_case_years: false,
            cutoff_day: 140,
            climatology_years: 5,
            bins: BinScheme::default(),
            normalizer: NrmseNormalizer::Mean,
            nrmse_case_weeks_only: false,
            risky_threshold: 1.0,
        }
    }
}

impl ForecastSettings {
    pub fn weeks(&self) -> std::ops::RangeInclusive<u32> {
        self.first_week..=self.last_week
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
            return Err(Error::config("alphas", "every alpha must lie in (0, 1)"));
        }
        if self.first_week < 1 || self.last_week > 53 || self.first_week > self.last_week {
            return Err(Error::config("first_week/last_week", "need 1 <= first <= last <= 53"));
        }
        if self.onset_grid < 8 || self.rate.grid_size < 8 {
            return Err(Error::config("grid_size", "at least 8 nodes per axis"));
        }
        if !(self.rate.interval_days > 0.0) {
            return Err(Error::config("rate.interval_days", "must be positive"));
        }
        if self.climatology_years == 0 {
            return Err(Error::config("climatology_years", "must be at least 1"));
        }
        self.bins.validate()?;
        self.init.validate()?;
        Ok(())
    }

    /// Alphas in ascending order without duplicates.
    pub fn sorted_alphas(&self) -> Vec<f64> {
        let mut a = self.alphas.clone();
        a.sort_by(f64::total_cmp);
        a.dedup();
        a
    }
}

/// One county's inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct County {
    pub params: ModelParams,
    pub temps: TemperatureSeries,
    pub cases: CaseSeries,
}

impl County {
    /// Years with a complete temperature record.
    pub fn years(&self) -> Vec<i32> {
        self.temps.full_years()
    }

    /// Years with a complete temperature record and a case record (zero
    /// counts included).
    pub fn evaluable_years(&self) -> Vec<i32> {
        let recorded = self.cases.years();
        self.years().into_iter().filter(|y| recorded.contains(y)).collect()
    }

    pub fn case_years(&self) -> Vec<i32> {
        let full = self.years();
        self.cases.case_years().into_iter().filter(|y| full.contains(y)).collect()
    }

    /// Observed onset day (first day of the first case week).
    pub fn onset_day(&self, year: i32, settings: &ForecastSettings) -> Option<u32> {
        crate::onset::onset_day(&self.cases, year, settings.week_convention)
    }
}

/// Simulates each year independently from `settings.init` on January 1.
pub fn simulate_years(
    params: &ModelParams,
    temps: &TemperatureSeries,
    years: &[i32],
    settings: &ForecastSettings,
) -> Result<BTreeMap<i32, SimulationTrajectory>> {
    years
        .par_iter()
        .map(|&y| {
            let t = temps.year(y)?;
            let traj = simulate(params, &t, &settings.init, settings.dt, settings.metric)?;
            Ok((y, traj))
        })
        .collect()
}

/// Temperatures for forecasting `target`: observations through
/// `cutoff_day`, then the mean of the reference years.
pub fn hybrid_temperatures(temps: &TemperatureSeries, target: i32, settings: &ForecastSettings) -> Result<TemperatureSeries> {
    let others: Vec<i32> = temps.full_years().into_iter().filter(|&y| y != target).collect();
    let refs = reference_years(target, &others, settings.climatology_years);
    let clim = build_climatology(temps, &refs)?;
    let days = settings.cutoff_day.min(days_in_year(target)) as usize;
    if days == 0 {
        return Ok(clim.year_series(&temps.location_id, target));
    }
    let observed = temps.year_prefix(target, days)?;
    Ok(hybrid_forecast_temps(&observed, &clim, settings.cutoff_day)?)
}

pub fn forecast_trajectory(
    params: &ModelParams,
    temps: &TemperatureSeries,
    target: i32,
    settings: &ForecastSettings,
) -> Result<SimulationTrajectory> {
    let t = hybrid_temperatures(temps, target, settings)?;
    Ok(simulate(params, &t, &settings.init, settings.dt, settings.metric)?)
}

/// Onset density with its risk regions (ascending alpha).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnsetModel {
    pub samples: Vec<OnsetSample>,
    pub surface: DensitySurface,
    pub regions: Vec<RiskRegion>,
}

pub fn fit_onset_model(
    years: &[i32],
    trajectories: &BTreeMap<i32, SimulationTrajectory>,
    cases: &CaseSeries,
    settings: &ForecastSettings,
) -> Result<OnsetModel> {
    let samples = build_onset_samples(years, trajectories, cases, settings.delay_days, settings.week_convention)?;
    let surface = fit_onset_pdf(&samples, settings.onset_grid)?;
    let regions = settings
        .sorted_alphas()
        .into_iter()
        .map(|a| hdr_region(&surface, a))
        .collect::<std::result::Result<_, _>>()?;
    Ok(OnsetModel {
        samples,
        surface,
        regions,
    })
}

pub fn fit_rate_model(
    years: &[i32],
    trajectories: &BTreeMap<i32, SimulationTrajectory>,
    cases: &CaseSeries,
    settings: &ForecastSettings,
) -> Result<RateSurface> {
    let data = rate_training_data(
        years,
        trajectories,
        cases,
        settings.delay_days,
        settings.week_convention,
        settings.weeks(),
        settings.include_zero_case_years,
    )?;
    Ok(fit_rate_surface(&data.cases, &data.background, settings.delay_days, &settings.rate)?)
}

/// Both fitted models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModels {
    pub training_years: Vec<i32>,
    pub onset: OnsetModel,
    pub rate: RateSurface,
}

pub fn fit_models(
    years: &[i32],
    trajectories: &BTreeMap<i32, SimulationTrajectory>,
    cases: &CaseSeries,
    settings: &ForecastSettings,
) -> Result<FittedModels> {
    Ok(FittedModels {
        training_years: years.to_vec(),
        onset: fit_onset_model(years, trajectories, cases, settings)?,
        rate: fit_rate_model(years, trajectories, cases, settings)?,
    })
}

/// Everything forecast for one target year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearForecast {
    pub year: i32,
    /// One onset forecast per alpha (ascending), in reporting days.
    pub onset: Vec<OnsetForecast>,
    pub risk: DailyRiskSeries,
    /// Predicted count per in-season week.
    pub weekly: Vec<(u32, f64)>,
    pub risky_days: usize,
}

impl YearForecast {
    pub fn predicted(&self, week: u32) -> Option<f64> {
        self.weekly.iter().find(|(w, _)| *w == week).map(|&(_, l)| l)
    }
}

/// Classifies the forecast trajectory against each risk region and
/// evaluates the rate surface. Onset timelines are computed in infection
/// days and moved forward by the reporting delay. `onset_gate` marks the
/// first post-onset day of the risk series.
pub fn forecast_year(
    models: &FittedModels,
    trajectory: &SimulationTrajectory,
    onset_gate: Option<u32>,
    settings: &ForecastSettings,
) -> Result<YearForecast> {
    let year = trajectory.year();
    let n = days_in_year(year);
    let mut onset = Vec::with_capacity(models.onset.regions.len());
    for region in &models.onset.regions {
        let f = classify_days(&models.onset.surface, region, trajectory, (1, n))?;
        onset.push(f.shifted(settings.delay_days, n));
    }
    let gate = onset_gate
        .or_else(|| onset.first().and_then(|f| f.interval.map(|(a, _)| a)))
        .unwrap_or(1);
    let risk = daily_risk(&models.rate, trajectory, gate);
    let risky_days = count_risky_days(&risk, settings.risky_threshold);
    let weekly = settings
        .weeks()
        .zip(weekly_rates(&models.rate, trajectory, settings.week_convention, settings.weeks()))
        .collect();
    Ok(YearForecast {
        year,
        onset,
        risk,
        weekly,
        risky_days,
    })
}
