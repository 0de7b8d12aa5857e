use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baseline::{fit_baseline, BaselineKind, BaselineModel};
use super::metrics::{
    aggregate_intervals, ave_summary, log_score, nrmse, score_interval, AggregateIntervalScore, AveSummary,
    IntervalScore, WeeklyScore,
};
use super::EvalError;
use crate::error::Result;
use crate::model::{calibrate_carrying_capacity, CalibrationSettings, SimulationTrajectory};
use crate::pipeline::{fit_models, forecast_trajectory, forecast_year, County, ForecastSettings, YearForecast};

/// The same quantity for the rate model and both baselines.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PerModel<T> {
    pub eco_epi: T,
    pub null_poisson: T,
    pub negative_binomial: T,
}

impl<T> PerModel<T> {
    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> PerModel<U> {
        PerModel {
            eco_epi: f(&self.eco_epi),
            null_poisson: f(&self.null_poisson),
            negative_binomial: f(&self.negative_binomial),
        }
    }
}

/// Outcome of forecasting one held-out (or target) year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub year: i32,
    pub training_years: Vec<i32>,
    /// Carrying capacity the fold's simulations used.
    pub carrying_capacity: f64,
    pub observed_onset: Option<u32>,
    pub total_cases: u64,
    /// One per alpha (ascending); empty when the year had no cases.
    pub intervals: Vec<IntervalScore>,
    /// Scores on weeks with at least one reported case.
    pub weekly: PerModel<Vec<WeeklyScore>>,
    pub nrmse: PerModel<Option<f64>>,
    pub baselines: (BaselineModel, BaselineModel),
    /// `Σ λ` over the in-season days of the forecast.
    pub seasonal_risk: f64,
    pub risky_days: usize,
    pub forecast: YearForecast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub scored_weeks: usize,
    pub mean_log_score: PerModel<Option<f64>>,
    /// Mean of per-year NRMSE over years where it is defined.
    pub mean_nrmse: PerModel<Option<f64>>,
    pub ave: PerModel<Option<AveSummary>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroCaseEntry {
    pub year: i32,
    pub seasonal_sum: f64,
    /// Strictly below the median of the case years' sums.
    pub below_median: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroCaseReport {
    pub case_year_sums: Vec<(i32, f64)>,
    pub median_case_sum: f64,
    pub zero_case_years: Vec<ZeroCaseEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub location_id: String,
    pub alphas: Vec<f64>,
    pub folds: Vec<FoldResult>,
    pub aggregates: Vec<AggregateIntervalScore>,
    pub summary: ModelSummary,
    pub zero_case_check: Option<ZeroCaseReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetroReport {
    pub location_id: String,
    pub alphas: Vec<f64>,
    pub fold: FoldResult,
    pub aggregates: Vec<AggregateIntervalScore>,
    pub summary: ModelSummary,
}

/// Forecasts `target` from models fitted on `training_years` and scores it.
/// `trajectories` must hold observed-temperature runs of the training years;
/// nothing about the target year other than its temperatures up to the
/// cutoff enters the forecast.
pub fn run_fold(
    county: &County,
    trajectories: &BTreeMap<i32, SimulationTrajectory>,
    training_years: &[i32],
    target: i32,
    settings: &ForecastSettings,
) -> Result<FoldResult> {
    let cases = &county.cases;
    let models = fit_models(training_years, trajectories, cases, settings)?;
    let traj = forecast_trajectory(&county.params, &county.temps, target, settings)?;
    let observed_onset = county.onset_day(target, settings);
    let forecast = forecast_year(&models, &traj, observed_onset, settings)?;

    let intervals = match observed_onset {
        Some(day) => forecast
            .onset
            .iter()
            .map(|f| score_interval(f, day, settings.interval_length))
            .collect(),
        None => Vec::new(),
    };

    let training_counts: Vec<u32> = training_years
        .iter()
        .flat_map(|&y| cases.weekly_counts(y, settings.weeks()))
        .collect();
    let null = fit_baseline(BaselineKind::NullPoisson, &training_counts)?;
    let nb = fit_baseline(BaselineKind::NegativeBinomial, &training_counts)?;

    let observed = cases.weekly_counts(target, settings.weeks());
    let predicted: Vec<f64> = forecast.weekly.iter().map(|&(_, l)| l).collect();
    let mut weekly = PerModel::<Vec<WeeklyScore>>::default();
    let onset_week = cases.first_case_week(target);
    let mut nrmse_idx = Vec::new();
    for (i, (w, &obs)) in settings.weeks().zip(&observed).enumerate() {
        let in_scope = match onset_week {
            Some(ow) if settings.nrmse_case_weeks_only => obs > 0 && w >= ow,
            Some(ow) => w >= ow,
            None => false,
        };
        if in_scope {
            nrmse_idx.push(i);
        }
        if obs == 0 {
            continue;
        }
        let score = |pred: f64, ls: f64| WeeklyScore {
            year: target,
            week: w,
            predicted: pred,
            observed: obs,
            log_score: ls,
            abs_error: (pred - obs as f64).abs(),
        };
        weekly.eco_epi.push(score(predicted[i], log_score(predicted[i], obs, &settings.bins)));
        weekly.null_poisson.push(score(null.mean, null.log_score(obs, &settings.bins)));
        weekly.negative_binomial.push(score(nb.mean, nb.log_score(obs, &settings.bins)));
    }
    let obs_scope: Vec<f64> = nrmse_idx.iter().map(|&i| observed[i] as f64).collect();
    let score_nrmse = |pred: &dyn Fn(usize) -> f64| -> Option<f64> {
        let p: Vec<f64> = nrmse_idx.iter().map(|&i| pred(i)).collect();
        nrmse(&p, &obs_scope, settings.normalizer).ok()
    };
    let nrmse = PerModel {
        eco_epi: score_nrmse(&|i| predicted[i]),
        null_poisson: score_nrmse(&|_| null.mean),
        negative_binomial: score_nrmse(&|_| nb.mean),
    };

    let seasonal_risk = seasonal_sum(&forecast, settings);
    Ok(FoldResult {
        year: target,
        training_years: training_years.to_vec(),
        carrying_capacity: county.params.carrying_capacity,
        observed_onset,
        total_cases: cases.year_total(target),
        intervals,
        weekly,
        nrmse,
        baselines: (null, nb),
        seasonal_risk,
        risky_days: forecast.risky_days,
        forecast,
    })
}

fn seasonal_sum(forecast: &YearForecast, settings: &ForecastSettings) -> f64 {
    let conv = settings.week_convention;
    let first = conv.week_days(forecast.year, settings.first_week).map(|(a, _)| a);
    let last = conv.week_days(forecast.year, settings.last_week).map(|(_, b)| b);
    match (first, last) {
        (Some(a), Some(b)) => forecast.risk.seasonal_sum(a..=b),
        _ => 0.0,
    }
}

/// One leave-one-year-out fold: every other evaluable year trains.
pub fn loyo_fold(
    county: &County,
    trajectories: &BTreeMap<i32, SimulationTrajectory>,
    held_out: i32,
    settings: &ForecastSettings,
) -> Result<FoldResult> {
    let training: Vec<i32> = county.evaluable_years().into_iter().filter(|&y| y != held_out).collect();
    run_fold(county, trajectories, &training, held_out, settings)
}

/// Re-estimates `K` on the training years, then runs the fold with it.
fn calibrated_fold(
    county: &County,
    training_years: &[i32],
    target: i32,
    settings: &ForecastSettings,
    calibration: &CalibrationSettings,
) -> Result<FoldResult> {
    let cs = CalibrationSettings {
        years: training_years.to_vec(),
        ..calibration.clone()
    };
    let estimate = calibrate_carrying_capacity(&county.params, &county.temps, &county.cases, &cs)?;
    let refit = County {
        params: county.params.with_carrying_capacity(estimate.k),
        ..county.clone()
    };
    let trajectories = crate::pipeline::simulate_years(&refit.params, &refit.temps, training_years, settings)?;
    run_fold(&refit, &trajectories, training_years, target, settings)
}

/// Leave-one-year-out cross-validation over every evaluable year.
pub fn loyo_cv(county: &County, settings: &ForecastSettings) -> Result<CvReport> {
    loyo(county, settings, None)
}

/// As [`loyo_cv`], with `K` re-calibrated inside every fold on that fold's
/// training years only.
pub fn loyo_cv_calibrated(
    county: &County,
    settings: &ForecastSettings,
    calibration: &CalibrationSettings,
) -> Result<CvReport> {
    loyo(county, settings, Some(calibration))
}

fn loyo(county: &County, settings: &ForecastSettings, calibration: Option<&CalibrationSettings>) -> Result<CvReport> {
    settings.validate()?;
    let years = county.evaluable_years();
    let case_years = county.case_years();
    if case_years.len() < 3 {
        return Err(EvalError::InsufficientYears(case_years.len()).into());
    }
    let folds: Vec<FoldResult> = match calibration {
        None => {
            let trajectories = crate::pipeline::simulate_years(&county.params, &county.temps, &years, settings)?;
            years
                .par_iter()
                .map(|&y| loyo_fold(county, &trajectories, y, settings))
                .collect::<Result<_>>()?
        }
        Some(c) => years
            .par_iter()
            .map(|&y| {
                let training: Vec<i32> = years.iter().copied().filter(|&t| t != y).collect();
                calibrated_fold(county, &training, y, settings, c)
            })
            .collect::<Result<_>>()?,
    };
    let aggregates = aggregate_by_alpha(&folds, settings)?;
    let summary = summarize(&folds);
    let zero: Vec<(i32, f64)> = folds.iter().filter(|f| f.total_cases == 0).map(|f| (f.year, f.seasonal_risk)).collect();
    let with: Vec<(i32, f64)> = folds.iter().filter(|f| f.total_cases > 0).map(|f| (f.year, f.seasonal_risk)).collect();
    Ok(CvReport {
        location_id: county.cases.location_id.clone(),
        alphas: settings.sorted_alphas(),
        folds,
        aggregates,
        summary,
        zero_case_check: zero_case_year_check(&zero, &with),
    })
}

/// Forecasts `target` using only earlier years for training. With
/// `calibration`, `K` is first re-estimated on the training years.
pub fn retrospective(
    county: &County,
    training_years: &[i32],
    target: i32,
    settings: &ForecastSettings,
    calibration: Option<&CalibrationSettings>,
) -> Result<RetroReport> {
    settings.validate()?;
    let last = training_years.iter().copied().max().ok_or(EvalError::EmptyTraining)?;
    if target <= last {
        return Err(EvalError::TargetNotAfterTraining { target, last }.into());
    }
    let fold = match calibration {
        Some(c) => calibrated_fold(county, training_years, target, settings, c)?,
        None => {
            let trajectories = crate::pipeline::simulate_years(&county.params, &county.temps, training_years, settings)?;
            run_fold(county, &trajectories, training_years, target, settings)?
        }
    };
    let aggregates = aggregate_by_alpha(std::slice::from_ref(&fold), settings)?;
    let summary = summarize(std::slice::from_ref(&fold));
    Ok(RetroReport {
        location_id: county.cases.location_id.clone(),
        alphas: settings.sorted_alphas(),
        fold,
        aggregates,
        summary,
    })
}

fn aggregate_by_alpha(folds: &[FoldResult], settings: &ForecastSettings) -> Result<Vec<AggregateIntervalScore>> {
    let alphas = settings.sorted_alphas();
    let mut out = Vec::new();
    for (i, _) in alphas.iter().enumerate() {
        let scores: Vec<IntervalScore> = folds.iter().filter_map(|f| f.intervals.get(i).copied()).collect();
        if scores.is_empty() {
            continue;
        }
        out.push(aggregate_intervals(&scores)?);
    }
    Ok(out)
}

fn summarize(folds: &[FoldResult]) -> ModelSummary {
    let pooled = |pick: &dyn Fn(&PerModel<Vec<WeeklyScore>>) -> &Vec<WeeklyScore>| -> Vec<WeeklyScore> {
        folds.iter().flat_map(|f| pick(&f.weekly).iter().copied()).collect()
    };
    let all = PerModel {
        eco_epi: pooled(&|m| &m.eco_epi),
        null_poisson: pooled(&|m| &m.null_poisson),
        negative_binomial: pooled(&|m| &m.negative_binomial),
    };
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let nrmse_of = |pick: &dyn Fn(&PerModel<Option<f64>>) -> Option<f64>| -> Option<f64> {
        let v: Vec<f64> = folds.iter().filter_map(|f| pick(&f.nrmse)).collect();
        mean(&v)
    };
    ModelSummary {
        scored_weeks: all.eco_epi.len(),
        mean_log_score: all.map(|s| mean(&s.iter().map(|w| w.log_score).collect::<Vec<_>>())),
        mean_nrmse: PerModel {
            eco_epi: nrmse_of(&|n| n.eco_epi),
            null_poisson: nrmse_of(&|n| n.null_poisson),
            negative_binomial: nrmse_of(&|n| n.negative_binomial),
        },
        ave: all.map(|s| ave_summary(&s.iter().map(|w| w.abs_error).collect::<Vec<_>>())),
    }
}

/// Compares the seasonal risk sums of zero-case years with the median sum of
/// case years. `None` unless both groups are present.
pub fn zero_case_year_check(zero_case: &[(i32, f64)], case_years: &[(i32, f64)]) -> Option<ZeroCaseReport> {
    if zero_case.is_empty() || case_years.is_empty() {
        return None;
    }
    let mut sums: Vec<f64> = case_years.iter().map(|&(_, s)| s).collect();
    sums.sort_by(f64::total_cmp);
    let n = sums.len();
    let median = if n % 2 == 1 {
        sums[n / 2]
    } else {
        0.5 * (sums[n / 2 - 1] + sums[n / 2])
    };
    Some(ZeroCaseReport {
        case_year_sums: case_years.to_vec(),
        median_case_sum: median,
        zero_case_years: zero_case
            .iter()
            .map(|&(year, s)| ZeroCaseEntry {
                year,
                seasonal_sum: s,
                below_median: s < median,
            })
            .collect(),
    })
}

/// `year,alpha,start,end,length,true_onset,captured,accuracy`
pub fn write_intervals_csv<'a, W: Write>(folds: impl IntoIterator<Item = &'a FoldResult>, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["year", "alpha", "start", "end", "length", "true_onset", "captured", "accuracy"])?;
    let opt = |v: Option<u32>| v.map(|d| d.to_string()).unwrap_or_default();
    for f in folds {
        for s in &f.intervals {
            w.write_record([
                s.year.to_string(),
                s.alpha.to_string(),
                opt(s.start),
                opt(s.end),
                s.length.to_string(),
                s.true_onset.to_string(),
                (s.captured as u8).to_string(),
                s.accuracy.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per scored week with all three models side by side.
pub fn write_weekly_csv<'a, W: Write>(folds: impl IntoIterator<Item = &'a FoldResult>, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "year", "week", "observed", "eco_epi", "eco_epi_log_score", "null", "null_log_score", "nb", "nb_log_score",
    ])?;
    for f in folds {
        let rows = f.weekly.eco_epi.iter().zip(&f.weekly.null_poisson).zip(&f.weekly.negative_binomial);
        for ((e, n), b) in rows {
            w.write_record([
                e.year.to_string(),
                e.week.to_string(),
                e.observed.to_string(),
                e.predicted.to_string(),
                e.log_score.to_string(),
                n.predicted.to_string(),
                n.log_score.to_string(),
                b.predicted.to_string(),
                b.log_score.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
