//! Forecast scores: interval accuracy, NRMSE, absolute errors and the binned
//! logarithmic score.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::EvalError;
use crate::calendar::days_in_year;
use crate::onset::{IntervalLength, OnsetForecast};

/// Lowest reported logarithmic score.
pub const LOG_SCORE_FLOOR: f64 = -10.0;

/// Accuracy of one year's onset interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalScore {
    pub year: i32,
    pub alpha: f64,
    pub start: Option<u32>,
    pub end: Option<u32>,
    /// Interval length `L` in days.
    pub length: u32,
    pub true_onset: u32,
    pub captured: bool,
    /// `A = I / L`.
    pub accuracy: f64,
}

/// Scores `forecast` against the observed onset day. An empty interval
/// counts as a miss of full-year length.
pub fn score_interval(forecast: &OnsetForecast, true_onset_day: u32, mode: IntervalLength) -> IntervalScore {
    let (start, end, length, captured) = match forecast.interval {
        Some((a, b)) => (Some(a), Some(b), forecast.length(mode), (a..=b).contains(&true_onset_day)),
        None => (None, None, days_in_year(forecast.year), false),
    };
    IntervalScore {
        year: forecast.year,
        alpha: forecast.alpha,
        start,
        end,
        length,
        true_onset: true_onset_day,
        captured,
        accuracy: if captured { 1.0 / length as f64 } else { 0.0 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateIntervalScore {
    pub alpha: f64,
    pub years: usize,
    /// Share of years captured, in percent.
    pub beta: f64,
    pub mean_length: f64,
    /// `(β / 100) / L̄`.
    pub a_tilde: f64,
}

pub fn aggregate_intervals(scores: &[IntervalScore]) -> Result<AggregateIntervalScore, EvalError> {
    let first = scores.first().ok_or(EvalError::EmptyScores)?;
    let n = scores.len() as f64;
    let captured = scores.iter().filter(|s| s.captured).count() as f64;
    let mean_length = scores.iter().map(|s| s.length as f64).sum::<f64>() / n;
    let beta = 100.0 * captured / n;
    Ok(AggregateIntervalScore {
        alpha: first.alpha,
        years: scores.len(),
        beta,
        mean_length,
        a_tilde: aggregate_accuracy(beta, mean_length),
    })
}

/// `Ã` from a capture percentage and a mean interval length.
pub fn aggregate_accuracy(beta_percent: f64, mean_length: f64) -> f64 {
    (beta_percent / 100.0) / mean_length
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NrmseNormalizer {
    #[default]
    Mean,
    Range,
    StdDev,
}

/// RMSE divided by a summary of `obs` (mean by default).
pub fn nrmse(pred: &[f64], obs: &[f64], normalizer: NrmseNormalizer) -> Result<f64, EvalError> {
    if pred.len() != obs.len() {
        return Err(EvalError::LengthMismatch(pred.len(), obs.len()));
    }
    if obs.is_empty() || obs.iter().all(|&o| o == 0.0) {
        return Err(EvalError::AllZeroObservations);
    }
    let n = obs.len() as f64;
    let rmse = (pred.iter().zip(obs).map(|(p, o)| (p - o).powi(2)).sum::<f64>() / n).sqrt();
    let mean = obs.iter().sum::<f64>() / n;
    let denom = match normalizer {
        NrmseNormalizer::Mean => mean,
        NrmseNormalizer::Range => {
            let (lo, hi) = obs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &o| (l.min(o), h.max(o)));
            hi - lo
        }
        NrmseNormalizer::StdDev => (obs.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / n).sqrt(),
    };
    if denom <= 0.0 {
        return Err(EvalError::ZeroNormalizer);
    }
    Ok(rmse / denom)
}

/// Summary of absolute errors `|λ − observed|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub max: f64,
}

pub fn ave_summary(abs_errors: &[f64]) -> Option<AveSummary> {
    if abs_errors.is_empty() {
        return None;
    }
    let mut v = abs_errors.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let x = p * (v.len() - 1) as f64;
        let (lo, hi) = (x.floor() as usize, x.ceil() as usize);
        v[lo] + (v[hi] - v[lo]) * (x - lo as f64)
    };
    Some(AveSummary {
        n: v.len(),
        mean: v.iter().sum::<f64>() / v.len() as f64,
        median: q(0.5),
        q25: q(0.25),
        q75: q(0.75),
        max: v[v.len() - 1],
    })
}

/// Partition of the nonnegative integers into consecutive bins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BinScheme {
    /// Lower edges of every bin after the first (which starts at 0), strictly
    /// increasing. The last bin is open-ended.
    pub edges: Vec<u32>,
}

impl Default for BinScheme {
    fn default() -> Self {
        Self::unit(50)
    }
}

impl BinScheme {
    /// `{0}, {1}, …, {top − 1}, [top, ∞)`.
    pub fn unit(top: u32) -> Self {
        Self { edges: (1..=top).collect() }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.edges.first() == Some(&0) || self.edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EvalError::InvalidBins);
        }
        Ok(())
    }

    /// Inclusive range `[lo, hi]` of the bin containing `k`; `hi` is `None`
    /// for the open top bin.
    pub fn bin_of(&self, k: u32) -> (u32, Option<u32>) {
        let idx = self.edges.partition_point(|&e| e <= k);
        let lo = if idx == 0 { 0 } else { self.edges[idx - 1] };
        let hi = self.edges.get(idx).map(|&e| e - 1);
        (lo, hi)
    }
}

/// Poisson probability mass `P(X = k)`.
pub fn poisson_pmf(lambda: f64, k: u32) -> f64 {
    if lambda <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    (kf * lambda.ln() - lambda - ln_gamma(kf + 1.0)).exp()
}

/// Mass of the bin containing `observed`, given a pmf.
pub fn bin_probability(pmf: impl Fn(u32) -> f64, observed: u32, bins: &BinScheme) -> f64 {
    let (lo, hi) = bins.bin_of(observed);
    let p = match hi {
        Some(hi) => (lo..=hi).map(&pmf).sum::<f64>(),
        None => 1.0 - (0..lo).map(&pmf).sum::<f64>(),
    };
    p.clamp(0.0, 1.0)
}

/// `max(ln p, −10)` for a bin probability `p`.
pub fn floored_log(p: f64) -> f64 {
    if p > 0.0 {
        p.ln().clamp(LOG_SCORE_FLOOR, 0.0)
    } else {
        LOG_SCORE_FLOOR
    }
}

/// Binned Poisson logarithmic score.
pub fn log_score(lambda: f64, observed: u32, bins: &BinScheme) -> f64 {
    floored_log(bin_probability(|k| poisson_pmf(lambda, k), observed, bins))
}

/// One scored week.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeeklyScore {
    pub year: i32,
    pub week: u32,
    pub predicted: f64,
    pub observed: u32,
    pub log_score: f64,
    pub abs_error: f64,
}
