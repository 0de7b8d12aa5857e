//! Long-term trend in annual risky-day counts: OLS, Spearman rank
//! correlation and Mann–Kendall with the Sen slope.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

use crate::model::SimulationTrajectory;
use crate::severity::{count_risky_days, daily_risk, RateSurface};

#[derive(Debug, Error, PartialEq)]
pub enum TrendError {
    #[error("need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("years are not consecutive")]
    NonConsecutiveYears,
}

/// Risky days per year, `N_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualRiskySeries {
    pub years: Vec<i32>,
    pub counts: Vec<f64>,
}

impl AnnualRiskySeries {
    pub fn new(years: Vec<i32>, counts: Vec<f64>) -> Result<Self, TrendError> {
        if years.windows(2).any(|w| w[1] != w[0] + 1) || years.len() != counts.len() {
            return Err(TrendError::NonConsecutiveYears);
        }
        Ok(Self { years, counts })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Counts days with `λ ≥ threshold` in every trajectory.
pub fn annual_risky_days(
    surface: &RateSurface,
    trajectories: &BTreeMap<i32, SimulationTrajectory>,
    threshold: f64,
) -> Result<AnnualRiskySeries, TrendError> {
    let (years, counts) = trajectories
        .iter()
        .map(|(&y, traj)| (y, count_risky_days(&daily_risk(surface, traj, 1), threshold) as f64))
        .unzip();
    AnnualRiskySeries::new(years, counts)
}

fn need(got: usize, needed: usize) -> Result<(), TrendError> {
    if got < needed {
        Err(TrendError::InsufficientData { needed, got })
    } else {
        Ok(())
    }
}

fn two_sided_normal(z: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * (1.0 - n.cdf(z.abs()))).clamp(0.0, 1.0)
}

fn two_sided_t(t: f64, df: f64) -> f64 {
    let d = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * (1.0 - d.cdf(t.abs()))).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsTrend {
    /// Change per year.
    pub slope: f64,
    pub intercept: f64,
    pub p: f64,
}

/// Least-squares line of `counts` on the index `0..n`.
pub fn ols_trend(counts: &[f64]) -> Result<OlsTrend, TrendError> {
    need(counts.len(), 3)?;
    let n = counts.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = counts.iter().sum::<f64>() / n;
    let sxx: f64 = (0..counts.len()).map(|i| (i as f64 - xm).powi(2)).sum();
    let sxy: f64 = counts.iter().enumerate().map(|(i, y)| (i as f64 - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let sse: f64 = counts
        .iter()
        .enumerate()
        .map(|(i, y)| (y - intercept - slope * i as f64).powi(2))
        .sum();
    let syy: f64 = counts.iter().map(|y| (y - ym).powi(2)).sum();
    let p = if sse <= 1e-24 * syy.max(1e-300) {
        // perfect fit: certain if sloped, uninformative if flat
        if slope.abs() > 0.0 && syy > 0.0 {
            0.0
        } else {
            1.0
        }
    } else {
        let se = (sse / (n - 2.0) / sxx).sqrt();
        two_sided_t(slope / se, n - 2.0)
    };
    Ok(OlsTrend { slope, intercept, p })
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpearmanResult {
    pub rho: f64,
    pub p: f64,
}

/// Rank correlation between the index and `counts`.
pub fn spearman(counts: &[f64]) -> Result<SpearmanResult, TrendError> {
    need(counts.len(), 4)?;
    let n = counts.len();
    let rx: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let ry = average_ranks(counts);
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean).powi(2);
        syy += (b - mean).powi(2);
    }
    if syy == 0.0 {
        return Ok(SpearmanResult { rho: 0.0, p: 1.0 });
    }
    let rho = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        two_sided_t(rho * ((n as f64 - 2.0) / (1.0 - rho * rho)).sqrt(), n as f64 - 2.0)
    };
    Ok(SpearmanResult { rho, p })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannKendall {
    pub s: f64,
    /// Variance of `S` with the tie correction.
    pub var_s: f64,
    pub z: f64,
    pub p: f64,
    pub sen_slope: f64,
}

/// Mann–Kendall test on `counts` in index order, with the Sen slope.
pub fn mann_kendall(counts: &[f64], continuity_correction: bool) -> Result<MannKendall, TrendError> {
    need(counts.len(), 4)?;
    let n = counts.len();
    let mut s = 0.0;
    let mut slopes = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d = counts[j] - counts[i];
            s += if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            };
            slopes.push(d / (j - i) as f64);
        }
    }
    let mut sorted = counts.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * (t - 1.0) * (2.0 * t + 5.0);
        i = j + 1;
    }
    let nf = n as f64;
    let var_s = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - tie_term) / 18.0;
    let cc = if continuity_correction { 1.0 } else { 0.0 };
    let z = if s > 0.0 && var_s > 0.0 {
        (s - cc) / var_s.sqrt()
    } else if s < 0.0 && var_s > 0.0 {
        (s + cc) / var_s.sqrt()
    } else {
        0.0
    };
    slopes.sort_by(f64::total_cmp);
    let m = slopes.len();
    let sen_slope = if m % 2 == 1 {
        slopes[m / 2]
    } else {
        0.5 * (slopes[m / 2 - 1] + slopes[m / 2])
    };
    Ok(MannKendall {
        s,
        var_s,
        z,
        p: two_sided_normal(z),
        sen_slope,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub series: AnnualRiskySeries,
    pub ols: OlsTrend,
    pub spearman: SpearmanResult,
    pub mann_kendall: MannKendall,
}

pub fn trend_report(series: &AnnualRiskySeries, continuity_correction: bool) -> Result<TrendReport, TrendError> {
    Ok(TrendReport {
        series: series.clone(),
        ols: ols_trend(&series.counts)?,
        spearman: spearman(&series.counts)?,
        mann_kendall: mann_kendall(&series.counts, continuity_correction)?,
    })
}
