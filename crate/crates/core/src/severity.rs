//! Spillover severity: a kernel-smoothed Poisson rate surface `λ(M, T)` for
//! weekly human cases, daily risk along a trajectory and risky-day counts.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::WeekConvention;
use crate::ingest::CaseSeries;
use crate::kde::{scott_bandwidth, truncated_gauss, Bandwidth, Grid2, INV_SQRT_2PI};
use crate::model::SimulationTrajectory;

/// Kernel cutoff, in bandwidths; `λ` is zero farther than this from every
/// background point.
pub const SUPPORT_RADIUS: f64 = 4.0;
const DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SeverityError {
    #[error("training data contain no reported cases")]
    NoCases,
    #[error("training samples are degenerate")]
    DegenerateSamples,
    #[error("no trajectory for year {0}")]
    MissingTrajectory(i32),
    #[error("trajectory for year {0} does not cover day {1}")]
    TrajectoryTooShort(i32, u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateEstimator {
    /// Nadaraya–Watson: case-weighted kernel sum over the background kernel
    /// sum, i.e. the local mean count per reporting interval.
    #[default]
    ConditionalMean,
    /// `total cases × f_case / (background days × f_background)`, each
    /// density a normalized KDE with its own Scott bandwidth.
    ScaledIntensity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RateSettings {
    pub estimator: RateEstimator,
    /// Days per reporting interval. The background is daily, so the
    /// per-day ratio is multiplied by this to give cases per interval.
    pub interval_days: f64,
    pub grid_size: usize,
}

impl Default for RateSettings {
    fn default() -> Self {
        Self {
            estimator: RateEstimator::ConditionalMean,
            interval_days: 7.0,
            grid_size: 256,
        }
    }
}

/// A reporting interval's `(M, T)` with its case count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CasePoint {
    pub m: f64,
    pub t: f64,
    pub count: f64,
}

/// Case points and the daily background for a set of training years.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RateTrainingData {
    pub cases: Vec<CasePoint>,
    pub background: Vec<(f64, f64)>,
}

/// Gathers training points. Each in-season week contributes a case point at
/// `week start − delay` and its seven days (shifted by the same delay) to the
/// background. Years without any case are left out unless
/// `include_zero_case_years` is set.
pub fn rate_training_data(
    years: &[i32],
    trajectories: &BTreeMap<i32, SimulationTrajectory>,
    cases: &CaseSeries,
    delay_days: u32,
    convention: WeekConvention,
    weeks: std::ops::RangeInclusive<u32>,
    include_zero_case_years: bool,
) -> Result<RateTrainingData, SeverityError> {
    let mut out = RateTrainingData::default();
    for &year in years {
        if !include_zero_case_years && cases.year_total(year) == 0 {
            continue;
        }
        let traj = trajectories.get(&year).ok_or(SeverityError::MissingTrajectory(year))?;
        for w in weeks.clone() {
            let Some((a, b)) = convention.week_days(year, w) else { continue };
            let shift = |d: u32| d.saturating_sub(delay_days).max(1);
            let (m, t) = traj
                .covariates(shift(a))
                .ok_or(SeverityError::TrajectoryTooShort(year, shift(a)))?;
            out.cases.push(CasePoint {
                m,
                t,
                count: cases.count(year, w) as f64,
            });
            for d in a..=b {
                let day = shift(d);
                out.background
                    .push(traj.covariates(day).ok_or(SeverityError::TrajectoryTooShort(year, day))?);
            }
        }
    }
    Ok(out)
}

/// Fitted `λ(M, T)` with cached numerator and denominator lattices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSurface {
    pub settings: RateSettings,
    pub delay_days: u32,
    pub cases: Vec<CasePoint>,
    pub background: Vec<(f64, f64)>,
    /// Bandwidths of the case kernel.
    pub bandwidth: Bandwidth,
    /// Bandwidths of the background kernel (equal to `bandwidth` for the
    /// conditional-mean estimator).
    pub background_bandwidth: Bandwidth,
    pub grid: Grid2,
    numerator: Vec<f64>,
    denominator: Vec<f64>,
    /// `λ` at each lattice node.
    pub values: Vec<f64>,
}

pub fn fit_rate_surface(
    case_days: &[CasePoint],
    background_days: &[(f64, f64)],
    delay_days: u32,
    settings: &RateSettings,
) -> Result<RateSurface, SeverityError> {
    let total: f64 = case_days.iter().map(|c| c.count).sum();
    if total < 1.0 {
        return Err(SeverityError::NoCases);
    }
    let cases: Vec<CasePoint> = case_days.iter().copied().filter(|c| c.count > 0.0).collect();
    let case_xy: Vec<(f64, f64)> = cases.iter().map(|c| (c.m, c.t)).collect();
    let weights: Vec<f64> = cases.iter().map(|c| c.count).collect();
    let bg_bw = scott_bandwidth(background_days, None);
    let case_bw = scott_bandwidth(&case_xy, Some(&weights));
    let (bandwidth, background_bandwidth) = match settings.estimator {
        RateEstimator::ConditionalMean => {
            let bw = case_bw.or(bg_bw).ok_or(SeverityError::DegenerateSamples)?;
            (bw, bw)
        }
        RateEstimator::ScaledIntensity => {
            let bg = bg_bw.ok_or(SeverityError::DegenerateSamples)?;
            (case_bw.unwrap_or(bg), bg)
        }
    };

    let grid = Grid2::covering(
        background_days,
        background_bandwidth,
        SUPPORT_RADIUS,
        settings.grid_size,
        settings.grid_size,
    );
    let k = |h: f64| move |d: f64| truncated_gauss(d / h, SUPPORT_RADIUS);
    let numerator = grid.separable_sum(&case_xy, Some(&weights), k(bandwidth.m), k(bandwidth.t));
    let denominator = grid.separable_sum(
        background_days,
        None,
        k(background_bandwidth.m),
        k(background_bandwidth.t),
    );
    let mut surface = RateSurface {
        settings: settings.clone(),
        delay_days,
        cases,
        background: background_days.to_vec(),
        bandwidth,
        background_bandwidth,
        grid,
        numerator,
        denominator,
        values: Vec::new(),
    };
    surface.values = surface
        .numerator
        .iter()
        .zip(&surface.denominator)
        .map(|(&n, &d)| surface.ratio(n, d))
        .collect();
    Ok(surface)
}

impl RateSurface {
    /// Turns raw (unnormalized) kernel sums into `λ`.
    fn ratio(&self, num: f64, den: f64) -> f64 {
        if den < DENOMINATOR_FLOOR {
            return 0.0;
        }
        let scale = match self.settings.estimator {
            RateEstimator::ConditionalMean => 1.0,
            // kernel normalizations no longer cancel when bandwidths differ
            RateEstimator::ScaledIntensity => {
                (self.background_bandwidth.m * self.background_bandwidth.t) / (self.bandwidth.m * self.bandwidth.t)
            }
        };
        (self.settings.interval_days * scale * num / den).max(0.0)
    }

    /// `λ` by bilinear interpolation of the cached numerator and denominator;
    /// zero off the lattice.
    pub fn eval(&self, m: f64, t: f64) -> f64 {
        match (
            self.grid.interpolate(&self.numerator, m, t),
            self.grid.interpolate(&self.denominator, m, t),
        ) {
            (Some(n), Some(d)) => self.ratio(n, d),
            _ => 0.0,
        }
    }

    /// `λ` from direct kernel sums over every training point.
    pub fn eval_exact(&self, m: f64, t: f64) -> f64 {
        let (h, g) = (self.bandwidth, self.background_bandwidth);
        let num: f64 = self
            .cases
            .iter()
            .map(|c| c.count * truncated_gauss((m - c.m) / h.m, SUPPORT_RADIUS) * truncated_gauss((t - c.t) / h.t, SUPPORT_RADIUS))
            .sum();
        let den: f64 = self
            .background
            .iter()
            .map(|&(bm, bt)| truncated_gauss((m - bm) / g.m, SUPPORT_RADIUS) * truncated_gauss((t - bt) / g.t, SUPPORT_RADIUS))
            .sum();
        self.ratio(num, den)
    }

    /// Value at lattice node `(i, j)`.
    pub fn node_value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Case-weighted KDE density (normalized Gaussian) used by the
    /// scaled-intensity reading; exposed for plotting.
    pub fn case_density(&self, m: f64, t: f64) -> f64 {
        let h = self.bandwidth;
        let total: f64 = self.cases.iter().map(|c| c.count).sum();
        let s: f64 = self
            .cases
            .iter()
            .map(|c| c.count * truncated_gauss((m - c.m) / h.m, SUPPORT_RADIUS) * truncated_gauss((t - c.t) / h.t, SUPPORT_RADIUS))
            .sum();
        s * INV_SQRT_2PI * INV_SQRT_2PI / (total * h.m * h.t)
    }

    /// Lattice node with the largest `λ`.
    pub fn argmax(&self) -> (usize, usize) {
        let idx = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        (idx % self.grid.nm, idx / self.grid.nm)
    }
}

pub fn eval_rate(surface: &RateSurface, m: f64, t: f64) -> f64 {
    surface.eval(m, t)
}

/// `λ` along one year's trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRiskSeries {
    pub year: i32,
    /// First day considered post-onset.
    pub onset_gate: u32,
    pub m: Vec<f64>,
    pub t: Vec<f64>,
    /// `λ` for day-of-year `i + 1` at index `i`.
    pub lambda: Vec<f64>,
}

impl DailyRiskSeries {
    pub fn is_post_onset(&self, day: u32) -> bool {
        day >= self.onset_gate
    }

    /// `Σ λ` over an inclusive day range.
    pub fn seasonal_sum(&self, days: std::ops::RangeInclusive<u32>) -> f64 {
        days.filter_map(|d| self.lambda.get(d as usize - 1)).sum()
    }
}

/// Evaluates `λ(M_i, T_i)` for every day of the trajectory.
pub fn daily_risk(surface: &RateSurface, trajectory: &SimulationTrajectory, onset_gate: u32) -> DailyRiskSeries {
    let (m, t) = (trajectory.abundance.clone(), trajectory.thermal.clone());
    let lambda = m.iter().zip(&t).map(|(&mi, &ti)| surface.eval(mi, ti)).collect();
    DailyRiskSeries {
        year: trajectory.year(),
        onset_gate,
        m,
        t,
        lambda,
    }
}

/// Predicted count for each reporting week: `λ` at `week start − delay`.
pub fn weekly_rates(
    surface: &RateSurface,
    trajectory: &SimulationTrajectory,
    convention: WeekConvention,
    weeks: std::ops::RangeInclusive<u32>,
) -> Vec<f64> {
    let year = trajectory.year();
    weeks
        .map(|w| {
            let day = convention.week_start(year, w).saturating_sub(surface.delay_days).max(1);
            trajectory.covariates(day).map_or(0.0, |(m, t)| surface.eval(m, t))
        })
        .collect()
}

/// Days with `λ ≥ threshold`.
pub fn count_risky_days(risk: &DailyRiskSeries, threshold: f64) -> usize {
    risk.lambda.iter().filter(|&&l| l >= threshold).count()
}

/// Risk-map CSV: `day,M,T,lambda,post_onset`.
pub fn write_risk_csv<W: Write>(risk: &DailyRiskSeries, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["day", "M", "T", "lambda", "post_onset"])?;
    for (i, ((m, t), l)) in risk.m.iter().zip(&risk.t).zip(&risk.lambda).enumerate() {
        let day = i as u32 + 1;
        w.write_record([
            day.to_string(),
            m.to_string(),
            t.to_string(),
            l.to_string(),
            (risk.is_post_onset(day) as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn background(n: usize, seed: u64) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (rng.random_range(0.0..10.0), rng.random_range(0.0..5.0))).collect()
    }

    fn cases_from(bg: &[(f64, f64)], g: impl Fn(f64, f64) -> f64) -> Vec<CasePoint> {
        bg.iter().step_by(7).map(|&(m, t)| CasePoint { m, t, count: g(m, t).round() }).collect()
    }

    fn risk(lambda: Vec<f64>) -> DailyRiskSeries {
        let n = lambda.len();
        DailyRiskSeries {
            year: 2023,
            onset_gate: 1,
            m: vec![0.0; n],
            t: vec![0.0; n],
            lambda,
        }
    }

    #[test]
    fn no_cases() {
        let bg = background(100, 1);
        let c = vec![CasePoint { m: 1.0, t: 1.0, count: 0.0 }];
        assert!(matches!(
            fit_rate_surface(&c, &bg, 14, &RateSettings::default()),
            Err(SeverityError::NoCases)
        ));
    }

    #[test]
    fn single_case_is_positive_at_its_point() {
        let bg = background(2000, 2);
        let c = [CasePoint { m: 5.0, t: 2.5, count: 1.0 }];
        let s = fit_rate_surface(&c, &bg, 0, &RateSettings::default()).unwrap();
        let l = s.eval_exact(5.0, 2.5);
        assert!(l > 0.0);
        assert!(s.eval(5.0, 2.5) > 0.0);
    }

    #[test]
    fn zero_far_from_support() {
        let bg = background(500, 3);
        let s = fit_rate_surface(&cases_from(&bg, |m, _| m), &bg, 0, &RateSettings::default()).unwrap();
        let far = (s.grid.m_max() + 10.0 * s.background_bandwidth.m, 2.0);
        assert_eq!(s.eval(far.0, far.1), 0.0);
        assert_eq!(s.eval_exact(far.0, far.1), 0.0);
    }

    #[test]
    fn nodes_match_cache_and_exact() {
        let bg = background(700, 4);
        let s = fit_rate_surface(&cases_from(&bg, |m, t| m + t), &bg, 0, &RateSettings { grid_size: 48, ..Default::default() }).unwrap();
        for (i, j) in [(0, 0), (10, 20), (24, 24), (47, 47)] {
            let (m, t) = (s.grid.m(i), s.grid.t(j));
            assert_eq!(s.eval(m, t), s.node_value(i, j));
            let exact = s.eval_exact(m, t);
            assert!((s.node_value(i, j) - exact).abs() <= 1e-9 * exact.max(1e-12));
        }
    }

    #[test]
    fn doubling_counts_doubles_rate() {
        let bg = background(600, 5);
        let c = cases_from(&bg, |m, _| m / 2.0);
        let c2: Vec<CasePoint> = c.iter().map(|p| CasePoint { count: 2.0 * p.count, ..*p }).collect();
        let a = fit_rate_surface(&c, &bg, 0, &RateSettings::default()).unwrap();
        let b = fit_rate_surface(&c2, &bg, 0, &RateSettings::default()).unwrap();
        for (m, t) in [(3.0, 1.0), (5.0, 2.5), (8.0, 4.0)] {
            let (x, y) = (a.eval_exact(m, t), b.eval_exact(m, t));
            assert!((y - 2.0 * x).abs() <= 1e-9 * x.max(1e-12));
        }
    }

    #[test]
    fn shuffle_invariance() {
        let bg = background(400, 6);
        let c = cases_from(&bg, |m, t| m * t / 5.0);
        let mut bg2 = bg.clone();
        bg2.reverse();
        let mut c2 = c.clone();
        c2.rotate_left(7);
        let a = fit_rate_surface(&c, &bg, 0, &RateSettings::default()).unwrap();
        let b = fit_rate_surface(&c2, &bg2, 0, &RateSettings::default()).unwrap();
        for (m, t) in [(3.0, 1.0), (5.0, 2.5), (8.0, 4.0)] {
            let (x, y) = (a.eval_exact(m, t), b.eval_exact(m, t));
            assert!((x - y).abs() <= 1e-12 * x.max(1.0));
        }
    }

    #[test]
    fn scaled_intensity_is_nonnegative_and_zero_off_support() {
        let bg = background(800, 7);
        let settings = RateSettings { estimator: RateEstimator::ScaledIntensity, grid_size: 64, ..Default::default() };
        let s = fit_rate_surface(&cases_from(&bg, |m, _| m), &bg, 0, &settings).unwrap();
        assert!(s.values.iter().all(|&v| v >= 0.0));
        assert!(s.eval(5.0, 2.5) > 0.0);
        assert_eq!(s.eval(-100.0, 2.5), 0.0);
    }

    #[test]
    fn risky_day_counting() {
        assert_eq!(count_risky_days(&risk(vec![0.0; 365]), 1.0), 0);
        let mut l = vec![0.5; 365];
        l[10] = 1.0;
        l[20] = 1.0;
        l[30] = 1.0;
        assert_eq!(count_risky_days(&risk(l), 1.0), 3);
        let ramp: Vec<f64> = (1..=365).map(|i| i as f64 / 100.0).collect();
        let expected = ramp.iter().filter(|&&x| x >= 1.0).count();
        assert_eq!(count_risky_days(&risk(ramp), 1.0), expected);
        assert_eq!(expected, 266);
    }
}
