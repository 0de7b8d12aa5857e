//! Spillover onset: a bivariate density of `(M, T)` at historical onset
//! times, its highest-density risk regions and the risky-day timelines they
//! induce on a projected trajectory.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::WeekConvention;
use crate::ingest::CaseSeries;
use crate::kde::{gauss, scott_bandwidth, Bandwidth, Grid2};
use crate::model::SimulationTrajectory;

/// Default evaluation lattice resolution per axis.
pub const DEFAULT_GRID: usize = 256;
/// Padding of the lattice beyond the sample extremes, in bandwidths.
pub const GRID_MARGIN: f64 = 4.0;

#[derive(Debug, Error)]
pub enum OnsetError {
    #[error("no training year has a reported case")]
    NoOnsetInAnyYear,
    #[error("no trajectory for year {0}")]
    MissingTrajectory(i32),
    #[error("trajectory for year {0} does not cover day {1}")]
    TrajectoryTooShort(i32, u32),
    #[error("samples are degenerate: need at least 3 points with spread on both axes")]
    DegenerateSamples,
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
}

/// `(M, T)` observed at a year's (delay-adjusted) spillover onset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnsetSample {
    pub year: i32,
    /// First day of the first week with a reported case.
    pub onset_day: u32,
    pub delay_adjusted_day: u32,
    pub m: f64,
    pub t: f64,
}

/// Onset day of `year`: the first day of its first case-reporting week.
pub fn onset_day(cases: &CaseSeries, year: i32, convention: WeekConvention) -> Option<u32> {
    cases
        .first_case_week(year)
        .map(|w| convention.week_start(year, w))
}

/// Collects one sample per training year with at least one case; zero-case
/// years are skipped.
pub fn build_onset_samples(
    years: &[i32],
    trajectories: &BTreeMap<i32, SimulationTrajectory>,
    cases: &CaseSeries,
    delay_days: u32,
    convention: WeekConvention,
) -> Result<Vec<OnsetSample>, OnsetError> {
    let mut out = Vec::new();
    for &year in years {
        let Some(onset) = onset_day(cases, year, convention) else {
            log::info!("year {year} has no reported cases; skipped for onset density");
            continue;
        };
        let traj = trajectories.get(&year).ok_or(OnsetError::MissingTrajectory(year))?;
        let day = onset.saturating_sub(delay_days).max(1);
        let (m, t) = traj
            .covariates(day)
            .ok_or(OnsetError::TrajectoryTooShort(year, day))?;
        out.push(OnsetSample {
            year,
            onset_day: onset,
            delay_adjusted_day: day,
            m,
            t,
        });
    }
    if out.is_empty() {
        return Err(OnsetError::NoOnsetInAnyYear);
    }
    Ok(out)
}

/// Product-Gaussian KDE with Scott bandwidths, cached on a lattice that
/// extends [`GRID_MARGIN`] bandwidths past the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySurface {
    pub points: Vec<(f64, f64)>,
    pub bandwidth: Bandwidth,
    pub grid: Grid2,
    /// Density at each lattice node (row-major, `T` rows).
    pub values: Vec<f64>,
}

impl DensitySurface {
    pub fn fit(points: &[(f64, f64)], grid_size: usize) -> Result<Self, OnsetError> {
        if points.len() < 3 {
            return Err(OnsetError::DegenerateSamples);
        }
        let bandwidth = scott_bandwidth(points, None).ok_or(OnsetError::DegenerateSamples)?;
        let grid = Grid2::covering(points, bandwidth, GRID_MARGIN, grid_size, grid_size);
        let (hm, ht) = (bandwidth.m, bandwidth.t);
        let norm = 1.0 / (points.len() as f64 * hm * ht);
        let mut values = grid.separable_sum(points, None, |d| gauss(d / hm), |d| gauss(d / ht));
        values.iter_mut().for_each(|v| *v *= norm);
        Ok(Self {
            points: points.to_vec(),
            bandwidth,
            grid,
            values,
        })
    }

    /// Exact kernel-sum density at `(m, t)`.
    pub fn density(&self, m: f64, t: f64) -> f64 {
        let (hm, ht) = (self.bandwidth.m, self.bandwidth.t);
        let s: f64 = self
            .points
            .iter()
            .map(|&(pm, pt)| gauss((m - pm) / hm) * gauss((t - pt) / ht))
            .sum();
        s / (self.points.len() as f64 * hm * ht)
    }

    /// Midpoint-rule integral of the cached density over the lattice.
    pub fn grid_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn max_cell_mass(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max) * self.grid.cell_area()
    }
}

pub fn fit_onset_pdf(samples: &[OnsetSample], grid_size: usize) -> Result<DensitySurface, OnsetError> {
    let points: Vec<(f64, f64)> = samples.iter().map(|s| (s.m, s.t)).collect();
    DensitySurface::fit(&points, grid_size)
}

/// Smallest lattice region holding an `alpha` share of the density mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRegion {
    pub alpha: f64,
    /// Density level `c`; the region is `{f ≥ c}`.
    pub threshold: f64,
    pub grid: Grid2,
    pub mask: Vec<bool>,
    /// Absolute probability mass of the member cells.
    pub mass: f64,
}

impl RiskRegion {
    pub fn cell_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn area(&self) -> f64 {
        self.cell_count() as f64 * self.grid.cell_area()
    }

    /// Whether every cell of `self` also belongs to `other`.
    pub fn is_subset_of(&self, other: &RiskRegion) -> bool {
        self.mask.len() == other.mask.len() && self.mask.iter().zip(&other.mask).all(|(a, b)| !a || *b)
    }

    /// Run-length encoding of the mask as `(value, run)` pairs in lattice order.
    pub fn mask_rle(&self) -> Vec<(bool, usize)> {
        let mut out: Vec<(bool, usize)> = Vec::new();
        for &b in &self.mask {
            match out.last_mut() {
                Some((v, n)) if *v == b => *n += 1,
                _ => out.push((b, 1)),
            }
        }
        out
    }

    pub fn to_export(&self) -> RegionExport {
        RegionExport {
            alpha: self.alpha,
            threshold: self.threshold,
            mass: self.mass,
            grid: self.grid,
            mask_rle: self.mask_rle(),
        }
    }
}

/// JSON form of a [`RiskRegion`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionExport {
    pub alpha: f64,
    pub threshold: f64,
    pub mass: f64,
    pub grid: Grid2,
    pub mask_rle: Vec<(bool, usize)>,
}

impl RegionExport {
    pub fn decode(&self) -> RiskRegion {
        let mask = self
            .mask_rle
            .iter()
            .flat_map(|&(v, n)| std::iter::repeat_n(v, n))
            .collect();
        RiskRegion {
            alpha: self.alpha,
            threshold: self.threshold,
            grid: self.grid,
            mask,
            mass: self.mass,
        }
    }
}

/// Accumulates lattice cells in decreasing density until their share of the
/// total lattice mass reaches `alpha`; all cells tied with the last one are
/// included.
pub fn hdr_region(surface: &DensitySurface, alpha: f64) -> Result<RiskRegion, OnsetError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(OnsetError::InvalidAlpha(alpha));
    }
    let vals = &surface.values;
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    let total: f64 = vals.iter().sum();
    let target = alpha * total;
    let mut acc = 0.0;
    let mut threshold = vals[order[0]];
    for &idx in &order {
        acc += vals[idx];
        threshold = vals[idx];
        if acc >= target {
            break;
        }
    }
    let mask: Vec<bool> = vals.iter().map(|&v| v >= threshold).collect();
    let area = surface.grid.cell_area();
    let mass = vals
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m)
        .map(|(v, _)| v)
        .sum::<f64>()
        * area;
    Ok(RiskRegion {
        alpha,
        threshold,
        grid: surface.grid,
        mask,
        mass,
    })
}

/// How the length `L` of a forecast interval is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalLength {
    /// `last − first + 1`: the contiguous hull of the risky days.
    #[default]
    Hull,
    /// Number of risky days only.
    RiskyDays,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelineDay {
    pub day: u32,
    pub m: f64,
    pub t: f64,
    pub density: f64,
    pub risky: bool,
}

/// Risky-day classification of one year's trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnsetForecast {
    pub year: i32,
    pub alpha: f64,
    pub timeline: Vec<TimelineDay>,
    /// `[first risky day, last risky day]`, or `None` when no day is risky.
    pub interval: Option<(u32, u32)>,
}

impl OnsetForecast {
    pub fn risky_days(&self) -> usize {
        self.timeline.iter().filter(|d| d.risky).count()
    }

    pub fn length(&self, mode: IntervalLength) -> u32 {
        match (self.interval, mode) {
            (None, _) => 0,
            (Some((a, b)), IntervalLength::Hull) => b - a + 1,
            (Some(_), IntervalLength::RiskyDays) => self.risky_days() as u32,
        }
    }

    /// Copy with every day index moved later by `days` (risk-time to
    /// reporting-time). Days past `last_day` are dropped.
    pub fn shifted(&self, days: u32, last_day: u32) -> OnsetForecast {
        let timeline: Vec<TimelineDay> = self
            .timeline
            .iter()
            .filter(|d| d.day + days <= last_day)
            .map(|d| TimelineDay { day: d.day + days, ..*d })
            .collect();
        let interval = hull(&timeline);
        OnsetForecast {
            year: self.year,
            alpha: self.alpha,
            timeline,
            interval,
        }
    }
}

fn hull(timeline: &[TimelineDay]) -> Option<(u32, u32)> {
    let mut risky = timeline.iter().filter(|d| d.risky).map(|d| d.day);
    let first = risky.next()?;
    let last = risky.last().unwrap_or(first);
    Some((first, last))
}

/// Marks day `i` in `day_range` risky when `f(M_i, T_i) ≥ threshold`.
pub fn classify_days(
    surface: &DensitySurface,
    region: &RiskRegion,
    trajectory: &SimulationTrajectory,
    day_range: (u32, u32),
) -> Result<OnsetForecast, OnsetError> {
    let (a, b) = day_range;
    let mut timeline = Vec::with_capacity((b.saturating_sub(a) + 1) as usize);
    for day in a..=b {
        let (m, t) = trajectory
            .covariates(day)
            .ok_or(OnsetError::TrajectoryTooShort(trajectory.year(), day))?;
        let density = surface.density(m, t);
        timeline.push(TimelineDay {
            day,
            m,
            t,
            density,
            risky: density >= region.threshold,
        });
    }
    let interval = hull(&timeline);
    Ok(OnsetForecast {
        year: trajectory.year(),
        alpha: region.alpha,
        timeline,
        interval,
    })
}

/// Timeline CSV: `day,M,T,density,risky`.
pub fn write_timeline_csv<W: Write>(forecast: &OnsetForecast, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["day", "M", "T", "density", "risky"])?;
    for d in &forecast.timeline {
        w.write_record([
            d.day.to_string(),
            d.m.to_string(),
            d.t.to_string(),
            d.density.to_string(),
            (d.risky as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
