//! Synthetic counties: seeded temperature records and case series drawn
//! from a known rate surface. Used by the examples, the bundled fixtures and
//! the test suites; no real surveillance data ships with the crate.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::calendar::{days_in_year, WeekConvention};
use crate::ingest::{CaseEntry, CaseSeries, TemperatureSeries};
use crate::model::{ModelParams, SimulationTrajectory};
use crate::pipeline::{simulate_years, County, ForecastSettings};

/// Seasonal temperature generator: annual cosine cycle, per-year offset,
/// linear warming and AR(1) daily weather noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticClimate {
    pub location_id: String,
    pub start_year: i32,
    pub end_year: i32,
    pub mean: f64,
    pub amplitude: f64,
    /// Day-of-year of the coldest point in the cycle.
    pub coldest_day: f64,
    pub daily_noise_sd: f64,
    pub daily_noise_memory: f64,
    pub interannual_sd: f64,
    /// °C added per year since `start_year`.
    pub warming_per_year: f64,
    pub seed: u64,
}

impl Default for SyntheticClimate {
    fn default() -> Self {
        Self {
            location_id: "synthetic".into(),
            start_year: 2006,
            end_year: 2024,
            mean: 18.0,
            amplitude: 6.0,
            coldest_day: 15.0,
            daily_noise_sd: 1.0,
            daily_noise_memory: 0.7,
            interannual_sd: 0.6,
            warming_per_year: 0.0,
            seed: 2006,
        }
    }
}

impl SyntheticClimate {
    pub fn generate(&self) -> TemperatureSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let unit = Normal::new(0.0, 1.0).expect("valid normal");
        let innov_sd = self.daily_noise_sd * (1.0 - self.daily_noise_memory.powi(2)).max(0.0).sqrt();
        let mut temps = Vec::new();
        let mut ar = 0.0;
        for year in self.start_year..=self.end_year {
            let offset = self.interannual_sd * unit.sample(&mut rng)
                + self.warming_per_year * (year - self.start_year) as f64;
            let n = days_in_year(year);
            for doy in 1..=n {
                ar = self.daily_noise_memory * ar + innov_sd * unit.sample(&mut rng);
                let phase = 2.0 * std::f64::consts::PI * (doy as f64 - self.coldest_day) / n as f64;
                let t = self.mean + offset - self.amplitude * phase.cos() + ar;
                temps.push(t.clamp(-59.0, 59.0));
            }
        }
        TemperatureSeries::new(
            self.location_id.clone(),
            NaiveDate::from_ymd_opt(self.start_year, 1, 1).expect("valid year"),
            temps,
        )
    }
}

/// Known rate surface `g(M, T)`: a Gaussian bump (expected weekly cases).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpRate {
    pub peak: f64,
    pub m_center: f64,
    pub m_width: f64,
    pub t_center: f64,
    pub t_width: f64,
}

impl BumpRate {
    pub fn eval(&self, m: f64, t: f64) -> f64 {
        let zm = (m - self.m_center) / self.m_width;
        let zt = (t - self.t_center) / self.t_width;
        self.peak * (-0.5 * (zm * zm + zt * zt)).exp()
    }

    /// A bump centred at the given quantiles of the pooled in-season
    /// `(M, T)` values, with widths set to a fraction of each axis' spread.
    pub fn fitted_to(
        trajectories: &BTreeMap<i32, SimulationTrajectory>,
        days: std::ops::RangeInclusive<u32>,
        peak: f64,
        m_quantile: f64,
        t_quantile: f64,
        width_fraction: f64,
    ) -> Self {
        let mut ms = Vec::new();
        let mut ts = Vec::new();
        for traj in trajectories.values() {
            for d in days.clone() {
                if let Some((m, t)) = traj.covariates(d) {
                    ms.push(m);
                    ts.push(t);
                }
            }
        }
        let q = |v: &mut Vec<f64>, p: f64| {
            v.sort_by(f64::total_cmp);
            v[((v.len() - 1) as f64 * p).round() as usize]
        };
        let (m_lo, m_hi) = (q(&mut ms, 0.05), q(&mut ms, 0.95));
        let (t_lo, t_hi) = (q(&mut ts, 0.05), q(&mut ts, 0.95));
        Self {
            peak,
            m_center: q(&mut ms, m_quantile),
            m_width: width_fraction * (m_hi - m_lo),
            t_center: q(&mut ts, t_quantile),
            t_width: width_fraction * (t_hi - t_lo),
        }
    }
}

/// Draws weekly counts `n_w ~ Poisson(g(M, T))`, with `(M, T)` read
/// `delay_days` before the first day of each reporting week.
pub fn sample_cases(
    location_id: &str,
    trajectories: &BTreeMap<i32, SimulationTrajectory>,
    rate: impl Fn(f64, f64) -> f64,
    convention: WeekConvention,
    weeks: std::ops::RangeInclusive<u32>,
    delay_days: u32,
    seed: u64,
) -> CaseSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for (&year, traj) in trajectories {
        for w in weeks.clone() {
            let start = convention.week_start(year, w);
            let day = start.saturating_sub(delay_days).max(1);
            let Some((m, t)) = traj.covariates(day) else { continue };
            let lambda = rate(m, t);
            let count = if lambda > 0.0 {
                Poisson::new(lambda).map(|p| p.sample(&mut rng) as u32).unwrap_or(0)
            } else {
                0
            };
            entries.push(CaseEntry { year, week: w, count });
        }
    }
    CaseSeries::new(location_id, entries).expect("generated weeks are unique")
}

/// Draws weekly counts `Poisson(simulated weekly new infections)`.
pub fn sample_cases_from_incidence(
    location_id: &str,
    trajectories: &BTreeMap<i32, SimulationTrajectory>,
    convention: WeekConvention,
    weeks: std::ops::RangeInclusive<u32>,
    seed: u64,
) -> CaseSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for (&year, traj) in trajectories {
        let inc = traj.weekly_incidence(convention, weeks.clone());
        for (w, lambda) in weeks.clone().zip(inc) {
            let count = if lambda > 0.0 {
                Poisson::new(lambda).map(|p| p.sample(&mut rng) as u32).unwrap_or(0)
            } else {
                0
            };
            entries.push(CaseEntry { year, week: w, count });
        }
    }
    CaseSeries::new(location_id, entries).expect("generated weeks are unique")
}

/// Recipe for a complete synthetic county: climate, model and a known
/// rate bump placed on the simulated `(M, T)` cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticCounty {
    pub climate: SyntheticClimate,
    pub params: ModelParams,
    pub settings: ForecastSettings,
    /// Expected weekly cases at the bump centre.
    pub peak: f64,
    pub m_quantile: f64,
    pub t_quantile: f64,
    pub width_fraction: f64,
    pub case_seed: u64,
}

impl Default for SyntheticCounty {
    fn default() -> Self {
        Self {
            climate: SyntheticClimate::default(),
            params: ModelParams::default(),
            settings: ForecastSettings::default(),
            peak: 3.0,
            m_quantile: 0.75,
            t_quantile: 0.75,
            width_fraction: 0.2,
            case_seed: 31,
        }
    }
}

/// A generated county together with the truth used to draw its cases.
#[derive(Debug, Clone)]
pub struct GeneratedCounty {
    pub county: County,
    pub trajectories: BTreeMap<i32, SimulationTrajectory>,
    pub rate: BumpRate,
}

impl SyntheticCounty {
    pub fn generate(&self) -> crate::Result<GeneratedCounty> {
        let temps = self.climate.generate();
        let years = temps.full_years();
        let trajectories = simulate_years(&self.params, &temps, &years, &self.settings)?;
        let s = &self.settings;
        let season = s.week_convention.week_start(self.climate.start_year, s.first_week)
            ..=s.week_convention.week_start(self.climate.start_year, s.last_week);
        let rate = BumpRate::fitted_to(&trajectories, season, self.peak, self.m_quantile, self.t_quantile, self.width_fraction);
        let cases = sample_cases(
            &self.climate.location_id,
            &trajectories,
            |m, t| rate.eval(m, t),
            s.week_convention,
            s.weeks(),
            s.delay_days,
            self.case_seed,
        );
        Ok(GeneratedCounty {
            county: County {
                params: self.params.clone(),
                temps,
                cases,
            },
            trajectories,
            rate,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn climate_is_deterministic_and_gap_free() {
        let c = SyntheticClimate {
            start_year: 2020,
            end_year: 2021,
            ..Default::default()
        };
        let a = c.generate();
        let b = c.generate();
        assert_eq!(a, b);
        assert_eq!(a.len(), 366 + 365);
        assert_eq!(a.full_years(), vec![2020, 2021]);
        let summer: f64 = a.year(2021).unwrap().temps[180..210].iter().sum::<f64>() / 30.0;
        let winter: f64 = a.year(2021).unwrap().temps[0..30].iter().sum::<f64>() / 30.0;
        assert!(summer > winter + 6.0);
    }

    #[test]
    fn bump_peaks_at_center() {
        let g = BumpRate {
            peak: 3.0,
            m_center: 10.0,
            m_width: 2.0,
            t_center: 5.0,
            t_width: 1.0,
        };
        assert_eq!(g.eval(10.0, 5.0), 3.0);
        assert!(g.eval(12.0, 5.0) < 3.0);
    }
}
