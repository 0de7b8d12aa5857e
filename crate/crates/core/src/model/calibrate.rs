//! Carrying-capacity estimation from weekly human case counts.
//!
//! The primary scheme is an iterated ensemble Kalman update on `ln K`
//! (ensemble smoother with multiple data assimilation): every iteration
//! simulates each member over all training years, then nudges members
//! toward perturbed observations with inflated observation noise. A
//! log-spaced grid search over `K` is available as a fallback.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{simulate, CompartmentState, ModelError, ModelParams, ThermalMetric};
use crate::calendar::WeekConvention;
use crate::ingest::{CaseSeries, TemperatureSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMethod {
    #[default]
    EnsembleKalman,
    GridSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationSettings {
    pub method: CalibrationMethod,
    pub init: CompartmentState,
    pub dt: f64,
    pub metric: ThermalMetric,
    pub week_convention: WeekConvention,
    pub first_week: u32,
    pub last_week: u32,
    /// Training years; empty means every full temperature year that also
    /// appears in the case record.
    pub years: Vec<i32>,
    pub ensemble_size: usize,
    pub iterations: usize,
    /// Prior standard deviation of `ln K` around the starting value.
    pub prior_log_sd: f64,
    /// Ensemble variance of `ln K` below which assimilation is declared collapsed.
    pub variance_floor: f64,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
    pub seed: u64,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            method: CalibrationMethod::EnsembleKalman,
            init: CompartmentState::seasonal_default(),
            dt: 0.1,
            metric: ThermalMetric::YearToDate,
            week_convention: WeekConvention::SevenDayBlocks,
            first_week: 1,
            last_week: 52,
            years: Vec::new(),
            ensemble_size: 32,
            iterations: 6,
            prior_log_sd: 1.0,
            variance_floor: 1e-10,
            grid_min: 1e3,
            grid_max: 1e7,
            grid_points: 41,
            seed: 7,
        }
    }
}

impl CalibrationSettings {
    /// The grid used by the fallback search.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.grid_points.max(2);
        let (lo, hi) = (self.grid_min.ln(), self.grid_max.ln());
        (0..n)
            .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarryingCapacityEstimate {
    pub method: CalibrationMethod,
    /// Point estimate, `exp(mean ln K)` for the ensemble scheme.
    pub k: f64,
    pub log_k_mean: f64,
    pub log_k_variance: f64,
    /// Ensemble variance of `K` itself.
    pub k_variance: f64,
    pub iterations: usize,
    pub ensemble: Vec<f64>,
    /// `(K, NRMSE)` pairs evaluated by the grid search.
    pub grid_objective: Vec<(f64, f64)>,
}

struct Problem<'a> {
    params: &'a ModelParams,
    years: Vec<TemperatureSeries>,
    observed: Vec<f64>,
    settings: &'a CalibrationSettings,
}

impl Problem<'_> {
    fn predict(&self, k: f64) -> Result<Vec<f64>, ModelError> {
        let params = self.params.with_carrying_capacity(k);
        let s = self.settings;
        let mut out = Vec::with_capacity(self.observed.len());
        for temps in &self.years {
            let traj = simulate(&params, temps, &s.init, s.dt, s.metric)?;
            out.extend(traj.weekly_incidence(s.week_convention, s.first_week..=s.last_week));
        }
        Ok(out)
    }
}

fn nrmse_against(pred: &[f64], obs: &[f64]) -> f64 {
    let n = obs.len() as f64;
    let mse = pred.iter().zip(obs).map(|(p, o)| (p - o).powi(2)).sum::<f64>() / n;
    let mean = obs.iter().sum::<f64>() / n;
    mse.sqrt() / mean
}

pub fn calibrate_carrying_capacity(
    params: &ModelParams,
    temps: &TemperatureSeries,
    cases: &CaseSeries,
    settings: &CalibrationSettings,
) -> Result<CarryingCapacityEstimate, ModelError> {
    let years: Vec<i32> = if settings.years.is_empty() {
        let full = temps.full_years();
        cases.years().into_iter().filter(|y| full.contains(y)).collect()
    } else {
        settings.years.clone()
    };
    let mut observed = Vec::new();
    let mut year_temps = Vec::new();
    for &y in &years {
        year_temps.push(temps.year(y)?);
        observed.extend(
            cases
                .weekly_counts(y, settings.first_week..=settings.last_week)
                .into_iter()
                .map(f64::from),
        );
    }
    if observed.iter().all(|&c| c == 0.0) {
        return Err(ModelError::NoCasesInTraining);
    }
    let problem = Problem {
        params,
        years: year_temps,
        observed,
        settings,
    };
    match settings.method {
        CalibrationMethod::EnsembleKalman => ensemble_kalman(&problem),
        CalibrationMethod::GridSearch => grid_search(&problem),
    }
}

fn grid_search(problem: &Problem) -> Result<CarryingCapacityEstimate, ModelError> {
    let grid = problem.settings.grid();
    let scores: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&k| problem.predict(k).map(|p| (k, nrmse_against(&p, &problem.observed))))
        .collect::<Result<_, _>>()?;
    let &(best_k, _) = scores
        .iter()
        .filter(|(_, s)| s.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(ModelError::DivergedAssimilation(f64::NAN))?;
    Ok(CarryingCapacityEstimate {
        method: CalibrationMethod::GridSearch,
        k: best_k,
        log_k_mean: best_k.ln(),
        log_k_variance: 0.0,
        k_variance: 0.0,
        iterations: 1,
        ensemble: vec![best_k],
        grid_objective: scores,
    })
}

fn ensemble_kalman(problem: &Problem) -> Result<CarryingCapacityEstimate, ModelError> {
    let s = problem.settings;
    let n = s.ensemble_size.max(3);
    let iterations = s.iterations.max(1);
    let inflation = iterations as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let prior_mean = problem.params.carrying_capacity.ln();
    let mut theta: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            prior_mean + s.prior_log_sd * z
        })
        .collect();

    let d = &problem.observed;
    let m = d.len();
    let noise_var: Vec<f64> = d.iter().map(|&o| o.max(1.0) * inflation).collect();

    for _ in 0..iterations {
        let preds: Vec<Vec<f64>> = theta
            .par_iter()
            .map(|&t| problem.predict(t.exp()))
            .collect::<Result<_, _>>()?;

        let scale = 1.0 / ((n - 1) as f64).sqrt();
        let theta_mean = theta.iter().sum::<f64>() / n as f64;
        let theta_anom: Vec<f64> = theta.iter().map(|t| (t - theta_mean) * scale).collect();
        let mut y_mean = vec![0.0; m];
        for p in &preds {
            for (acc, v) in y_mean.iter_mut().zip(p) {
                *acc += v / n as f64;
            }
        }
        let a = DMatrix::from_fn(m, n, |i, j| (preds[j][i] - y_mean[i]) * scale);
        let r_inv = DVector::from_iterator(m, noise_var.iter().map(|v| 1.0 / v));
        // Woodbury: (A Aᵀ + R)⁻¹ = R⁻¹ − R⁻¹ A (I + Aᵀ R⁻¹ A)⁻¹ Aᵀ R⁻¹
        let r_inv_a = DMatrix::from_fn(m, n, |i, j| r_inv[i] * a[(i, j)]);
        let core = DMatrix::<f64>::identity(n, n) + a.transpose() * &r_inv_a;
        let core = core
            .cholesky()
            .ok_or(ModelError::DivergedAssimilation(f64::NAN))?;

        let mut updated = theta.clone();
        for j in 0..n {
            let innov = DVector::from_fn(m, |i, _| {
                let e: f64 = StandardNormal.sample(&mut rng);
                d[i] + noise_var[i].sqrt() * e - preds[j][i]
            });
            let u = innov.component_mul(&r_inv);
            let z = core.solve(&(a.transpose() * &u));
            let v = &u - &r_inv_a * z;
            let gain_term = a.transpose() * v;
            let delta: f64 = theta_anom.iter().zip(gain_term.iter()).map(|(x, y)| x * y).sum();
            updated[j] = (theta[j] + delta).clamp(s.grid_min.ln() - 5.0, s.grid_max.ln() + 5.0);
        }
        theta = updated;
        let var = variance(&theta);
        if var < s.variance_floor {
            return Err(ModelError::DivergedAssimilation(var));
        }
    }

    let log_k_mean = theta.iter().sum::<f64>() / n as f64;
    let ks: Vec<f64> = theta.iter().map(|t| t.exp()).collect();
    Ok(CarryingCapacityEstimate {
        method: CalibrationMethod::EnsembleKalman,
        k: log_k_mean.exp(),
        log_k_mean,
        log_k_variance: variance(&theta),
        k_variance: variance(&ks),
        iterations,
        ensemble: ks,
        grid_objective: Vec::new(),
    })
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::CaseEntry;
    use chrono::NaiveDate;

    #[test]
    fn all_zero_cases_rejected() {
        let temps = TemperatureSeries::new("x", NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), vec![20.0; 366]);
        let cases = CaseSeries::new(
            "x",
            vec![CaseEntry {
                year: 2020,
                week: 30,
                count: 0,
            }],
        )
        .unwrap();
        let r = calibrate_carrying_capacity(&ModelParams::default(), &temps, &cases, &CalibrationSettings::default());
        assert!(matches!(r, Err(ModelError::NoCasesInTraining)));
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = CalibrationSettings::default().grid();
        assert_eq!(g.len(), 41);
        assert!((g[0] - 1e3).abs() < 1e-6);
        assert!((g[40] - 1e7).abs() < 1e-3);
        assert!((g[20] - 1e5).abs() < 1e-4);
    }
}
