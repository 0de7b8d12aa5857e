use std::io::Write;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::metric::{normalized_cumulative_temperature, ThermalMetric};
use super::{CompartmentState, ModelError, ModelParams, COMPARTMENT_NAMES};
use crate::calendar::WeekConvention;
use crate::ingest::TemperatureSeries;

/// Relative undershoot below zero that is silently clamped after an RK4 step.
pub const CLAMP_TOLERANCE: f64 = 1e-6;

/// Trait values for one day; temperature is held constant within a day.
#[derive(Debug, Clone, Copy)]
struct DailyRates {
    egg_laying: f64,
    development: f64,
    aquatic_loss: f64,
    adult_mortality: f64,
    biting: f64,
    competence: f64,
    extrinsic: f64,
}

impl DailyRates {
    fn at(params: &ModelParams, temp: f64) -> Self {
        let tr = &params.traits;
        let development = tr.aquatic_development.eval(temp);
        // survivors emerge at `development`; the rest die while developing
        let survival = tr.aquatic_survival.eval(temp).clamp(1e-3, 1.0);
        let lifespan = tr.adult_lifespan.eval(temp).max(params.min_lifespan);
        Self {
            egg_laying: tr.egg_laying.eval(temp),
            development,
            aquatic_loss: development / survival,
            adult_mortality: 1.0 / lifespan,
            biting: tr.biting_rate.eval(temp),
            competence: tr.vector_competence.eval(temp).min(1.0),
            extrinsic: tr.extrinsic_incubation.eval(temp),
        }
    }
}

fn rhs(p: &ModelParams, r: &DailyRates, y: &[f64; 13]) -> [f64; 13] {
    let [s_h, e_h, i_h, r_h, egg, a_m, s_m, e_m, i_m, s_b, e_b, i_b, r_b] = *y;
    let n_h = s_h + e_h + i_h + r_h;
    let n_m = s_m + e_m + i_m;
    let n_b = s_b + e_b + i_b + r_b;

    let recruitment = p.egg_hatch_rate * egg * (1.0 - a_m / p.carrying_capacity).max(0.0);
    let emergence = r.development * a_m;

    let force_m = if n_b > 0.0 { r.biting * r.competence * i_b / n_b } else { 0.0 };
    let force_b = if n_b > 0.0 {
        r.biting * p.bird.transmission_prob * i_m / n_b + p.bird.introduction_rate
    } else {
        0.0
    };
    let force_h = if n_h > 0.0 {
        p.human.spillover_coefficient * r.biting * i_m / n_h
    } else {
        0.0
    };
    let mu = r.adult_mortality;
    let turn = p.bird.turnover_rate;

    [
        -force_h * s_h,
        force_h * s_h - p.human.incubation_rate * e_h,
        p.human.incubation_rate * e_h - p.human.recovery_rate * i_h,
        p.human.recovery_rate * i_h,
        r.egg_laying * n_m - (p.egg_hatch_rate + p.egg_mortality) * egg,
        recruitment - r.aquatic_loss * a_m,
        emergence - force_m * s_m - mu * s_m,
        force_m * s_m - (r.extrinsic + mu) * e_m,
        r.extrinsic * e_m - mu * i_m,
        turn * n_b - force_b * s_b - turn * s_b,
        force_b * s_b - (p.bird.incubation_rate + turn) * e_b,
        p.bird.incubation_rate * e_b - (p.bird.recovery_rate + turn) * i_b,
        p.bird.recovery_rate * i_b - turn * r_b,
    ]
}

fn axpy(y: &[f64; 13], h: f64, k: &[f64; 13]) -> [f64; 13] {
    let mut out = *y;
    for (o, kv) in out.iter_mut().zip(k) {
        *o += h * kv;
    }
    out
}

fn rk4_step(p: &ModelParams, r: &DailyRates, y: &[f64; 13], h: f64) -> [f64; 13] {
    let k1 = rhs(p, r, y);
    let k2 = rhs(p, r, &axpy(y, 0.5 * h, &k1));
    let k3 = rhs(p, r, &axpy(y, 0.5 * h, &k2));
    let k4 = rhs(p, r, &axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..13 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Daily output of [`simulate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrajectory {
    pub start_date: NaiveDate,
    /// End-of-day state for each simulated day.
    pub states: Vec<CompartmentState>,
    /// Adult mosquito abundance `S_M + E_M + I_M` per day.
    pub abundance: Vec<f64>,
    /// Normalized cumulative temperature per day.
    pub thermal: Vec<f64>,
    /// New human infections per day (loss from `S_H`).
    pub incidence: Vec<f64>,
    /// Largest relative undershoot clamped to zero during integration.
    pub max_clamp: f64,
}

impl SimulationTrajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn date(&self, index: usize) -> NaiveDate {
        self.start_date + Duration::days(index as i64)
    }

    /// Index of a 1-based day-of-year, assuming the trajectory starts Jan 1.
    fn idx(&self, doy: u32) -> Option<usize> {
        let i = doy.checked_sub(1)? as usize;
        (i < self.len()).then_some(i)
    }

    /// `(M, T)` on a 1-based day-of-year.
    pub fn covariates(&self, doy: u32) -> Option<(f64, f64)> {
        self.idx(doy).map(|i| (self.abundance[i], self.thermal[i]))
    }

    pub fn year(&self) -> i32 {
        self.start_date.year()
    }

    /// New infections summed over each week in `weeks`.
    pub fn weekly_incidence(&self, convention: WeekConvention, weeks: std::ops::RangeInclusive<u32>) -> Vec<f64> {
        let year = self.year();
        weeks
            .map(|w| match convention.week_days(year, w) {
                Some((a, b)) => (a..=b).filter_map(|d| self.idx(d)).map(|i| self.incidence[i]).sum(),
                None => 0.0,
            })
            .collect()
    }
}

/// Integrates the model over every day of `temps` with fixed-step RK4.
pub fn simulate(
    params: &ModelParams,
    temps: &TemperatureSeries,
    init: &CompartmentState,
    dt: f64,
    metric: ThermalMetric,
) -> Result<SimulationTrajectory, ModelError> {
    params.validate()?;
    init.validate()?;
    let steps = (1.0 / dt).round();
    if !(dt > 0.0) || steps < 1.0 || (steps * dt - 1.0).abs() > 1e-9 {
        return Err(ModelError::InvalidStep(dt));
    }
    let steps = steps as usize;

    let mut y = init.to_array();
    let mut states = Vec::with_capacity(temps.len());
    let mut incidence = Vec::with_capacity(temps.len());
    let mut max_clamp: f64 = 0.0;

    for (day, &temp) in temps.temps.iter().enumerate() {
        let rates = DailyRates::at(params, temp);
        let s_h_start = y[0];
        for _ in 0..steps {
            y = rk4_step(params, &rates, &y, dt);
            if y.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFiniteState(day + 1));
            }
            let human_scale = (y[0] + y[1] + y[2] + y[3]).max(1.0);
            let mosquito_scale = (y[4] + y[5] + y[6] + y[7] + y[8]).max(params.carrying_capacity);
            let bird_scale = (y[9] + y[10] + y[11] + y[12]).max(1.0);
            for (i, v) in y.iter_mut().enumerate() {
                if *v < 0.0 {
                    let scale = match i {
                        0..=3 => human_scale,
                        4..=8 => mosquito_scale,
                        _ => bird_scale,
                    };
                    let rel = -*v / scale;
                    if rel > CLAMP_TOLERANCE {
                        return Err(ModelError::NegativeStateUnrecoverable(day + 1));
                    }
                    max_clamp = max_clamp.max(rel);
                    *v = 0.0;
                }
            }
        }
        incidence.push((s_h_start - y[0]).max(0.0));
        states.push(CompartmentState::from_array(&y));
    }
    if max_clamp > 0.0 {
        log::debug!("clamped relative undershoot up to {max_clamp:e}");
    }

    let abundance = states.iter().map(CompartmentState::adults).collect();
    let thermal = normalized_cumulative_temperature(temps, metric);
    Ok(SimulationTrajectory {
        start_date: temps.start_date,
        states,
        abundance,
        thermal,
        incidence,
        max_clamp,
    })
}

/// CSV export: `date`, each compartment, `M`, `T`.
pub fn write_trajectory_csv<W: Write>(traj: &SimulationTrajectory, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["date".to_string()];
    header.extend(COMPARTMENT_NAMES.iter().map(|s| s.to_string()));
    header.push("M".into());
    header.push("T".into());
    w.write_record(&header)?;
    for (i, s) in traj.states.iter().enumerate() {
        let mut row = vec![traj.date(i).format("%Y-%m-%d").to_string()];
        row.extend(s.to_array().iter().map(|v| v.to_string()));
        row.push(traj.abundance[i].to_string());
        row.push(traj.thermal[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_year(temp: f64) -> TemperatureSeries {
        TemperatureSeries::new("x", NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(), vec![temp; 365])
    }

    /// Independent explicit-Euler reference with its own right-hand side.
    fn euler_reference(p: &ModelParams, temps: &[f64], init: &CompartmentState, dt: f64) -> Vec<f64> {
        let steps = (1.0 / dt).round() as usize;
        let mut s = *init;
        let mut m = Vec::new();
        for &t in temps {
            let tr = &p.traits;
            let dev = tr.aquatic_development.eval(t);
            let surv = tr.aquatic_survival.eval(t).clamp(1e-3, 1.0);
            let mu = 1.0 / tr.adult_lifespan.eval(t).max(p.min_lifespan);
            let efd = tr.egg_laying.eval(t);
            for _ in 0..steps {
                let n_m = s.s_m + s.e_m + s.i_m;
                let d_egg = efd * n_m - (p.egg_hatch_rate + p.egg_mortality) * s.egg;
                let d_a = p.egg_hatch_rate * s.egg * (1.0 - s.a_m / p.carrying_capacity).max(0.0) - dev / surv * s.a_m;
                let d_s = dev * s.a_m - mu * s.s_m;
                s.egg += dt * d_egg;
                s.a_m += dt * d_a;
                s.s_m += dt * d_s;
            }
            m.push(s.s_m + s.e_m + s.i_m);
        }
        m
    }

    #[test]
    fn zero_mosquitoes_stay_zero() {
        let init = CompartmentState {
            s_h: 1000.0,
            s_b: 100.0,
            ..Default::default()
        };
        let traj = simulate(&ModelParams::default(), &constant_year(25.0), &init, 0.1, ThermalMetric::YearToDate).unwrap();
        assert!(traj.abundance.iter().all(|&m| m == 0.0));
        assert_eq!(traj.len(), 365);
    }

    #[test]
    fn no_infection_source_keeps_humans_uninfected() {
        let mut p = ModelParams::default();
        p.bird.introduction_rate = 0.0;
        let traj = simulate(&p, &constant_year(25.0), &CompartmentState::seasonal_default(), 0.1, ThermalMetric::YearToDate).unwrap();
        assert!(traj.states.iter().all(|s| s.e_h == 0.0 && s.i_h == 0.0));
    }

    #[test]
    fn aquatic_stage_bounded_by_carrying_capacity() {
        let p = ModelParams::default();
        let init = CompartmentState::seasonal_default();
        let traj = simulate(&p, &constant_year(25.0), &init, 0.1, ThermalMetric::YearToDate).unwrap();
        let k = p.carrying_capacity;
        assert!(traj.states.iter().all(|s| s.a_m <= k * 1.05));
        let last = traj.states.last().unwrap().a_m;
        let before = traj.states[300].a_m;
        assert!((last - before).abs() / last < 1e-3, "not settled: {before} vs {last}");

        let reference = euler_reference(&p, &constant_year(25.0).temps, &init, 0.01);
        for (day, (a, b)) in traj.abundance.iter().zip(&reference).enumerate().skip(30) {
            assert!((a - b).abs() / b < 0.01, "day {day}: rk4 {a} euler {b}");
        }
    }

    #[test]
    fn rejects_bad_step() {
        let r = simulate(
            &ModelParams::default(),
            &constant_year(25.0),
            &CompartmentState::seasonal_default(),
            0.3,
            ThermalMetric::YearToDate,
        );
        assert!(matches!(r, Err(ModelError::InvalidStep(_))));
    }

    #[test]
    fn trajectory_csv_has_header_and_rows() {
        let traj = simulate(
            &ModelParams::default(),
            &constant_year(20.0),
            &CompartmentState::seasonal_default(),
            0.5,
            ThermalMetric::YearToDate,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("date,S_H,E_H"));
        assert_eq!(lines.count(), 365);
    }
}
