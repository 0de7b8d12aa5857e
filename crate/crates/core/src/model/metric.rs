use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::calendar::days_in_year;
use crate::ingest::TemperatureSeries;

/// How daily temperatures are integrated into the thermal covariate `T`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThermalMetric {
    /// Year-to-date sum of daily means divided by the number of days in the
    /// year; resets every January 1.
    #[default]
    YearToDate,
    /// Year-to-date mean of daily temperatures.
    RunningMean,
    /// Degree-days above `base` over the trailing `window` days, divided by
    /// the window length.
    WindowDegreeDays { window: u32, base: f64 },
}

/// Per-day `T` values (°C) for every day of `temps`.
pub fn normalized_cumulative_temperature(temps: &TemperatureSeries, metric: ThermalMetric) -> Vec<f64> {
    let mut out = Vec::with_capacity(temps.len());
    match metric {
        ThermalMetric::YearToDate | ThermalMetric::RunningMean => {
            let mut sum = 0.0;
            let mut year = None;
            for (i, &t) in temps.temps.iter().enumerate() {
                let date = temps.date(i);
                if year != Some(date.year()) {
                    year = Some(date.year());
                    sum = 0.0;
                }
                sum += t;
                let norm = match metric {
                    ThermalMetric::YearToDate => days_in_year(date.year()) as f64,
                    _ => date.ordinal() as f64,
                };
                out.push(sum / norm);
            }
        }
        ThermalMetric::WindowDegreeDays { window, base } => {
            let w = window.max(1) as usize;
            let mut acc = 0.0;
            for (i, &t) in temps.temps.iter().enumerate() {
                acc += (t - base).max(0.0);
                if i >= w {
                    acc -= (temps.temps[i - w] - base).max(0.0);
                }
                out.push(acc.max(0.0) / w as f64);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn year(temps: Vec<f64>) -> TemperatureSeries {
        TemperatureSeries::new("x", NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(), temps)
    }

    #[test]
    fn constant_twenty_on_day_200() {
        let t = normalized_cumulative_temperature(&year(vec![20.0; 365]), ThermalMetric::YearToDate);
        let oracle: f64 = (0..200).map(|_| 20.0).sum::<f64>() / 365.0;
        assert!((t[199] - oracle).abs() < 1e-12);
        assert!((t[199] - 10.958_904_109_589_04).abs() < 1e-10);
    }

    #[test]
    fn first_day() {
        let mut temps = vec![0.0; 365];
        temps[0] = 15.0;
        let t = normalized_cumulative_temperature(&year(temps), ThermalMetric::YearToDate);
        assert!((t[0] - 15.0 / 365.0).abs() < 1e-15);
    }

    #[test]
    fn zeros_give_zero() {
        let t = normalized_cumulative_temperature(&year(vec![0.0; 365]), ThermalMetric::YearToDate);
        assert!(t.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn resets_each_year() {
        let s = TemperatureSeries::new("x", NaiveDate::from_ymd_opt(2023, 12, 31).unwrap(), vec![10.0, 10.0]);
        let t = normalized_cumulative_temperature(&s, ThermalMetric::YearToDate);
        assert!((t[0] - 10.0 / 365.0).abs() < 1e-12);
        assert!((t[1] - 10.0 / 366.0).abs() < 1e-12);
    }

    #[test]
    fn alternative_strategies() {
        let s = year(vec![12.0; 365]);
        let rm = normalized_cumulative_temperature(&s, ThermalMetric::RunningMean);
        assert!(rm.iter().all(|&v| (v - 12.0).abs() < 1e-12));
        let dd = normalized_cumulative_temperature(&s, ThermalMetric::WindowDegreeDays { window: 10, base: 10.0 });
        assert!((dd[0] - 0.2).abs() < 1e-12);
        assert!((dd[100] - 2.0).abs() < 1e-12);
    }
}
