//! Acceptance criteria, run as a plain binary so every criterion prints one
//! PASS/FAIL line regardless of output capture. Exits nonzero on any failure.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::function::erf::erfc;

use wnvcast::calendar::days_in_year;
use wnvcast::config::RunConfig;
use wnvcast::eval::{
    aggregate_accuracy, log_score, loyo_cv, score_interval, BinScheme, LOG_SCORE_FLOOR,
};
use wnvcast::ingest::TemperatureSeries;
use wnvcast::model::{
    calibrate_carrying_capacity, simulate, CalibrationMethod, CalibrationSettings, CompartmentState, ModelParams,
    SimulationTrajectory, ThermalMetric,
};
use wnvcast::onset::{
    classify_days, hdr_region, DensitySurface, IntervalLength, OnsetForecast, RiskRegion, TimelineDay,
};
use wnvcast::pipeline::{fit_onset_model, fit_rate_model, simulate_years, County, ForecastSettings};
use wnvcast::severity::{fit_rate_surface, CasePoint, RateSettings};
use wnvcast::synth::{sample_cases_from_incidence, SyntheticClimate, SyntheticCounty};
use wnvcast::trend::{annual_risky_days, mann_kendall, trend_report};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).join("config.toml")
}

fn load_fixture(name: &str) -> Result<(RunConfig, County), String> {
    let cfg = RunConfig::load(fixture(name)).map_err(|e| e.to_string())?;
    let county = cfg.load_county().map_err(|e| e.to_string())?;
    Ok((cfg, county))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

// ---- 1 ---------------------------------------------------------------

fn oracle_scott(points: &[(f64, f64)], w: &[f64]) -> (f64, f64) {
    let sw: f64 = w.iter().sum();
    let sw2: f64 = w.iter().map(|x| x * x).sum();
    let n_eff = sw * sw / sw2;
    let axis = |f: &dyn Fn(&(f64, f64)) -> f64| {
        let mean = points.iter().zip(w).map(|(p, wi)| wi * f(p)).sum::<f64>() / sw;
        let var = points.iter().zip(w).map(|(p, wi)| wi * (f(p) - mean).powi(2)).sum::<f64>() / (sw - sw2 / sw);
        var.sqrt() * n_eff.powf(-1.0 / 6.0)
    };
    (axis(&|p| p.0), axis(&|p| p.1))
}

fn kde_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let nm = Normal::new(2.0e5, 4.0e4).unwrap();
    let nt = Normal::new(12.0, 2.5).unwrap();
    let pts: Vec<(f64, f64)> = (0..500).map(|_| (nm.sample(&mut rng), nt.sample(&mut rng))).collect();
    let queries: Vec<(f64, f64)> = (0..100)
        .map(|_| (rng.random_range(1.2e5..2.8e5), rng.random_range(8.0..16.0)))
        .collect();

    let surface = DensitySurface::fit(&pts, 256).map_err(|e| e.to_string())?;
    let (hm, ht) = oracle_scott(&pts, &vec![1.0; pts.len()]);
    let mut worst_kde: f64 = 0.0;
    for &(m, t) in &queries {
        let mut s = 0.0;
        for &(pm, pt) in &pts {
            let zm = (m - pm) / hm;
            let zt = (t - pt) / ht;
            s += (-0.5 * (zm * zm + zt * zt)).exp() / (2.0 * std::f64::consts::PI);
        }
        let oracle = s / (pts.len() as f64 * hm * ht);
        worst_kde = worst_kde.max(rel(surface.density(m, t), oracle));
    }

    let cases: Vec<CasePoint> = pts
        .iter()
        .map(|&(m, t)| CasePoint {
            m,
            t,
            count: 1.0 + rng.random_range(0..5) as f64,
        })
        .collect();
    let background: Vec<(f64, f64)> = (0..2000).map(|_| (nm.sample(&mut rng), nt.sample(&mut rng))).collect();
    let settings = RateSettings::default();
    let rate = fit_rate_surface(&cases, &background, 14, &settings).map_err(|e| e.to_string())?;
    let xy: Vec<(f64, f64)> = cases.iter().map(|c| (c.m, c.t)).collect();
    let w: Vec<f64> = cases.iter().map(|c| c.count).collect();
    let (hm, ht) = oracle_scott(&xy, &w);
    let k = |z: f64| if z.abs() > 4.0 { 0.0 } else { (-0.5 * z * z).exp() };
    let mut worst_rate: f64 = 0.0;
    for &(m, t) in &queries {
        let num: f64 = cases.iter().map(|c| c.count * k((m - c.m) / hm) * k((t - c.t) / ht)).sum();
        let den: f64 = background.iter().map(|b| k((m - b.0) / hm) * k((t - b.1) / ht)).sum();
        let oracle = settings.interval_days * num / den;
        worst_rate = worst_rate.max(rel(rate.eval_exact(m, t), oracle));
    }
    check(worst_kde <= 1e-12 && worst_rate <= 1e-12, || {
        format!("max relative error density {worst_kde:.2e}, rate {worst_rate:.2e}")
    })?;
    Ok(format!("max relative error density {worst_kde:.1e}, rate {worst_rate:.1e}"))
}

// ---- 2 ---------------------------------------------------------------

fn hdr_calibration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2000);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let pts: Vec<(f64, f64)> = (0..2000).map(|_| (unit.sample(&mut rng), unit.sample(&mut rng))).collect();
    let mut notes = Vec::new();
    for grid in [128, 256, 512] {
        let surface = DensitySurface::fit(&pts, grid).map_err(|e| e.to_string())?;
        for alpha in [0.5, 0.7, 0.9] {
            let region = hdr_region(&surface, alpha).map_err(|e| e.to_string())?;
            let tol = 0.01 + surface.max_cell_mass();
            check((region.mass - alpha).abs() <= tol, || {
                format!("grid {grid} alpha {alpha}: mass {:.4} outside ±{tol:.4}", region.mass)
            })?;
            // The KDE estimates the sample law convolved with the kernel, a
            // Gaussian with per-axis variance 1 + h².
            let h = surface.bandwidth;
            let q = -2.0 * (1.0 - alpha).ln();
            let raw = std::f64::consts::PI * q;
            let smoothed = raw * ((1.0 + h.m * h.m) * (1.0 + h.t * h.t)).sqrt();
            let err = rel(region.area(), smoothed);
            check(err <= 0.10, || {
                format!("grid {grid} alpha {alpha}: area {:.3} vs analytic {smoothed:.3}", region.area())
            })?;
            if grid == 256 {
                notes.push(format!(
                    "a{alpha}: mass {:.3}, area err {:.1}% (unsmoothed {:.1}%)",
                    region.mass,
                    100.0 * err,
                    100.0 * rel(region.area(), raw)
                ));
            }
        }
    }
    Ok(notes.join(", "))
}

// ---- 3 ---------------------------------------------------------------

fn nested_forecasts(surface: &DensitySurface, regions: &[RiskRegion], trajs: &[&SimulationTrajectory]) -> Result<usize, String> {
    for pair in regions.windows(2) {
        check(pair[0].is_subset_of(&pair[1]), || {
            format!("region {} not inside {}", pair[0].alpha, pair[1].alpha)
        })?;
    }
    let mut checked = 0;
    for traj in trajs {
        let n = days_in_year(traj.year());
        let fs: Vec<OnsetForecast> = regions
            .iter()
            .map(|r| classify_days(surface, r, traj, (1, n)))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        for pair in fs.windows(2) {
            let inner = pair[0].timeline.iter().zip(&pair[1].timeline);
            check(inner.clone().all(|(a, b)| !a.risky || b.risky), || {
                format!("{}: risky days at alpha {} not nested", traj.year(), pair[0].alpha)
            })?;
            for mode in [IntervalLength::Hull, IntervalLength::RiskyDays] {
                check(pair[0].length(mode) <= pair[1].length(mode), || {
                    format!("{}: {mode:?} length decreases after alpha {}", traj.year(), pair[0].alpha)
                })?;
            }
            checked += 1;
        }
    }
    Ok(checked)
}

fn nesting_monotonicity() -> Outcome {
    let mut pairs = 0;
    for name in ["synthetic", "warming"] {
        let (cfg, county) = load_fixture(name)?;
        let years = county.case_years();
        let trajs = simulate_years(&county.params, &county.temps, &county.years(), &cfg.forecast)
            .map_err(|e| e.to_string())?;
        for grid in [128, 256, 512] {
            let settings = ForecastSettings {
                onset_grid: grid,
                alphas: (1..=19).map(|k| k as f64 * 0.05).chain([0.99]).collect(),
                ..cfg.forecast.clone()
            };
            let model = fit_onset_model(&years, &trajs, &county.cases, &settings).map_err(|e| e.to_string())?;
            let all: Vec<&SimulationTrajectory> = trajs.values().collect();
            pairs += nested_forecasts(&model.surface, &model.regions, &all)?;
        }
    }
    // ties at the threshold must not break inclusion
    let flat: Vec<(f64, f64)> = (0..400).map(|k| ((k % 20) as f64, (k / 20) as f64)).collect();
    let surface = DensitySurface::fit(&flat, 128).map_err(|e| e.to_string())?;
    let regions: Vec<RiskRegion> = [0.3, 0.5, 0.7, 0.9]
        .iter()
        .map(|&a| hdr_region(&surface, a))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    pairs += nested_forecasts(&surface, &regions, &[])?;
    Ok(format!("{pairs} consecutive-alpha comparisons, grids 128/256/512"))
}

// ---- 4 ---------------------------------------------------------------

fn metric_identities() -> Outcome {
    let a_tilde = aggregate_accuracy(73.0, 26.0);
    check((a_tilde - 0.028).abs() <= 0.0005, || format!("aggregate accuracy {a_tilde}"))?;
    check((a_tilde - 0.73 / 26.0).abs() < 1e-15, || format!("aggregate accuracy {a_tilde}"))?;

    let start = 150;
    let timeline: Vec<TimelineDay> = (1..=365)
        .map(|day| TimelineDay {
            day,
            m: 0.0,
            t: 0.0,
            density: 0.0,
            risky: (start..start + 28).contains(&day),
        })
        .collect();
    let fc = OnsetForecast {
        year: 2007,
        alpha: 0.9,
        timeline,
        interval: Some((start, start + 27)),
    };
    let s = score_interval(&fc, start + 10, IntervalLength::Hull);
    check(s.captured && s.length == 28, || format!("{s:?}"))?;
    check((s.accuracy - 0.035).abs() <= 0.001, || format!("per-year accuracy {}", s.accuracy))?;
    let miss = score_interval(&fc, start + 40, IntervalLength::Hull);
    check(miss.accuracy == 0.0, || format!("missed year scored {}", miss.accuracy))?;
    Ok(format!("A~ = {a_tilde:.4}, A = {:.4}", s.accuracy))
}

// ---- 5 ---------------------------------------------------------------

fn log_score_logic() -> Outcome {
    let bins = BinScheme::unit(50);
    let zero = log_score(0.0, 5, &bins);
    check(zero == LOG_SCORE_FLOOR && zero == -10.0, || format!("lambda 0, observed 5 gave {zero}"))?;
    let mut notes = Vec::new();
    for lambda in [1.63_f64, 1.57, 1.12] {
        let got = log_score(lambda, 1, &bins);
        let want = (lambda * (-lambda).exp()).ln();
        check((got - want).abs() <= 1e-9, || format!("lambda {lambda}: {got} vs {want}"))?;
        notes.push(format!("{lambda}: {got:.4}"));
    }
    // open top bin collects the tail
    let top = log_score(40.0, 80, &bins);
    let p_top: f64 = 1.0 - (0..50).map(|k| wnvcast::eval::poisson_pmf(40.0, k)).sum::<f64>();
    check((top - p_top.ln()).abs() <= 1e-9, || format!("top bin {top} vs {}", p_top.ln()))?;
    Ok(format!("floor -10 exact; observed 1 -> {}", notes.join(", ")))
}

// ---- 6 ---------------------------------------------------------------

fn mann_kendall_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(4..=10);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
        let got = mann_kendall(&x, true).map_err(|e| e.to_string())?;

        let mut s = 0.0;
        let mut slopes = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if j > i {
                    s += (x[j] - x[i]).signum() * ((x[j] != x[i]) as i32 as f64);
                    slopes.push((x[j] - x[i]) / (j - i) as f64);
                }
            }
        }
        let mut groups: BTreeMap<i64, f64> = BTreeMap::new();
        for v in &x {
            *groups.entry(*v as i64).or_default() += 1.0;
        }
        let nf = n as f64;
        let ties: f64 = groups.values().map(|t| t * (t - 1.0) * (2.0 * t + 5.0)).sum();
        let var = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - ties) / 18.0;
        let z = if var > 0.0 {
            (s - s.signum()) / var.sqrt() * ((s != 0.0) as i32 as f64)
        } else {
            0.0
        };
        let p = erfc(z.abs() / std::f64::consts::SQRT_2);
        slopes.sort_by(f64::total_cmp);
        let m = slopes.len();
        let sen = if m % 2 == 1 {
            slopes[m / 2]
        } else {
            (slopes[m / 2 - 1] + slopes[m / 2]) / 2.0
        };
        for (label, a, b) in [
            ("S", got.s, s),
            ("var", got.var_s, var),
            ("z", got.z, z),
            ("p", got.p, p),
            ("sen", got.sen_slope, sen),
        ] {
            let d = (a - b).abs();
            check(d <= 1e-12, || format!("{label} differs by {d:e} on {x:?}"))?;
            worst = worst.max(d);
        }
    }
    Ok(format!("50 series, max abs difference {worst:.1e}"))
}

// ---- 7 ---------------------------------------------------------------

fn ode_conservation() -> Outcome {
    let temps = TemperatureSeries::new("const25", NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(), vec![25.0; 365]);
    let params = ModelParams::default();
    let init = CompartmentState::seasonal_default();
    let run = |dt| simulate(&params, &temps, &init, dt, ThermalMetric::YearToDate).map_err(|e| e.to_string());
    let coarse = run(0.1)?;
    let fine = run(0.05)?;
    let h0 = init.humans();
    let drift = coarse.states.iter().map(|s| (s.humans() - h0).abs() / h0).fold(0.0, f64::max);
    check(drift <= 1e-8, || format!("human total drift {drift:e}"))?;
    let m_coarse = coarse.abundance[364];
    let m_fine = fine.abundance[364];
    let change = rel(m_coarse, m_fine);
    check(change <= 1e-3, || format!("day-365 M changed by {:.4}%", 100.0 * change))?;
    check(coarse.incidence.iter().sum::<f64>() > 0.0, || "no transmission at 25 °C".into())?;
    let worst_day = coarse
        .abundance
        .iter()
        .zip(&fine.abundance)
        .map(|(a, b)| rel(*a, *b))
        .fold(0.0, f64::max);
    check(worst_day <= 1e-3, || format!("M changed by up to {:.4}% on some day", 100.0 * worst_day))?;
    Ok(format!(
        "drift {drift:.1e}, dt-halving change {:.1e}% at day 365, {:.1e}% worst day",
        100.0 * change,
        100.0 * worst_day
    ))
}

// ---- 8 ---------------------------------------------------------------

fn carrying_capacity_recovery() -> Outcome {
    let k_true = 1.0e5;
    let climate = SyntheticClimate {
        start_year: 2016,
        end_year: 2020,
        seed: 8,
        ..Default::default()
    };
    let temps = climate.generate();
    let truth = ModelParams::default().with_carrying_capacity(k_true);
    let settings = ForecastSettings::default();
    let years = temps.full_years();
    let trajs = simulate_years(&truth, &temps, &years, &settings).map_err(|e| e.to_string())?;
    let cases = sample_cases_from_incidence("k-test", &trajs, settings.week_convention, settings.weeks(), 88);
    let start = truth.with_carrying_capacity(3.0e4);

    let kalman = CalibrationSettings::default();
    let est = calibrate_carrying_capacity(&start, &temps, &cases, &kalman).map_err(|e| e.to_string())?;
    let ratio = est.k / k_true;
    check((0.5..=2.0).contains(&ratio), || format!("Kalman K = {:.3e}", est.k))?;

    let grid = CalibrationSettings {
        method: CalibrationMethod::GridSearch,
        ..Default::default()
    };
    let g = calibrate_carrying_capacity(&start, &temps, &cases, &grid).map_err(|e| e.to_string())?;
    let step = (grid.grid_max / grid.grid_min).ln() / (grid.grid_points - 1) as f64;
    let off = (g.k / k_true).ln().abs();
    check(off <= step + 1e-9, || format!("grid K = {:.3e} is {:.2} steps away", g.k, off / step))?;
    Ok(format!("Kalman K = {:.3e}, grid K = {:.3e}", est.k, g.k))
}

// ---- 9 ---------------------------------------------------------------

fn synthetic_loyo() -> Outcome {
    let spec = SyntheticCounty {
        climate: SyntheticClimate {
            start_year: 2015,
            end_year: 2024,
            seed: 9,
            ..Default::default()
        },
        ..Default::default()
    };
    let g = spec.generate().map_err(|e| e.to_string())?;
    let report = loyo_cv(&g.county, &spec.settings).map_err(|e| e.to_string())?;
    check(report.folds.len() == 10, || format!("{} folds", report.folds.len()))?;
    let betas: Vec<f64> = report.aggregates.iter().map(|a| a.beta).collect();
    check(betas.windows(2).all(|w| w[0] <= w[1]), || format!("beta not monotone: {betas:?}"))?;
    let ls = &report.summary.mean_log_score;
    let (model, null) = (ls.eco_epi.unwrap_or(f64::NAN), ls.null_poisson.unwrap_or(f64::NAN));
    check(model > null, || format!("log score model {model:.3} vs null {null:.3}"))?;
    let nr = &report.summary.mean_nrmse;
    let (m_nr, n_nr) = (nr.eco_epi.unwrap_or(f64::NAN), nr.null_poisson.unwrap_or(f64::NAN));
    check(m_nr < n_nr, || format!("NRMSE model {m_nr:.3} vs null {n_nr:.3}"))?;
    Ok(format!(
        "beta {:.0}..{:.0}%, log score {model:.2} vs {null:.2}, NRMSE {m_nr:.3} vs {n_nr:.3}",
        betas[0],
        betas[betas.len() - 1]
    ))
}

// ---- 10 --------------------------------------------------------------

fn trend_recovery() -> Outcome {
    let (cfg, county) = load_fixture("warming")?;
    let years = county.years();
    check(years.len() == 35, || format!("{} years in warming fixture", years.len()))?;
    let trajs = simulate_years(&county.params, &county.temps, &years, &cfg.forecast).map_err(|e| e.to_string())?;
    let rate = fit_rate_model(&county.case_years(), &trajs, &county.cases, &cfg.forecast).map_err(|e| e.to_string())?;
    let series = annual_risky_days(&rate, &trajs, cfg.forecast.risky_threshold).map_err(|e| e.to_string())?;
    let r = trend_report(&series, cfg.trend.continuity_correction).map_err(|e| e.to_string())?;
    check(r.ols.slope > 0.0 && r.ols.p < 0.05, || format!("OLS {:?}", r.ols))?;
    check(r.spearman.rho > 0.0 && r.spearman.p < 0.05, || format!("Spearman {:?}", r.spearman))?;
    check(r.mann_kendall.s > 0.0 && r.mann_kendall.p < 0.05, || format!("MK {:?}", r.mann_kendall))?;
    Ok(format!(
        "OLS {:.2}/yr p={:.1e}, Spearman {:.2} p={:.1e}, MK p={:.1e}",
        r.ols.slope, r.ols.p, r.spearman.rho, r.spearman.p, r.mann_kendall.p
    ))
}

fn main() {
    let criteria: [(u32, &str, u64, fn() -> Outcome); 10] = [
        (1, "KDE oracle equivalence", 5, kde_oracle),
        (2, "HDR calibration", 10, hdr_calibration),
        (3, "nesting and monotonicity", 300, nesting_monotonicity),
        (4, "metric identities", 1, metric_identities),
        (5, "log-score floor and bins", 1, log_score_logic),
        (6, "Mann-Kendall oracle", 2, mann_kendall_oracle),
        (7, "ODE conservation and convergence", 5, ode_conservation),
        (8, "carrying-capacity recovery", 120, carrying_capacity_recovery),
        (9, "synthetic LOYO", 300, synthetic_loyo),
        (10, "trend recovery", 180, trend_recovery),
    ];
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        let t0 = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = t0.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(limit) => {
                Err(format!("{detail}; took {:.1} s, limit {limit} s", elapsed.as_secs_f64()))
            }
            o => o,
        };
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail} ({:.2} s)", elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {why} ({:.2} s)", elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
