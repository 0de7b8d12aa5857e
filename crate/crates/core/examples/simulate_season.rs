//! Simulating one year of the transmission model from daily temperatures.

use wnvcast::config::RunConfig;
use wnvcast::model::simulate;

const CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/synthetic/config.toml");

fn main() -> wnvcast::Result<()> {
    let cfg = RunConfig::load(CONFIG)?;
    let county = cfg.load_county()?;
    let s = &cfg.forecast;
    let year = 2020;
    let traj = simulate(&county.params, &county.temps.year(year)?, &s.init, s.dt, s.metric)?;

    let weekly = traj.weekly_incidence(s.week_convention, s.weeks());
    let (peak_day, peak_m) = traj
        .abundance
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, m)| (i + 1, *m))
        .unwrap();
    println!("{year}: peak adult abundance {peak_m:.3e} on day {peak_day}");
    println!("normalized cumulative temperature on Dec 31: {:.2} °C", traj.thermal.last().unwrap());
    println!("simulated human infections: {:.1}", traj.incidence.iter().sum::<f64>());
    println!("week  infections");
    for (w, n) in s.weeks().zip(&weekly).filter(|(_, n)| **n > 0.05) {
        println!("{w:>4}  {n:>10.2}");
    }
    Ok(())
}
