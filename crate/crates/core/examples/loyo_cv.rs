//! Leave-one-year-out cross-validation on the bundled synthetic county.

use wnvcast::config::RunConfig;
use wnvcast::eval::loyo_cv;

const CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/synthetic/config.toml");

fn main() -> wnvcast::Result<()> {
    let cfg = RunConfig::load(CONFIG)?;
    let county = cfg.load_county()?;
    let report = loyo_cv(&county, &cfg.forecast)?;

    println!("alpha   beta  mean L   A~");
    for a in &report.aggregates {
        println!("{:.2}  {:>5.1}%  {:>6.1}  {:.4}", a.alpha, a.beta, a.mean_length, a.a_tilde);
    }
    let ls = &report.summary.mean_log_score;
    let nr = &report.summary.mean_nrmse;
    println!("model              log score  NRMSE");
    for (name, l, n) in [
        ("Eco-Epi Poisson", ls.eco_epi, nr.eco_epi),
        ("null Poisson", ls.null_poisson, nr.null_poisson),
        ("negative binomial", ls.negative_binomial, nr.negative_binomial),
    ] {
        println!("{name:<18} {:>9.3}  {:>5.3}", l.unwrap_or(f64::NAN), n.unwrap_or(f64::NAN));
    }
    if let Some(z) = &report.zero_case_check {
        println!("zero-case years below the case-year median: {:?}", z.zero_case_years);
    }
    Ok(())
}
