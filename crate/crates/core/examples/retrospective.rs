//! Forecasting the final season from every earlier one, then scoring it.

use wnvcast::config::RunConfig;
use wnvcast::eval::retrospective;

const CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/synthetic/config.toml");

fn main() -> wnvcast::Result<()> {
    let cfg = RunConfig::load(CONFIG)?;
    let county = cfg.load_county()?;
    let target = 2024;
    let training = cfg.training_years_for(&county, target)?;
    let report = retrospective(&county, &training, target, &cfg.forecast, None)?;
    let f = &report.fold;
    println!("{target}: observed onset day {:?}, {} cases", f.observed_onset, f.total_cases);
    for i in &f.intervals {
        println!(
            "  alpha {:.2}: [{:?}, {:?}] length {:>3}  {}",
            i.alpha,
            i.start,
            i.end,
            i.length,
            if i.captured { "captured" } else { "missed" }
        );
    }
    for w in &f.weekly.eco_epi {
        println!("  week {:>2}: predicted {:.2}, observed {}, log score {:.3}", w.week, w.predicted, w.observed, w.log_score);
    }
    println!("  NRMSE model {:?} vs null {:?}", f.nrmse.eco_epi, f.nrmse.null_poisson);
    Ok(())
}
