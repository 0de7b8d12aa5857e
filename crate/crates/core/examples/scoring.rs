//! Scoring weekly count forecasts: binned Poisson log score, the two
//! baselines and NRMSE.

use wnvcast::eval::{fit_baseline, log_score, nrmse, BaselineKind, BinScheme, NrmseNormalizer};

fn main() -> wnvcast::Result<()> {
    let unit = BinScheme::default();
    let coarse = BinScheme { edges: vec![1, 2, 5, 10, 20] };
    println!("lambda  observed  unit bins  coarse bins");
    for (lambda, k) in [(1.63, 1), (1.57, 1), (1.12, 1), (0.0, 5), (6.0, 9)] {
        println!(
            "{lambda:>6.2}  {k:>8}  {:>9.4}  {:>11.4}",
            log_score(lambda, k, &unit),
            log_score(lambda, k, &coarse)
        );
    }

    let training = [0, 0, 1, 0, 3, 7, 2, 0, 0, 1, 12, 4, 0, 0, 2];
    let null = fit_baseline(BaselineKind::NullPoisson, &training)?;
    let nb = fit_baseline(BaselineKind::NegativeBinomial, &training)?;
    println!("null Poisson mean {:.3}", null.mean);
    println!("negative binomial mean {:.3}, size {:?}", nb.mean, nb.size);
    for k in [0, 3, 10] {
        println!(
            "  observed {k:>2}: null {:.3}, NB {:.3}",
            null.log_score(k, &unit),
            nb.log_score(k, &unit)
        );
    }

    let obs = [1.0, 0.0, 2.0, 4.0, 1.0];
    let pred = [0.8, 0.5, 1.9, 2.7, 1.2];
    for norm in [NrmseNormalizer::Mean, NrmseNormalizer::Range, NrmseNormalizer::StdDev] {
        println!("NRMSE ({norm:?}): {:.3}", nrmse(&pred, &obs, norm)?);
    }
    Ok(())
}
