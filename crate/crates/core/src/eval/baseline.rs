//! Reference count models: a constant-rate Poisson and a negative binomial
//! fitted by maximum likelihood.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::metrics::{bin_probability, floored_log, poisson_pmf, BinScheme};
use super::EvalError;

/// Smallest rate a baseline may predict.
pub const RATE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    NullPoisson,
    NegativeBinomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub kind: BaselineKind,
    pub mean: f64,
    /// NB size `r`; `None` for the Poisson and for the Poisson limit.
    pub size: Option<f64>,
    /// Set when the NB fit fell back to Poisson (sample variance ≤ mean).
    pub poisson_limit: bool,
}

pub fn fit_baseline(kind: BaselineKind, weekly_counts: &[u32]) -> Result<BaselineModel, EvalError> {
    if weekly_counts.is_empty() {
        return Err(EvalError::EmptyTraining);
    }
    let x: Vec<f64> = weekly_counts.iter().map(|&c| c as f64).collect();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let rate = mean.max(RATE_FLOOR);
    match kind {
        BaselineKind::NullPoisson => Ok(BaselineModel {
            kind,
            mean: rate,
            size: None,
            poisson_limit: false,
        }),
        BaselineKind::NegativeBinomial => {
            let var = if x.len() > 1 {
                x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            if var <= mean {
                return Ok(BaselineModel {
                    kind,
                    mean: rate,
                    size: None,
                    poisson_limit: true,
                });
            }
            // the MLE of the mean is the sample mean; only r needs a search
            let start = (mean * mean / (var - mean)).ln();
            let ll = |log_r: f64| nb_profile_loglik(&x, mean, log_r.exp());
            let log_r = golden_max(ll, start - 8.0, start + 8.0, 1e-10);
            Ok(BaselineModel {
                kind,
                mean: rate,
                size: Some(log_r.exp()),
                poisson_limit: false,
            })
        }
    }
}

fn nb_profile_loglik(x: &[f64], mu: f64, r: f64) -> f64 {
    let lp = (r / (r + mu)).ln();
    let lq = (mu / (r + mu)).ln();
    x.iter()
        .map(|&k| ln_gamma(k + r) - ln_gamma(r) - ln_gamma(k + 1.0) + r * lp + if k > 0.0 { k * lq } else { 0.0 })
        .sum()
}

/// Maximizes a unimodal function on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Negative-binomial probability mass with mean `mu` and size `r`.
pub fn nb_pmf(mu: f64, r: f64, k: u32) -> f64 {
    if mu <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    (ln_gamma(kf + r) - ln_gamma(r) - ln_gamma(kf + 1.0) + r * (r / (r + mu)).ln() + kf * (mu / (r + mu)).ln()).exp()
}

impl BaselineModel {
    pub fn pmf(&self, k: u32) -> f64 {
        match self.size {
            Some(r) => nb_pmf(self.mean, r, k),
            None => poisson_pmf(self.mean, k),
        }
    }

    pub fn log_score(&self, observed: u32, bins: &BinScheme) -> f64 {
        floored_log(bin_probability(|k| self.pmf(k), observed, bins))
    }
}
