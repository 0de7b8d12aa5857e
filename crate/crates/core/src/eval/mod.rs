//! Forecast evaluation: interval and count scores, reference baselines and
//! the leave-one-year-out and retrospective drivers.

mod baseline;
mod cv;
mod metrics;

pub use baseline::{fit_baseline, nb_pmf, BaselineKind, BaselineModel, RATE_FLOOR};
pub use cv::{
    loyo_cv, loyo_cv_calibrated, loyo_fold, retrospective, run_fold, write_intervals_csv, write_weekly_csv, zero_case_year_check,
    CvReport, FoldResult, ModelSummary, PerModel, RetroReport, ZeroCaseEntry, ZeroCaseReport,
};
pub use metrics::{
    aggregate_accuracy, aggregate_intervals, ave_summary, bin_probability, floored_log, log_score, nrmse,
    poisson_pmf, score_interval, AggregateIntervalScore, AveSummary, BinScheme, IntervalScore, NrmseNormalizer,
    WeeklyScore, LOG_SCORE_FLOOR,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no scores to aggregate")]
    EmptyScores,
    #[error("prediction and observation lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("observations are all zero")]
    AllZeroObservations,
    #[error("NRMSE normalizer is zero")]
    ZeroNormalizer,
    #[error("bin edges must be positive and strictly increasing")]
    InvalidBins,
    #[error("no training weeks")]
    EmptyTraining,
    #[error("need at least 3 years with cases, found {0}")]
    InsufficientYears(usize),
    #[error("target year {target} is not after the last training year {last}")]
    TargetNotAfterTraining { target: i32, last: i32 },
}
