//! Scoring a selected feature subset with a neutral model: OLS for
//! regression, logistic regression for classification.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use vimkit::linear::{logistic_fit, ols_fit};
use vimkit::metrics::{classification_metrics, regression_metrics};
use vimkit::{rng, Dataset, EvalMetrics, Predictor, Task};

use crate::error::{BenchError, Result};

/// Features evaluated when a method selects nothing.
pub const DEFAULT_TOP_K: usize = 5;
pub const DEFAULT_HOLDOUT: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum EvalMode {
    /// Fit and score on all rows.
    InSample,
    /// Score on a seeded random fraction of rows held out from the fit.
    Holdout { fraction: f64 },
}

impl EvalMode {
    pub fn default_holdout() -> Self {
        EvalMode::Holdout { fraction: DEFAULT_HOLDOUT }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalMode::InSample => f.write_str("in-sample"),
            EvalMode::Holdout { fraction } => write!(f, "holdout:{fraction}"),
        }
    }
}

impl FromStr for EvalMode {
    type Err = BenchError;

    /// `in-sample`, `holdout` or `holdout:FRACTION`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "in-sample" || s == "insample" => Ok(EvalMode::InSample),
            None if s == "holdout" => Ok(EvalMode::default_holdout()),
            Some(("holdout", frac)) => {
                let fraction: f64 =
                    frac.parse().map_err(|_| BenchError::Config(format!("bad holdout fraction '{frac}'")))?;
                if !(fraction > 0.0 && fraction < 1.0) {
                    return Err(BenchError::Config(format!("holdout fraction must be in (0, 1), got {fraction}")));
                }
                Ok(EvalMode::Holdout { fraction })
            }
            _ => Err(BenchError::Config(format!("unknown evaluation mode '{s}'"))),
        }
    }
}

/// Seeded train/test row split. The test set has `round(n·fraction)` rows,
/// at least one, and leaves at least two for training.
pub fn holdout_split(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut rng::stream(seed, 0x686f6c64));
    let n_test = ((n as f64 * fraction).round() as usize).clamp(1, n.saturating_sub(2).max(1));
    let test = rows.split_off(n - n_test);
    let (mut train, mut test) = (rows, test);
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

pub fn evaluate_selected(d: &Dataset, selected: &[usize], mode: EvalMode, seed: u64) -> Result<EvalMetrics> {
    if selected.is_empty() {
        return Err(BenchError::EmptySelection(DEFAULT_TOP_K));
    }
    if let Some(&j) = selected.iter().find(|&&j| j >= d.n_features()) {
        return Err(BenchError::Config(format!("selected feature {j} out of range")));
    }
    let sub = d.select_features(selected);
    let (train, test) = match mode {
        EvalMode::InSample => (sub.clone(), sub),
        EvalMode::Holdout { fraction } => {
            let (tr, te) = holdout_split(sub.n_rows(), fraction, seed);
            (sub.select_rows(&tr), sub.select_rows(&te))
        }
    };
    Ok(match d.task() {
        Task::Regression => {
            let fit = ols_fit(&train)?;
            regression_metrics(test.y(), &fit.predict(&test))
        }
        Task::Classification => {
            let fit = logistic_fit(&train)?;
            classification_metrics(test.y(), &fit.predict(&test))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes() {
        let (tr, te) = holdout_split(30, 1.0 / 3.0, 4);
        assert_eq!((tr.len(), te.len()), (20, 10));
        let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..30).collect::<Vec<_>>());
        assert_eq!(holdout_split(3, 0.9, 0).1.len(), 1);
    }

    #[test]
    fn modes_parse() {
        assert_eq!("in-sample".parse::<EvalMode>().unwrap(), EvalMode::InSample);
        assert_eq!("holdout:0.25".parse::<EvalMode>().unwrap(), EvalMode::Holdout { fraction: 0.25 });
        assert!("holdout:1.5".parse::<EvalMode>().is_err());
        assert!("cv".parse::<EvalMode>().is_err());
    }
}
