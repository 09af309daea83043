//! Predictive error function (PERF) over a random-subspace ensemble.
//!
//! Each member is trained on a bootstrap sample restricted to a random
//! feature subset γ and scored by its mean loss on the rows it did not see.
//! For feature j,
//!
//! ```text
//! PERF(x_j) = (1/B) Σ_b score_b − (1/B_j) Σ_{b: γ_j = 1} score_b
//! ```
//!
//! so a positive value means that members using x_j err less than average.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Task};
use crate::error::{Result, VimError};
use crate::forest::{bootstrap_rows, default_min_leaf, grow_tree, TreeConfig};
use crate::linear::{logistic_fit, ols_fit};
use crate::model::{FittedModel, Predictor};
use crate::report::VimReport;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseLearner {
    Cart,
    Ols,
    Logistic,
}

impl fmt::Display for BaseLearner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaseLearner::Cart => "cart",
            BaseLearner::Ols => "ols",
            BaseLearner::Logistic => "logistic",
        })
    }
}

impl FromStr for BaseLearner {
    type Err = VimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cart" => Ok(BaseLearner::Cart),
            "ols" => Ok(BaseLearner::Ols),
            "logistic" => Ok(BaseLearner::Logistic),
            other => Err(VimError::Parameter(format!("unknown base learner '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerfConfig {
    /// Ensemble size B.
    pub n_models: usize,
    /// Features per member; defaults to ⌈√p⌉.
    pub subset_size: Option<usize>,
    pub learner: BaseLearner,
    /// Redraws allowed for a member whose out-of-bag set is empty.
    pub max_retries: usize,
}

impl Default for PerfConfig {
    fn default() -> Self {
        PerfConfig { n_models: 500, subset_size: None, learner: BaseLearner::Cart, max_retries: 100 }
    }
}

pub fn default_subset_size(p: usize) -> usize {
    ((p as f64).sqrt().ceil() as usize).clamp(1, p)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerfMember {
    /// Feature indicator γ, one entry per dataset column.
    pub gamma: Vec<bool>,
    /// Active features in ascending order; the model sees only these.
    pub features: Vec<usize>,
    pub model: FittedModel,
    /// Mean loss on `oob_rows`.
    pub score: f64,
    pub oob_rows: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerfEnsemble {
    pub members: Vec<PerfMember>,
    pub base_learner: BaseLearner,
    pub subset_size: usize,
    pub n_features: usize,
    pub task: Task,
    pub seed: u64,
}

impl PerfEnsemble {
    /// `B_j` for every feature.
    pub fn feature_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_features];
        for m in &self.members {
            for &j in &m.features {
                counts[j] += 1;
            }
        }
        counts
    }
}

fn check_learner(learner: BaseLearner, d: &Dataset) -> Result<()> {
    let ok = match learner {
        BaseLearner::Cart => true,
        BaseLearner::Ols => d.task() == Task::Regression,
        BaseLearner::Logistic => d.task() == Task::Classification,
    };
    if !ok {
        return Err(VimError::UnsupportedTask { method: format!("perf with {learner}"), task: d.task() });
    }
    if d.task() == Task::Classification && d.n_classes() > 2 {
        return Err(VimError::Parameter(format!(
            "perf supports binary classification only, found {} classes",
            d.n_classes()
        )));
    }
    Ok(())
}

fn train(learner: BaseLearner, sub: &Dataset, rows: Vec<usize>, r: &mut rng::VimRng) -> Result<FittedModel> {
    Ok(match learner {
        BaseLearner::Cart => {
            let cfg = TreeConfig { mtry: sub.n_features(), min_leaf: default_min_leaf(sub.task()), max_depth: None };
            FittedModel::Tree(grow_tree(sub, rows, &cfg, Some(r)))
        }
        BaseLearner::Ols => FittedModel::Linear(ols_fit(&sub.select_rows(&rows))?),
        BaseLearner::Logistic => FittedModel::Linear(logistic_fit(&sub.select_rows(&rows))?),
    })
}

/// Mean squared error (regression) or misclassification rate on `rows`.
fn oob_loss(model: &FittedModel, sub: &Dataset, rows: &[usize]) -> f64 {
    let total: f64 = rows
        .iter()
        .map(|&i| {
            let pred = model.predict_row(sub.row(i));
            let y = sub.y()[i];
            match sub.task() {
                Task::Regression => (y - pred) * (y - pred),
                Task::Classification => f64::from(pred != y),
            }
        })
        .sum();
    total / rows.len() as f64
}

/// Trains `n_models` members; member `b` draws rows and features from its
/// own stream of `seed`.
pub fn perf_fit(d: &Dataset, cfg: &PerfConfig, seed: u64) -> Result<PerfEnsemble> {
    let p = d.n_features();
    let n = d.n_rows();
    if cfg.n_models < 10 {
        return Err(VimError::Parameter(format!("perf needs at least 10 models, got {}", cfg.n_models)));
    }
    let k = cfg.subset_size.unwrap_or_else(|| default_subset_size(p));
    if k == 0 || k > p {
        return Err(VimError::Parameter(format!("subset_size must be in [1, {p}], got {k}")));
    }
    check_learner(cfg.learner, d)?;
    let members = (0..cfg.n_models)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(seed, b as u64);
            for _ in 0..=cfg.max_retries {
                let (rows, oob) = bootstrap_rows(n, &mut r);
                let mut features = index::sample(&mut r, p, k).into_vec();
                features.sort_unstable();
                if oob.is_empty() {
                    continue;
                }
                let sub = d.select_features(&features);
                let model = train(cfg.learner, &sub, rows, &mut r)?;
                let score = oob_loss(&model, &sub, &oob);
                let mut gamma = vec![false; p];
                for &j in &features {
                    gamma[j] = true;
                }
                return Ok(PerfMember { gamma, features, model, score, oob_rows: oob });
            }
            Err(VimError::Estimation(format!(
                "member {b} had an empty out-of-bag set after {} draws",
                cfg.max_retries + 1
            )))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PerfEnsemble { members, base_learner: cfg.learner, subset_size: k, n_features: p, task: d.task(), seed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfDetails {
    /// `B_j` per feature.
    pub feature_counts: Vec<usize>,
    /// Indicator matrix, one row per member.
    pub gamma: Vec<Vec<u8>>,
    pub member_scores: Vec<f64>,
    pub mean_score: f64,
    /// PERF per feature; `None` where `B_j = 0`.
    pub perf: Vec<Option<f64>>,
    /// Features never sampled. They are ranked last and never selected.
    pub missing: Vec<usize>,
}

/// PERF for every feature from member indicators and scores.
pub fn perf_values(gamma: &[Vec<bool>], scores: &[f64]) -> Result<Vec<Option<f64>>> {
    if gamma.len() != scores.len() || gamma.is_empty() {
        return Err(VimError::Parameter("need one nonempty gamma per member score".into()));
    }
    let p = gamma[0].len();
    let b = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / b;
    Ok((0..p)
        .map(|j| {
            let (mut sum, mut count) = (0.0, 0usize);
            for (g, &s) in gamma.iter().zip(scores) {
                if g[j] {
                    sum += s;
                    count += 1;
                }
            }
            (count > 0).then(|| mean - sum / count as f64)
        })
        .collect())
}

/// Scores and selects `{ j : PERF(x_j) > 0 }`.
///
/// A feature with `B_j = 0` has no PERF value. Its report score is set to the
/// smallest defined value, it is moved to the end of the ranking and it is
/// listed in [`PerfDetails::missing`].
pub fn perf_scores(e: &PerfEnsemble) -> Result<(VimReport, PerfDetails)> {
    let gamma: Vec<Vec<bool>> = e.members.iter().map(|m| m.gamma.clone()).collect();
    let member_scores: Vec<f64> = e.members.iter().map(|m| m.score).collect();
    let perf = perf_values(&gamma, &member_scores)?;
    let floor = perf.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor } else { 0.0 };
    let missing: Vec<usize> = (0..e.n_features).filter(|&j| perf[j].is_none()).collect();
    let scores: Vec<f64> = perf.iter().map(|v| v.unwrap_or(floor)).collect();
    let selected = (0..e.n_features).filter(|&j| perf[j].is_some_and(|v| v > 0.0)).collect();
    let mut report = VimReport::new("perf", scores, selected, e.seed)?;
    if !missing.is_empty() {
        let (mut defined, absent): (Vec<usize>, Vec<usize>) = report.ranking.iter().partition(|j| perf[**j].is_some());
        defined.extend(absent);
        report.ranking = defined;
    }
    let mean_score = member_scores.iter().sum::<f64>() / member_scores.len() as f64;
    Ok((
        report,
        PerfDetails {
            feature_counts: e.feature_counts(),
            gamma: gamma.iter().map(|g| g.iter().map(|&v| u8::from(v)).collect()).collect(),
            member_scores,
            mean_score,
            perf,
            missing,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_ensemble() {
        let gamma = vec![vec![true], vec![false], vec![true]];
        let v = perf_values(&gamma, &[2.0, 6.0, 10.0]).unwrap();
        assert_eq!(v[0], Some(0.0));
    }

    #[test]
    fn constant_scores_give_zero() {
        let gamma = vec![vec![true, false], vec![false, true], vec![true, true]];
        let v = perf_values(&gamma, &[3.0; 3]).unwrap();
        assert_eq!(v, vec![Some(0.0), Some(0.0)]);
    }

    #[test]
    fn learner_mismatch() {
        let d = Dataset::new(
            (0..20).map(|i| vec![i as f64]).collect(),
            (0..20).map(|i| f64::from(i % 2 == 0)).collect(),
            vec!["a".into()],
            Task::Classification,
        )
        .unwrap();
        let cfg = PerfConfig { n_models: 10, learner: BaseLearner::Ols, ..PerfConfig::default() };
        assert!(matches!(perf_fit(&d, &cfg, 1), Err(VimError::UnsupportedTask { .. })));
        let cfg = PerfConfig { n_models: 9, ..PerfConfig::default() };
        assert!(perf_fit(&d, &cfg, 1).is_err());
    }

    #[test]
    fn parse_learner() {
        assert_eq!("ols".parse::<BaseLearner>().unwrap(), BaseLearner::Ols);
        assert!("knn".parse::<BaseLearner>().is_err());
    }
}
