//! Per-method importance reports and ranking.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VimError};

/// Scores for every feature, their ranking and the selected subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VimReport {
    pub method: String,
    /// One score per feature, in dataset column order.
    pub scores: Vec<f64>,
    /// Feature indices by descending score.
    pub ranking: Vec<usize>,
    pub selected: Vec<usize>,
    pub seed: u64,
    pub wall_time_seconds: f64,
}

impl VimReport {
    pub fn new(method: impl Into<String>, scores: Vec<f64>, mut selected: Vec<usize>, seed: u64) -> Result<Self> {
        let ranking = rank_features(&scores)?;
        selected.sort_unstable();
        selected.dedup();
        if let Some(&bad) = selected.iter().find(|&&j| j >= scores.len()) {
            return Err(VimError::Parameter(format!("selected feature {bad} out of range")));
        }
        Ok(VimReport { method: method.into(), scores, ranking, selected, seed, wall_time_seconds: 0.0 })
    }

    /// The `k` best-ranked features.
    pub fn top_k(&self, k: usize) -> Vec<usize> {
        let mut top: Vec<usize> = self.ranking.iter().copied().take(k).collect();
        top.sort_unstable();
        top
    }
}

/// Descending stable sort of feature indices by score; ties keep ascending
/// index order.
pub fn rank_features(scores: &[f64]) -> Result<Vec<usize>> {
    if let Some(feature) = scores.iter().position(|s| s.is_nan()) {
        return Err(VimError::NanScore { feature });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    Ok(order)
}

/// Indices whose score is strictly above `threshold`.
pub fn select_above(scores: &[f64], threshold: f64) -> Vec<usize> {
    scores.iter().enumerate().filter(|(_, &s)| s > threshold).map(|(j, _)| j).collect()
}

/// Indices whose score is strictly above the mean score.
pub fn select_above_mean(scores: &[f64]) -> Vec<usize> {
    if scores.is_empty() {
        return Vec::new();
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    select_above(scores, mean)
}
