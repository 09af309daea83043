//! Squared correlation and the nonparametric ψ estimator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Standardization, Task};
use crate::error::{Result, VimError};
use crate::forest::{rf_fit, RfConfig};
use crate::model::Predictor;
use crate::report::{select_above, VimReport};

fn require_regression(d: &Dataset, method: &str) -> Result<()> {
    if d.task() != Task::Regression {
        return Err(VimError::UnsupportedTask { method: method.into(), task: d.task() });
    }
    Ok(())
}

/// Squared Pearson correlation of every feature with the response.
/// Zero-variance features score 0.
pub fn correlation_scores(d: &Dataset) -> Result<Vec<f64>> {
    require_regression(d, "corr")?;
    let n = d.n_rows() as f64;
    let y = d.y();
    let ybar = y.iter().sum::<f64>() / n;
    let syy: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
    if syy <= 0.0 {
        return Err(VimError::ConstantResponse(syy / n));
    }
    let flags = Standardization::fit(d).zero_variance;
    Ok((0..d.n_features())
        .map(|j| {
            if flags[j] {
                return 0.0;
            }
            let x = d.column(j);
            let xbar = x.iter().sum::<f64>() / n;
            let (mut sxy, mut sxx) = (0.0, 0.0);
            for (xi, yi) in x.iter().zip(y) {
                let dx = xi - xbar;
                sxy += dx * (yi - ybar);
                sxx += dx * dx;
            }
            (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
        })
        .collect())
}

/// `ρ²(x_j, y)` scores; features above `threshold` are selected.
pub fn correlation_vim(d: &Dataset, threshold: f64) -> Result<VimReport> {
    let scores = correlation_scores(d)?;
    let selected = select_above(&scores, threshold);
    VimReport::new("corr", scores, selected, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiEstimate {
    pub subset_s: Vec<usize>,
    pub psi_naive: f64,
    /// Raw adjusted value; may leave [0, 1].
    pub psi_adjusted: f64,
    pub psi_adjusted_clamped: f64,
    pub theta_hat: f64,
    /// `(1/n) Σ (y_i − ȳ)²`
    pub var_y: f64,
}

const VAR_FLOOR: f64 = 1e-24;

fn check_subset(s: &[usize], p: usize) -> Result<Vec<usize>> {
    let mut s = s.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.is_empty() {
        return Err(VimError::Parameter("feature subset is empty".into()));
    }
    if let Some(&j) = s.iter().find(|&&j| j >= p) {
        return Err(VimError::Parameter(format!("feature {j} out of range for {p} features")));
    }
    if s.len() == p {
        return Err(VimError::Parameter("feature subset covers every feature; the reduced mean is undefined".into()));
    }
    Ok(s)
}

/// ψ from fitted values: `full[i] = μ̂(x_i)` and `reduced[i] = μ̂_s(x_i)`.
pub fn psi_from_predictions(y: &[f64], full: &[f64], reduced: &[f64], s: Vec<usize>) -> Result<PsiEstimate> {
    let n = y.len();
    if full.len() != n || reduced.len() != n {
        return Err(VimError::Parameter("prediction length differs from row count".into()));
    }
    let nf = n as f64;
    let ybar = y.iter().sum::<f64>() / nf;
    let ss_y: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
    let var_y = ss_y / nf;
    if var_y < VAR_FLOOR {
        return Err(VimError::ConstantResponse(var_y));
    }
    let mut theta = 0.0;
    let mut cross = 0.0;
    for i in 0..n {
        let gap = full[i] - reduced[i];
        theta += gap * gap;
        cross += (y[i] - full[i]) * gap;
    }
    let theta_hat = theta / nf;
    let psi_naive = theta_hat / var_y;
    let psi_adjusted = psi_naive + 2.0 * cross / ss_y;
    Ok(PsiEstimate {
        subset_s: s,
        psi_naive,
        psi_adjusted,
        psi_adjusted_clamped: psi_adjusted.clamp(0.0, 1.0),
        theta_hat,
        var_y,
    })
}

fn psi_estimate(d: &Dataset, s: &[usize], mu_full: &dyn Predictor, mu_reduced: &dyn Predictor) -> Result<PsiEstimate> {
    require_regression(d, "psi")?;
    let s = check_subset(s, d.n_features())?;
    let full = mu_full.predict(d);
    let reduced = mu_reduced.predict(&d.drop_features(&s));
    psi_from_predictions(d.y(), &full, &reduced, s)
}

/// Plug-in ψ. `mu_full` sees complete rows; `mu_reduced` sees rows with the
/// columns in `s` removed (remaining columns in ascending order).
pub fn psi_naive(d: &Dataset, s: &[usize], mu_full: &dyn Predictor, mu_reduced: &dyn Predictor) -> Result<PsiEstimate> {
    psi_estimate(d, s, mu_full, mu_reduced)
}

/// Residual-adjusted ψ; same inputs as [`psi_naive`]. The returned estimate
/// carries both values.
pub fn psi_adjusted(
    d: &Dataset,
    s: &[usize],
    mu_full: &dyn Predictor,
    mu_reduced: &dyn Predictor,
) -> Result<PsiEstimate> {
    psi_estimate(d, s, mu_full, mu_reduced)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsiConfig {
    /// Trees per plug-in forest.
    pub n_trees: usize,
    /// Selection threshold on the adjusted score.
    pub threshold: f64,
}

impl Default for PsiConfig {
    fn default() -> Self {
        PsiConfig { n_trees: 50, threshold: 0.01 }
    }
}

/// Adjusted ψ of every singleton `{j}`, with random-forest plug-ins: one
/// forest on all features and one per dropped feature.
pub fn psi_vim(d: &Dataset, cfg: &PsiConfig, seed: u64) -> Result<(VimReport, Vec<PsiEstimate>)> {
    require_regression(d, "psi")?;
    let p = d.n_features();
    if p < 2 {
        return Err(VimError::Parameter("psi needs at least two features".into()));
    }
    let rf = RfConfig { n_trees: cfg.n_trees, ..RfConfig::default() };
    let full_model = rf_fit(d, &rf, seed)?;
    let full = full_model.predict(d);
    let estimates: Vec<PsiEstimate> = (0..p)
        .into_par_iter()
        .map(|j| {
            let reduced_data = d.drop_features(&[j]);
            let reduced_model = rf_fit(&reduced_data, &rf, seed.wrapping_add(1 + j as u64))?;
            let reduced = reduced_model.predict(&reduced_data);
            psi_from_predictions(d.y(), &full, &reduced, vec![j])
        })
        .collect::<Result<_>>()?;
    let scores: Vec<f64> = estimates.iter().map(|e| e.psi_adjusted).collect();
    let selected = select_above(&scores, cfg.threshold);
    Ok((VimReport::new("psi", scores, selected, seed)?, estimates))
}
