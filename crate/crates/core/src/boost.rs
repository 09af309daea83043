//! Second-order gradient boosted regression trees.
//!
//! Each round fits a tree to the gradient/hessian pairs `(g_i, h_i)` of the
//! loss at the current margin. A leaf holding rows `I` gets the weight
//! `w* = −G/(H + λ)` with `G = Σ_I g_i`, `H = Σ_I h_i`, and a split is worth
//!
//! ```text
//! gain = ½ [G_L²/(H_L+λ) + G_R²/(H_R+λ) − (G_L+G_R)²/(H_L+H_R+λ)] − γ
//! ```
//!
//! The leaf penalty γ is subtracted: it charges for the extra leaf, so a
//! split is kept only when its loss reduction exceeds γ.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Task};
use crate::error::{Result, VimError};
use crate::linear::sigmoid;
use crate::model::Predictor;
use crate::report::{select_above_mean, VimReport};

/// Loss conventions:
/// - `Squared`: `l = (y − ŷ)²`, `g = 2(ŷ − y)`, `h = 2`.
/// - `Logistic`: labels `y ∈ {0, 1}`, raw margin `ŷ`,
///   `l = log(1 + e^ŷ) − yŷ` (cross-entropy of `σ(ŷ)`),
///   `g = σ(ŷ) − y`, `h = σ(ŷ)(1 − σ(ŷ))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    Squared,
    Logistic,
}

impl std::str::FromStr for Loss {
    type Err = VimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" => Ok(Loss::Squared),
            "logistic" => Ok(Loss::Logistic),
            other => Err(VimError::Parameter(format!("unknown loss id {other:?}"))),
        }
    }
}

pub fn loss_value(loss: Loss, y: f64, yhat: f64) -> f64 {
    match loss {
        Loss::Squared => (y - yhat).powi(2),
        Loss::Logistic => crate::linear::softplus(yhat) - y * yhat,
    }
}

pub fn grad_hess(loss: Loss, y: f64, yhat: f64) -> (f64, f64) {
    match loss {
        Loss::Squared => (2.0 * (yhat - y), 2.0),
        Loss::Logistic => {
            let s = sigmoid(yhat);
            (s - y, s * (1.0 - s))
        }
    }
}

pub fn leaf_weight(grad_sum: f64, hess_sum: f64, lambda: f64) -> Result<f64> {
    let denom = hess_sum + lambda;
    if denom <= 0.0 {
        return Err(VimError::DegenerateLeaf(denom));
    }
    Ok(-grad_sum / denom)
}

pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    let term = |g: f64, h: f64| {
        let denom = h + lambda;
        if denom > 0.0 {
            g * g / denom
        } else {
            0.0
        }
    };
    0.5 * (term(gl, hl) + term(gr, hr) - term(gl + gr, hl + hr)) - gamma
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BoostNode {
    Internal {
        split_feature: usize,
        split_value: f64,
        left: usize,
        right: usize,
        n_node: usize,
        gain: f64,
        grad_sum: f64,
        hess_sum: f64,
    },
    Leaf {
        weight: f64,
        grad_sum: f64,
        hess_sum: f64,
        n_node: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostTree {
    pub nodes: Vec<BoostNode>,
    pub n_samples: usize,
}

impl BoostTree {
    pub fn leaf_value(&self, row: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                BoostNode::Internal { split_feature, split_value, left, right, .. } => {
                    k = if row[split_feature] < split_value { left } else { right };
                }
                BoostNode::Leaf { weight, .. } => return weight,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostConfig {
    pub n_rounds: usize,
    pub eta: f64,
    pub lambda: f64,
    pub gamma: f64,
    /// 0 grows single-leaf trees.
    pub max_depth: usize,
    /// Minimum hessian sum in each child of a split.
    pub min_child_weight: f64,
    /// Defaults to the mean response (squared) or its log-odds (logistic).
    pub base_score: Option<f64>,
    /// Defaults to squared for regression and logistic for classification.
    pub loss: Option<Loss>,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            n_rounds: 100,
            eta: 0.3,
            lambda: 1.0,
            gamma: 0.0,
            max_depth: 6,
            min_child_weight: 1.0,
            base_score: None,
            loss: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    pub trees: Vec<BoostTree>,
    pub eta: f64,
    pub lambda_reg: f64,
    pub gamma: f64,
    pub base_score: f64,
    pub loss: Loss,
    pub n_features: usize,
    pub seed: u64,
    /// Σ l(y_i, ŷ_i) before the first round and after every round.
    pub training_loss: Vec<f64>,
}

impl BoostModel {
    pub fn predict_margin(&self, row: &[f64]) -> f64 {
        self.base_score + self.eta * self.trees.iter().map(|t| t.leaf_value(row)).sum::<f64>()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

impl Predictor for BoostModel {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let m = self.predict_margin(row);
        match self.loss {
            Loss::Squared => m,
            Loss::Logistic => f64::from(sigmoid(m) > 0.5),
        }
    }
}

struct Grower<'a> {
    d: &'a Dataset,
    grad: &'a [f64],
    hess: &'a [f64],
    cfg: &'a BoostConfig,
    nodes: Vec<BoostNode>,
}

impl Grower<'_> {
    fn sums(&self, rows: &[usize]) -> (f64, f64) {
        rows.iter().fold((0.0, 0.0), |(g, h), &i| (g + self.grad[i], h + self.hess[i]))
    }

    /// Best (feature, threshold, gain) with gain > 0.
    fn best_split(&self, rows: &[usize], g: f64, h: f64) -> Option<(usize, f64, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
        for j in 0..self.d.n_features() {
            order.clear();
            order.extend(rows.iter().map(|&i| (self.d.x(i, j), i)));
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..order.len() - 1 {
                let i = order[k].1;
                gl += self.grad[i];
                hl += self.hess[i];
                if order[k].0 == order[k + 1].0 {
                    continue;
                }
                let (gr, hr) = (g - gl, h - hl);
                if hl < self.cfg.min_child_weight || hr < self.cfg.min_child_weight {
                    continue;
                }
                let gain = split_gain(gl, hl, gr, hr, self.cfg.lambda, self.cfg.gamma);
                if gain > best.map_or(0.0, |b| b.2) {
                    let (a, b) = (order[k].0, order[k + 1].0);
                    let mut z = a + (b - a) / 2.0;
                    if z <= a {
                        z = b;
                    }
                    best = Some((j, z, gain));
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> Result<usize> {
        let (g, h) = self.sums(&rows);
        let slot = self.nodes.len();
        self.nodes.push(BoostNode::Leaf {
            weight: leaf_weight(g, h, self.cfg.lambda)?,
            grad_sum: g,
            hess_sum: h,
            n_node: rows.len(),
        });
        if depth >= self.cfg.max_depth || rows.len() < 2 {
            return Ok(slot);
        }
        let Some((feature, threshold, gain)) = self.best_split(&rows, g, h) else {
            return Ok(slot);
        };
        let n_node = rows.len();
        let (lr, rr): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&i| self.d.x(i, feature) < threshold);
        let left = self.grow(lr, depth + 1)?;
        let right = self.grow(rr, depth + 1)?;
        self.nodes[slot] = BoostNode::Internal {
            split_feature: feature,
            split_value: threshold,
            left,
            right,
            n_node,
            gain,
            grad_sum: g,
            hess_sum: h,
        };
        Ok(slot)
    }
}

pub fn boost_fit(d: &Dataset, cfg: &BoostConfig, seed: u64) -> Result<BoostModel> {
    if cfg.n_rounds == 0 {
        return Err(VimError::Parameter("boosting needs at least one round".into()));
    }
    if !(cfg.eta > 0.0 && cfg.eta <= 1.0) {
        return Err(VimError::Parameter(format!("eta must be in (0, 1], got {}", cfg.eta)));
    }
    if cfg.lambda < 0.0 || cfg.gamma < 0.0 {
        return Err(VimError::Parameter("lambda and gamma must be nonnegative".into()));
    }
    let loss = cfg.loss.unwrap_or(match d.task() {
        Task::Regression => Loss::Squared,
        Task::Classification => Loss::Logistic,
    });
    let y = d.y();
    let n = d.n_rows();
    if loss == Loss::Logistic && y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(VimError::Parameter("logistic loss requires labels in {0, 1}".into()));
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let base_score = cfg.base_score.unwrap_or(match loss {
        Loss::Squared => mean,
        Loss::Logistic => {
            let m = mean.clamp(1e-6, 1.0 - 1e-6);
            (m / (1.0 - m)).ln()
        }
    });
    let mut margin = vec![base_score; n];
    let total_loss = |m: &[f64]| y.iter().zip(m).map(|(&a, &b)| loss_value(loss, a, b)).sum::<f64>();
    let mut training_loss = vec![total_loss(&margin)];
    let mut trees = Vec::with_capacity(cfg.n_rounds);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    for _ in 0..cfg.n_rounds {
        for i in 0..n {
            let (g, h) = grad_hess(loss, y[i], margin[i]);
            grad[i] = g;
            hess[i] = h;
        }
        let mut grower = Grower { d, grad: &grad, hess: &hess, cfg, nodes: Vec::new() };
        grower.grow((0..n).collect(), 0)?;
        let tree = BoostTree { nodes: grower.nodes, n_samples: n };
        for (i, m) in margin.iter_mut().enumerate() {
            *m += cfg.eta * tree.leaf_value(d.row(i));
        }
        training_loss.push(total_loss(&margin));
        trees.push(tree);
    }
    Ok(BoostModel {
        trees,
        eta: cfg.eta,
        lambda_reg: cfg.lambda,
        gamma: cfg.gamma,
        base_score,
        loss,
        n_features: d.n_features(),
        seed,
        training_loss,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostVimDetails {
    /// Whether node gains were squared before accumulation.
    pub squared_gain: bool,
    pub raw: Vec<f64>,
    /// Raw scores rescaled to sum to 1 (all zero if nothing was split).
    pub normalized: Vec<f64>,
}

/// `(1/K) Σ_trees Σ_{t splits on j} p_{n,t} · gain_t²`, or `gain_t` when
/// `squared_gain` is false. Features above the mean score are selected.
pub fn boost_importance(m: &BoostModel, squared_gain: bool) -> Vec<f64> {
    let mut vi = vec![0.0; m.n_features];
    for tree in &m.trees {
        for node in &tree.nodes {
            if let BoostNode::Internal { split_feature, n_node, gain, .. } = *node {
                let share = n_node as f64 / tree.n_samples as f64;
                vi[split_feature] += share * if squared_gain { gain * gain } else { gain };
            }
        }
    }
    let k = m.trees.len() as f64;
    vi.iter_mut().for_each(|v| *v /= k);
    vi
}

pub fn boost_vim(m: &BoostModel, squared_gain: bool) -> Result<(VimReport, BoostVimDetails)> {
    let raw = boost_importance(m, squared_gain);
    let total: f64 = raw.iter().sum();
    let normalized = raw.iter().map(|v| if total > 0.0 { v / total } else { 0.0 }).collect();
    let report = VimReport::new("xgb", raw.clone(), select_above_mean(&raw), m.seed)?;
    Ok((report, BoostVimDetails { squared_gain, raw, normalized }))
}
