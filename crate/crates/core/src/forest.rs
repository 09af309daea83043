//! CART trees and random forests with impurity (MDI) and out-of-bag
//! permutation (MDA) importance, for regression and binary classification.
//!
//! A split `(j, z)` sends `x_j < z` left and `x_j ≥ z` right. Candidate cuts
//! are midpoints between adjacent distinct sorted values. Regression splits
//! maximize the decrease in mean squared deviation; classification splits
//! maximize the decrease in `p₀·p₁`. Ties go to the lowest feature index and
//! then the lowest cut.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Task};
use crate::error::{Result, VimError};
use crate::model::Predictor;
use crate::report::{select_above_mean, VimReport};
use crate::rng::{self, VimRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TreeNode {
    Internal {
        split_feature: usize,
        split_value: f64,
        left: usize,
        right: usize,
        n_node: usize,
        impurity_decrease: f64,
    },
    Leaf {
        /// Mean response; for classification the fraction of class 1.
        prediction: f64,
        /// `(P(class 0), P(class 1))` for classification leaves.
        #[serde(skip_serializing_if = "Option::is_none", default)]
        class_probabilities: Option<(f64, f64)>,
        n_node: usize,
    },
}

impl TreeNode {
    pub fn n_node(&self) -> usize {
        match *self {
            TreeNode::Internal { n_node, .. } | TreeNode::Leaf { n_node, .. } => n_node,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Root at index 0.
    pub nodes: Vec<TreeNode>,
    pub task: Task,
    pub n_features: usize,
    /// Size of the training sample (with bootstrap multiplicity).
    pub n_samples: usize,
    /// Σ p_{n,t}·L per feature, accumulated while the tree was grown.
    pub accumulated_importance: Vec<f64>,
}

impl Tree {
    /// Leaf prediction: mean response, or probability of class 1.
    pub fn predict_value(&self, row: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                TreeNode::Internal { split_feature, split_value, left, right, .. } => {
                    k = if row[split_feature] < split_value { left } else { right };
                }
                TreeNode::Leaf { prediction, .. } => return prediction,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, k: usize) -> usize {
            match t.nodes[k] {
                TreeNode::Internal { left, right, .. } => 1 + go(t, left).max(go(t, right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        go(self, 0)
    }

    /// Σ over internal nodes of `(n_node / n_samples) · impurity_decrease`,
    /// per split feature, recomputed by traversal.
    pub fn importance_by_traversal(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_features];
        for node in &self.nodes {
            if let TreeNode::Internal { split_feature, n_node, impurity_decrease, .. } = *node {
                imp[split_feature] += n_node as f64 / self.n_samples as f64 * impurity_decrease;
            }
        }
        imp
    }
}

impl Predictor for Tree {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let v = self.predict_value(row);
        match self.task {
            Task::Regression => v,
            Task::Classification => f64::from(v > 0.5),
        }
    }
}

/// Regression CART criterion for the cut `x < z`, evaluated literally:
/// mean squared deviation in the cell minus the mean squared deviation
/// around the child means. `None` when a child is empty.
pub fn cart_split_score_reg(y: &[f64], x: &[f64], z: f64) -> Option<f64> {
    let n = y.len() as f64;
    let (mut sl, mut nl, mut sr, mut nr) = (0.0, 0usize, 0.0, 0usize);
    for (&yi, &xi) in y.iter().zip(x) {
        if xi < z {
            sl += yi;
            nl += 1;
        } else {
            sr += yi;
            nr += 1;
        }
    }
    if nl == 0 || nr == 0 {
        return None;
    }
    let mean = y.iter().sum::<f64>() / n;
    let (ml, mr) = (sl / nl as f64, sr / nr as f64);
    let parent: f64 = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let children: f64 = y.iter().zip(x).map(|(&yi, &xi)| (yi - if xi < z { ml } else { mr }).powi(2)).sum::<f64>() / n;
    Some(parent - children)
}

fn p0p1(ones: usize, total: usize) -> f64 {
    let p1 = ones as f64 / total as f64;
    (1.0 - p1) * p1
}

/// Classification criterion `p₀p₁(A) − (N_L/N)p₀p₁(A_L) − (N_R/N)p₀p₁(A_R)`
/// for labels in {0, 1}. `None` when a child is empty.
pub fn cart_split_score_class(y: &[f64], x: &[f64], z: f64) -> Option<f64> {
    let n = y.len();
    let (mut nl, mut ol, mut ones) = (0usize, 0usize, 0usize);
    for (&yi, &xi) in y.iter().zip(x) {
        let one = yi == 1.0;
        ones += one as usize;
        if xi < z {
            nl += 1;
            ol += one as usize;
        }
    }
    let nr = n - nl;
    if nl == 0 || nr == 0 {
        return None;
    }
    let nf = n as f64;
    Some(p0p1(ones, n) - nl as f64 / nf * p0p1(ol, nl) - nr as f64 / nf * p0p1(ones - ol, nr))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConfig {
    pub mtry: usize,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let z = a + (b - a) / 2.0;
    if z <= a {
        b
    } else {
        z
    }
}

/// Best cut over `features` for the cell made of `rows`; both children must
/// hold at least `min_leaf` rows. Returns `None` if no cut has a positive
/// criterion.
pub fn best_split(d: &Dataset, rows: &[usize], features: &[usize], min_leaf: usize) -> Option<Split> {
    let n = rows.len();
    if n < 2 * min_leaf.max(1) {
        return None;
    }
    let y = d.y();
    let nf = n as f64;
    let mut best: Option<Split> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    match d.task() {
        Task::Regression => {
            let mean = rows.iter().map(|&i| y[i]).sum::<f64>() / nf;
            let total: f64 = rows.iter().map(|&i| y[i] - mean).sum();
            for &j in features {
                pairs.clear();
                pairs.extend(rows.iter().map(|&i| (d.x(i, j), y[i] - mean)));
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut sl = 0.0;
                for k in 0..n - 1 {
                    sl += pairs[k].1;
                    let nl = k + 1;
                    if pairs[k].0 == pairs[k + 1].0 || nl < min_leaf || n - nl < min_leaf {
                        continue;
                    }
                    let nr = n - nl;
                    let sr = total - sl;
                    let score = (sl * sl / nl as f64 + sr * sr / nr as f64 - total * total / nf) / nf;
                    if score > best.map_or(0.0, |b| b.score) {
                        best = Some(Split { feature: j, threshold: midpoint(pairs[k].0, pairs[k + 1].0), score });
                    }
                }
            }
        }
        Task::Classification => {
            let ones = rows.iter().filter(|&&i| y[i] == 1.0).count();
            let parent = p0p1(ones, n);
            if parent == 0.0 {
                return None;
            }
            for &j in features {
                pairs.clear();
                pairs.extend(rows.iter().map(|&i| (d.x(i, j), y[i])));
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut ol = 0usize;
                for k in 0..n - 1 {
                    ol += (pairs[k].1 == 1.0) as usize;
                    let nl = k + 1;
                    if pairs[k].0 == pairs[k + 1].0 || nl < min_leaf || n - nl < min_leaf {
                        continue;
                    }
                    let nr = n - nl;
                    let score = parent - nl as f64 / nf * p0p1(ol, nl) - nr as f64 / nf * p0p1(ones - ol, nr);
                    if score > best.map_or(0.0, |b| b.score) {
                        best = Some(Split { feature: j, threshold: midpoint(pairs[k].0, pairs[k + 1].0), score });
                    }
                }
            }
        }
    }
    best
}

fn make_leaf(d: &Dataset, rows: &[usize]) -> TreeNode {
    let y = d.y();
    let mean = rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64;
    TreeNode::Leaf {
        prediction: mean,
        class_probabilities: (d.task() == Task::Classification).then_some((1.0 - mean, mean)),
        n_node: rows.len(),
    }
}

/// Grows one CART tree on `rows` (indices may repeat). With `rng = None`
/// every node considers all features.
pub fn grow_tree(d: &Dataset, rows: Vec<usize>, cfg: &TreeConfig, mut rng: Option<&mut VimRng>) -> Tree {
    let p = d.n_features();
    let n_samples = rows.len();
    let all: Vec<usize> = (0..p).collect();
    let mut nodes = vec![make_leaf(d, &rows)];
    let mut accumulated = vec![0.0; p];
    let mut stack = vec![(0usize, rows, 0usize)];
    while let Some((slot, rows, depth)) = stack.pop() {
        if cfg.max_depth.is_some_and(|m| depth >= m) {
            continue;
        }
        let features: Vec<usize> = match rng.as_deref_mut() {
            Some(r) if cfg.mtry < p => {
                let mut f = index::sample(r, p, cfg.mtry).into_vec();
                f.sort_unstable();
                f
            }
            _ => all.clone(),
        };
        let Some(split) = best_split(d, &rows, &features, cfg.min_leaf) else {
            continue;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| d.x(i, split.feature) < split.threshold);
        let left = nodes.len();
        nodes.push(make_leaf(d, &left_rows));
        let right = nodes.len();
        nodes.push(make_leaf(d, &right_rows));
        accumulated[split.feature] += rows.len() as f64 / n_samples as f64 * split.score;
        nodes[slot] = TreeNode::Internal {
            split_feature: split.feature,
            split_value: split.threshold,
            left,
            right,
            n_node: rows.len(),
            impurity_decrease: split.score,
        };
        stack.push((right, right_rows, depth + 1));
        stack.push((left, left_rows, depth + 1));
    }
    Tree { nodes, task: d.task(), n_features: p, n_samples, accumulated_importance: accumulated }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfConfig {
    pub n_trees: usize,
    /// Defaults to ⌈p/3⌉ (regression) or ⌈√p⌉ (classification).
    pub mtry: Option<usize>,
    /// Defaults to 5 (regression) or 1 (classification).
    pub min_leaf: Option<usize>,
    pub max_depth: Option<usize>,
    /// Train on bootstrap samples; when false every tree sees all rows and
    /// has no out-of-bag set.
    pub bootstrap: bool,
}

impl Default for RfConfig {
    fn default() -> Self {
        RfConfig { n_trees: 500, mtry: None, min_leaf: None, max_depth: None, bootstrap: true }
    }
}

pub fn default_mtry(task: Task, p: usize) -> usize {
    match task {
        Task::Regression => p.div_ceil(3),
        Task::Classification => (p as f64).sqrt().ceil() as usize,
    }
    .clamp(1, p)
}

pub fn default_min_leaf(task: Task) -> usize {
    match task {
        Task::Regression => 5,
        Task::Classification => 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub mtry: usize,
    pub min_leaf: usize,
    /// Out-of-bag rows per tree, ascending.
    pub oob_index_sets: Vec<Vec<usize>>,
    pub seed: u64,
    pub task: Task,
    pub n_features: usize,
}

impl Forest {
    /// Averaged leaf values: the regression estimate or P(class 1).
    pub fn predict_value(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_value(row)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

impl Predictor for Forest {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let v = self.predict_value(row);
        match self.task {
            Task::Regression => v,
            Task::Classification => f64::from(v > 0.5),
        }
    }
}

pub fn bootstrap_rows(n: usize, rng: &mut impl Rng) -> (Vec<usize>, Vec<usize>) {
    let mut counts = vec![0u32; n];
    let rows: Vec<usize> = (0..n)
        .map(|_| {
            let i = rng.random_range(0..n);
            counts[i] += 1;
            i
        })
        .collect();
    let oob = (0..n).filter(|&i| counts[i] == 0).collect();
    (rows, oob)
}

/// Trains `n_trees` trees; tree `l` draws from its own stream of `seed`.
pub fn rf_fit(d: &Dataset, cfg: &RfConfig, seed: u64) -> Result<Forest> {
    let p = d.n_features();
    let n = d.n_rows();
    if cfg.n_trees == 0 {
        return Err(VimError::Parameter("forest needs at least one tree".into()));
    }
    let mtry = cfg.mtry.unwrap_or_else(|| default_mtry(d.task(), p));
    if mtry == 0 || mtry > p {
        return Err(VimError::Parameter(format!("mtry must be in [1, {p}], got {mtry}")));
    }
    let min_leaf = cfg.min_leaf.unwrap_or_else(|| default_min_leaf(d.task()));
    if min_leaf == 0 {
        return Err(VimError::Parameter("min_leaf must be at least 1".into()));
    }
    if d.task() == Task::Classification && d.n_classes() > 2 {
        return Err(VimError::Parameter(format!(
            "forests support binary classification only, found {} classes",
            d.n_classes()
        )));
    }
    let tree_cfg = TreeConfig { mtry, min_leaf, max_depth: cfg.max_depth };
    let grown: Vec<(Tree, Vec<usize>)> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|l| {
            let mut r = rng::stream(seed, l as u64);
            let (rows, oob) = if cfg.bootstrap { bootstrap_rows(n, &mut r) } else { ((0..n).collect(), Vec::new()) };
            (grow_tree(d, rows, &tree_cfg, Some(&mut r)), oob)
        })
        .collect();
    let (trees, oob_index_sets) = grown.into_iter().unzip();
    Ok(Forest { trees, mtry, min_leaf, oob_index_sets, seed, task: d.task(), n_features: p })
}

/// MDI by traversal of the stored trees: `(1/M) Σ_trees Σ_{t splits on j} p_{n,t} L_t`.
pub fn mdi_scores(f: &Forest) -> Vec<f64> {
    let mut total = vec![0.0; f.n_features];
    for tree in &f.trees {
        for (t, v) in total.iter_mut().zip(tree.importance_by_traversal()) {
            *t += v;
        }
    }
    let m = f.trees.len() as f64;
    total.iter_mut().for_each(|t| *t /= m);
    total
}

/// MDI from the per-tree totals accumulated during growth.
pub fn mdi_scores_accumulated(f: &Forest) -> Vec<f64> {
    let mut total = vec![0.0; f.n_features];
    for tree in &f.trees {
        for (t, v) in total.iter_mut().zip(&tree.accumulated_importance) {
            *t += v;
        }
    }
    let m = f.trees.len() as f64;
    total.iter_mut().for_each(|t| *t /= m);
    total
}

/// Mean decrease in impurity; features above the mean score are selected.
pub fn rf_mdi(f: &Forest) -> Result<VimReport> {
    let scores = mdi_scores(f);
    let selected = select_above_mean(&scores);
    VimReport::new("rf-mdi", scores, selected, f.seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdaDetails {
    pub trees_used: usize,
    pub trees_skipped: usize,
    pub n_permutations: usize,
}

fn tree_error(tree: &Tree, d: &Dataset, rows: &[usize], column: Option<(usize, &[f64])>) -> f64 {
    let mut scratch = vec![0.0; d.n_features()];
    let mut loss = 0.0;
    for (k, &i) in rows.iter().enumerate() {
        scratch.copy_from_slice(d.row(i));
        if let Some((j, values)) = column {
            scratch[j] = values[k];
        }
        let y = d.y()[i];
        loss += match tree.task {
            Task::Regression => (y - tree.predict_value(&scratch)).powi(2),
            Task::Classification => f64::from(tree.predict_row(&scratch) != y),
        };
    }
    loss / rows.len() as f64
}

/// Mean decrease in accuracy: the average over trees of the OOB error with
/// column `j` permuted minus the plain OOB error. Squared error for
/// regression, misclassification rate for classification. Trees with an
/// empty OOB set are skipped.
pub fn rf_mda(f: &Forest, d: &Dataset, n_permutations: usize, seed: u64) -> Result<(VimReport, MdaDetails)> {
    if n_permutations == 0 {
        return Err(VimError::Parameter("n_permutations must be at least 1".into()));
    }
    let p = d.n_features();
    if p != f.n_features {
        return Err(VimError::Parameter(format!("forest was trained on {} features, dataset has {p}", f.n_features)));
    }
    let per_tree: Vec<Option<Vec<f64>>> = f
        .trees
        .par_iter()
        .zip(&f.oob_index_sets)
        .enumerate()
        .map(|(l, (tree, oob))| {
            if oob.is_empty() {
                return None;
            }
            let base = tree_error(tree, d, oob, None);
            let drops = (0..p)
                .map(|j| {
                    let mut r = rng::pair_stream(seed, l as u64, j as u64);
                    let mut total = 0.0;
                    let mut values: Vec<f64> = Vec::with_capacity(oob.len());
                    for _ in 0..n_permutations {
                        values.clear();
                        values.extend(oob.iter().map(|&i| d.x(i, j)));
                        values.shuffle(&mut r);
                        total += tree_error(tree, d, oob, Some((j, &values))) - base;
                    }
                    total / n_permutations as f64
                })
                .collect();
            Some(drops)
        })
        .collect();
    let mut scores = vec![0.0; p];
    let mut used = 0usize;
    for drops in per_tree.iter().flatten() {
        used += 1;
        for (s, v) in scores.iter_mut().zip(drops) {
            *s += v;
        }
    }
    if used == 0 {
        return Err(VimError::Estimation("no tree has out-of-bag rows".into()));
    }
    scores.iter_mut().for_each(|s| *s /= used as f64);
    let selected = select_above_mean(&scores);
    let report = VimReport::new("rf-mda", scores, selected, seed)?;
    Ok((report, MdaDetails { trees_used: used, trees_skipped: f.trees.len() - used, n_permutations }))
}
