//! Soft-margin SVM dual solver and margin-based backward elimination.
//!
//! The dual
//!
//! ```text
//! max_α  Σα_i − ½ ΣΣ α_i α_j y_i y_j K(x_i, x_j)   s.t.  0 ≤ α_i ≤ c,  Σ α_i y_i = 0
//! ```
//!
//! is solved by SMO with second-order working-set selection. The classifier
//! is `sgn(Σ α_i y_i K(x_i, x) − b)`.

use serde::{Deserialize, Serialize};

use crate::data::{standardize, Dataset, Task};
use crate::error::{Result, VimError};
use crate::report::VimReport;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    /// `exp(−‖a − b‖² / (2σ²))`
    Rbf {
        sigma: f64,
    },
}

impl Kernel {
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        self.eval_excluding(a, b, None)
    }

    /// Kernel on the vectors with coordinate `exclude` removed.
    pub fn eval_excluding(&self, a: &[f64], b: &[f64], exclude: Option<usize>) -> f64 {
        let skip = exclude.unwrap_or(usize::MAX);
        match *self {
            Kernel::Linear => a.iter().zip(b).enumerate().filter(|(k, _)| *k != skip).map(|(_, (x, y))| x * y).sum(),
            Kernel::Rbf { sigma } => {
                let d2: f64 =
                    a.iter().zip(b).enumerate().filter(|(k, _)| *k != skip).map(|(_, (x, y))| (x - y) * (x - y)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmFit {
    pub alphas: Vec<f64>,
    pub b: f64,
    pub kernel: Kernel,
    pub c: f64,
    pub support_indices: Vec<usize>,
    /// Training labels in {−1, +1}.
    pub labels: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Maximal KKT violation at termination.
    pub kkt_gap: f64,
    /// Training rows of the support vectors, for prediction.
    pub support_vectors: Vec<Vec<f64>>,
    /// Dual objective after every SMO step (first entry: α = 0).
    #[serde(skip)]
    pub dual_objective_trace: Vec<f64>,
}

impl SvmFit {
    /// `Σ α_i y_i K(x_i, x) − b`
    pub fn decision_value(&self, row: &[f64]) -> f64 {
        self.support_indices
            .iter()
            .zip(&self.support_vectors)
            .map(|(&i, sv)| self.alphas[i] * self.labels[i] * self.kernel.eval(sv, row))
            .sum::<f64>()
            - self.b
    }

    /// Predicted label in {−1, 0, +1}.
    pub fn predict_sign(&self, row: &[f64]) -> f64 {
        let v = self.decision_value(row);
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    /// `w = Σ α_i y_i x_i` (meaningful for the linear kernel).
    pub fn primal_weights(&self) -> Vec<f64> {
        let p = self.support_vectors.first().map_or(0, Vec::len);
        let mut w = vec![0.0; p];
        for (&i, sv) in self.support_indices.iter().zip(&self.support_vectors) {
            let a = self.alphas[i] * self.labels[i];
            for (wk, v) in w.iter_mut().zip(sv) {
                *wk += a * v;
            }
        }
        w
    }

    pub fn dual_objective(&self, d: &Dataset) -> f64 {
        let s = &self.support_indices;
        let mut quad = 0.0;
        for &i in s {
            for &j in s {
                quad += self.alphas[i]
                    * self.alphas[j]
                    * self.labels[i]
                    * self.labels[j]
                    * self.kernel.eval(d.row(i), d.row(j));
            }
        }
        self.alphas.iter().sum::<f64>() - 0.5 * quad
    }
}

fn binary_labels(d: &Dataset) -> Result<Vec<f64>> {
    if d.task() != Task::Classification {
        return Err(VimError::UnsupportedTask { method: "svm".into(), task: d.task() });
    }
    if d.n_classes() > 2 {
        return Err(VimError::Parameter(format!("svm supports two classes, found {}", d.n_classes())));
    }
    Ok(d.y().iter().map(|&v| if v == 1.0 { 1.0 } else { -1.0 }).collect())
}

/// Fits on binary classification data; class 1 maps to +1, class 0 to −1.
pub fn svm_fit(d: &Dataset, kernel: Kernel, c: f64, tol: f64, _seed: u64) -> Result<SvmFit> {
    let labels = binary_labels(d)?;
    svm_fit_signed(d, &labels, kernel, c, tol)
}

const TAU: f64 = 1e-12;

/// SMO on explicit ±1 labels.
pub fn svm_fit_signed(d: &Dataset, labels: &[f64], kernel: Kernel, c: f64, tol: f64) -> Result<SvmFit> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(VimError::Parameter(format!("c must be positive, got {c}")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(VimError::Parameter(format!("tol must be positive, got {tol}")));
    }
    if let Kernel::Rbf { sigma } = kernel {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(VimError::Parameter(format!("rbf sigma must be positive, got {sigma}")));
        }
    }
    let n = d.n_rows();
    if labels.len() != n {
        return Err(VimError::Parameter("label count differs from row count".into()));
    }
    if labels.iter().all(|&v| v > 0.0) || labels.iter().all(|&v| v < 0.0) {
        return Err(VimError::SingleClass);
    }
    let y = labels;
    let mut kmat = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(d.row(i), d.row(j));
            kmat[i * n + j] = v;
            kmat[j * n + i] = v;
        }
    }
    let k = |i: usize, j: usize| kmat[i * n + j];

    let mut alpha = vec![0.0; n];
    // gradient of ½αᵀQα − Σα
    let mut grad = vec![-1.0; n];
    let dual = |alpha: &[f64], grad: &[f64]| -0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>();
    let mut trace = vec![0.0];
    let max_iter = (100 * n).max(10_000_000);
    let mut iterations = 0;
    let mut converged = false;
    let mut gap = f64::INFINITY;
    let up = |a: f64, yt: f64| if yt > 0.0 { a < c } else { a > 0.0 };
    let low = |a: f64, yt: f64| if yt > 0.0 { a > 0.0 } else { a < c };

    while iterations < max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = t;
                }
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut best_obj = f64::INFINITY;
        if i_sel != usize::MAX {
            let i = i_sel;
            for t in 0..n {
                if !low(alpha[t], y[t]) {
                    continue;
                }
                let v = y[t] * grad[t];
                gmax2 = gmax2.max(v);
                let diff = gmax + v;
                if diff > 0.0 {
                    let quad = (k(i, i) + k(t, t) - 2.0 * k(i, t)).max(TAU);
                    let obj = -diff * diff / quad;
                    if obj < best_obj {
                        best_obj = obj;
                        j_sel = t;
                    }
                }
            }
        }
        gap = gmax + gmax2;
        if gap < tol || j_sel == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;
        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * k(i, j);
        if y[i] != y[j] {
            let quad = (k(i, i) + k(j, j) + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (k(i, i) + k(j, j) - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k(i, t) * di + y[j] * k(j, t) * dj);
        }
        trace.push(dual(&alpha, &grad));
    }

    let sv_eps = 1e-9 * c;
    let support_indices: Vec<usize> = (0..n).filter(|&i| alpha[i] > sv_eps).collect();
    let free: Vec<usize> = support_indices.iter().copied().filter(|&i| alpha[i] < c - sv_eps).collect();
    let pool = if free.is_empty() { &support_indices } else { &free };
    // y_i G_i = Σ_j α_j y_j K_ij − y_i
    let b = if pool.is_empty() { 0.0 } else { pool.iter().map(|&i| y[i] * grad[i]).sum::<f64>() / pool.len() as f64 };
    let support_vectors = support_indices.iter().map(|&i| d.row(i).to_vec()).collect();
    Ok(SvmFit {
        alphas: alpha,
        b,
        kernel,
        c,
        support_indices,
        labels: y.to_vec(),
        iterations,
        converged,
        kkt_gap: gap,
        support_vectors,
        dual_objective_trace: trace,
    })
}

/// `W² = ΣΣ α_i α_j y_i y_j K(x_i, x_j)`, with the kernel evaluated on rows
/// of `d` without coordinate `exclude` when given. The multipliers are the
/// fitted ones.
pub fn margin_w2(f: &SvmFit, d: &Dataset, exclude: Option<usize>) -> Result<f64> {
    if let Some(p) = exclude {
        if p >= d.n_features() {
            return Err(VimError::Parameter(format!(
                "excluded feature {p} out of range for {} features",
                d.n_features()
            )));
        }
    }
    if d.n_rows() != f.alphas.len() {
        return Err(VimError::Parameter("dataset is not the training set of this fit".into()));
    }
    let s = &f.support_indices;
    let mut total = 0.0;
    for &i in s {
        let ai = f.alphas[i] * f.labels[i];
        for &j in s {
            total += ai * f.alphas[j] * f.labels[j] * f.kernel.eval_excluding(d.row(i), d.row(j), exclude);
        }
    }
    Ok(total)
}

/// `|W² − W²₍₋ₚ₎|` for every feature, from the factored kernel update:
/// `(Σ α_i y_i x_ip)²` for the linear kernel and
/// `|ΣΣ a_i a_j K_ij (1 − exp((x_ip − x_jp)²/(2σ²)))|` for RBF.
pub fn margin_drops(f: &SvmFit, d: &Dataset) -> Vec<f64> {
    let p = d.n_features();
    let s = &f.support_indices;
    let a: Vec<f64> = s.iter().map(|&i| f.alphas[i] * f.labels[i]).collect();
    match f.kernel {
        Kernel::Linear => (0..p)
            .map(|q| {
                let w: f64 = s.iter().zip(&a).map(|(&i, ai)| ai * d.x(i, q)).sum();
                w * w
            })
            .collect(),
        Kernel::Rbf { sigma } => {
            let m = s.len();
            let mut kv = vec![0.0; m * m];
            for (u, &i) in s.iter().enumerate() {
                for (v, &j) in s.iter().enumerate() {
                    kv[u * m + v] = a[u] * a[v] * f.kernel.eval(d.row(i), d.row(j));
                }
            }
            let two_s2 = 2.0 * sigma * sigma;
            (0..p)
                .map(|q| {
                    let mut total = 0.0;
                    for (u, &i) in s.iter().enumerate() {
                        let xi = d.x(i, q);
                        for (v, &j) in s.iter().enumerate() {
                            let diff = xi - d.x(j, q);
                            total += kv[u * m + v] * (1.0 - (diff * diff / two_s2).exp());
                        }
                    }
                    total.abs()
                })
                .collect()
        }
    }
}

/// Median Euclidean distance over all row pairs.
pub fn median_pairwise_distance(d: &Dataset) -> f64 {
    let n = d.n_rows();
    let mut dist = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let s: f64 = d.row(i).iter().zip(d.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            dist.push(s.sqrt());
        }
    }
    let mid = dist.len() / 2;
    let (_, m, _) = dist.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KernelChoice {
    Linear,
    /// `sigma = None` uses the median pairwise distance of the standardized
    /// data.
    Rbf {
        sigma: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmWrapperConfig {
    pub kernel: KernelChoice,
    pub c: f64,
    /// Number of features left when elimination stops; defaults to ⌈p/2⌉.
    pub keep_m: Option<usize>,
    pub tol: f64,
}

impl Default for SvmWrapperConfig {
    fn default() -> Self {
        SvmWrapperConfig { kernel: KernelChoice::Linear, c: 1.0, keep_m: None, tol: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationRound {
    pub survivors: Vec<usize>,
    /// `|W² − W²₍₋ₚ₎|` per survivor, same order.
    pub criteria: Vec<f64>,
    pub eliminated: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmWrapperDetails {
    pub rounds: Vec<EliminationRound>,
    pub elimination_order: Vec<usize>,
    pub kernel: Kernel,
    /// A refit failed and elimination stopped early.
    pub partial: bool,
    pub failure: Option<String>,
    /// The response was real-valued and was split at its median.
    pub binarized_response: bool,
}

pub fn default_keep(p: usize) -> usize {
    p.div_ceil(2).min(p.saturating_sub(1)).max(1)
}

/// Backward elimination: refit on the surviving features, drop the one with
/// the smallest `|W² − W²₍₋ₚ₎|`, repeat until `keep_m` remain. A feature's
/// score is the round in which it was eliminated; survivors score above every
/// eliminated feature, ordered by their final-round criterion.
///
/// Features are standardized first. A real-valued response is turned into
/// two classes at its median (`y > median` is the positive class).
pub fn svm_wrapper_vim(d: &Dataset, cfg: &SvmWrapperConfig, seed: u64) -> Result<(VimReport, SvmWrapperDetails)> {
    let p = d.n_features();
    let keep = cfg.keep_m.unwrap_or_else(|| default_keep(p));
    if keep < 1 || keep >= p {
        return Err(VimError::Parameter(format!("keep_m must be in [1, {}), got {keep}", p)));
    }
    let (labels, binarized) = match d.task() {
        Task::Classification => (binary_labels(d)?, false),
        Task::Regression => {
            let mut sorted = d.y().to_vec();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
            (d.y().iter().map(|&v| if v > median { 1.0 } else { -1.0 }).collect(), true)
        }
    };
    let (mut z, params) = standardize(d);
    for j in 0..p {
        if params.zero_variance[j] {
            z.set_column(j, &vec![0.0; d.n_rows()]);
        }
    }
    let kernel = match cfg.kernel {
        KernelChoice::Linear => Kernel::Linear,
        KernelChoice::Rbf { sigma: Some(s) } => Kernel::Rbf { sigma: s },
        KernelChoice::Rbf { sigma: None } => {
            let m = median_pairwise_distance(&z);
            Kernel::Rbf { sigma: if m > 0.0 { m } else { 1.0 } }
        }
    };

    let mut survivors: Vec<usize> = (0..p).collect();
    let mut scores = vec![0.0; p];
    let mut rounds = Vec::new();
    let mut order = Vec::new();
    let mut failure = None;
    let mut round = 1usize;
    loop {
        let sub = z.select_features(&survivors);
        let fit = match svm_fit_signed(&sub, &labels, kernel, cfg.c, cfg.tol) {
            Ok(f) => f,
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        };
        let criteria = margin_drops(&fit, &sub);
        if survivors.len() <= keep {
            let mut by_crit: Vec<usize> = (0..survivors.len()).collect();
            by_crit.sort_by(|&a, &b| criteria[a].total_cmp(&criteria[b]));
            for (offset, &k) in by_crit.iter().enumerate() {
                scores[survivors[k]] = (round + offset) as f64;
            }
            rounds.push(EliminationRound { survivors: survivors.clone(), criteria, eliminated: None });
            break;
        }
        let mut worst = 0;
        for k in 1..survivors.len() {
            if criteria[k] < criteria[worst] {
                worst = k;
            }
        }
        let gone = survivors[worst];
        rounds.push(EliminationRound { survivors: survivors.clone(), criteria, eliminated: Some(gone) });
        scores[gone] = round as f64;
        order.push(gone);
        survivors.remove(worst);
        round += 1;
    }
    let partial = failure.is_some();
    if partial {
        for &j in &survivors {
            scores[j] = round as f64;
        }
    }
    let report = VimReport::new("svm", scores, survivors.clone(), seed)?;
    Ok((
        report,
        SvmWrapperDetails { rounds, elimination_order: order, kernel, partial, failure, binarized_response: binarized },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_points() -> Dataset {
        Dataset::new(vec![vec![0.0], vec![2.0]], vec![0.0, 1.0], vec!["x".into()], Task::Classification).unwrap()
    }

    #[test]
    fn two_point_max_margin() {
        let d = two_points();
        let f = svm_fit(&d, Kernel::Linear, 1e6, 1e-10, 0).unwrap();
        assert!((f.alphas[0] - 0.5).abs() < 1e-12);
        assert!((f.alphas[1] - 0.5).abs() < 1e-12);
        assert!((f.primal_weights()[0] - 1.0).abs() < 1e-12);
        assert!((f.b - 1.0).abs() < 1e-12);
        assert_eq!(f.predict_sign(&[0.0]), -1.0);
        assert_eq!(f.predict_sign(&[2.0]), 1.0);
        assert!((margin_w2(&f, &d, None).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let d =
            Dataset::new(vec![vec![0.0], vec![2.0]], vec![0.0, 0.0], vec!["x".into()], Task::Classification).unwrap();
        assert!(matches!(svm_fit(&d, Kernel::Linear, 1.0, 1e-4, 0), Err(VimError::SingleClass)));
        let r = Dataset::new(vec![vec![0.0], vec![2.0]], vec![0.0, 1.0], vec!["x".into()], Task::Regression).unwrap();
        assert!(matches!(svm_fit(&r, Kernel::Linear, 1.0, 1e-4, 0), Err(VimError::UnsupportedTask { .. })));
        assert!(svm_fit(&two_points(), Kernel::Linear, 0.0, 1e-4, 0).is_err());
        let f = svm_fit(&two_points(), Kernel::Linear, 1.0, 1e-4, 0).unwrap();
        assert!(margin_w2(&f, &two_points(), Some(1)).is_err());
    }

    #[test]
    fn keep_default() {
        assert_eq!(default_keep(10), 5);
        assert_eq!(default_keep(15), 8);
        assert_eq!(default_keep(2), 1);
    }
}
