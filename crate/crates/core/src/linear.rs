//! LASSO by cyclic coordinate descent, ordinary least squares and logistic
//! regression.
//!
//! The LASSO solver minimizes
//!
//! ```text
//! (1/(2n)) ‖y − b₀ − Zβ‖² + λ‖β‖₁
//! ```
//!
//! on standardized features `Z` with an unpenalized intercept `b₀`. This is
//! the same problem as `‖y − Xβ‖² + λ'‖β‖₁` with `λ' = 2nλ`
//! ([`LassoFit::unscaled_penalty`]); the normalized form keeps the λ grid
//! independent of the sample size. Binary responses use the penalized mean
//! negative log-likelihood instead, solved by iteratively reweighted
//! coordinate descent on the quadratic approximation.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Standardization, Task};
use crate::error::{Result, VimError};
use crate::model::Predictor;
use crate::report::VimReport;

#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^t)` without overflow.
#[inline]
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LassoLoss {
    Squared,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    /// Stop when the largest coordinate change in a sweep is below this.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions { tol: 1e-9, max_sweeps: 10_000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LassoFit {
    pub lambda: f64,
    /// Coefficients on the standardized feature scale.
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub n_iter: usize,
    pub converged: bool,
    pub loss: LassoLoss,
    pub standardization: Standardization,
    /// Penalized objective after every sweep (outer iteration for logistic).
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

impl LassoFit {
    /// Penalty for the unnormalized objective `‖y − Xβ‖² + λ'‖β‖₁` that has
    /// the same minimizer: `λ' = 2nλ`.
    pub fn unscaled_penalty(&self, n: usize) -> f64 {
        2.0 * n as f64 * self.lambda
    }

    pub fn nonzero(&self) -> Vec<usize> {
        self.beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect()
    }

    /// `b₀ + βᵀz` for a raw (unstandardized) row.
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        let mut eta = self.intercept;
        for (j, (&b, &v)) in self.beta.iter().zip(row).enumerate() {
            if b != 0.0 {
                eta += b * self.standardization.transform_value(j, v);
            }
        }
        eta
    }
}

impl Predictor for LassoFit {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let eta = self.linear_predictor(row);
        match self.loss {
            LassoLoss::Squared => eta,
            LassoLoss::Logistic => f64::from(sigmoid(eta) > 0.5),
        }
    }
}

/// Standardized, column-major design; constant columns are inactive.
struct Design {
    cols: Vec<Vec<f64>>,
    sq: Vec<f64>,
    active: Vec<bool>,
    n: usize,
    standardization: Standardization,
}

impl Design {
    fn new(d: &Dataset) -> Self {
        let standardization = Standardization::fit(d);
        let n = d.n_rows();
        let mut cols = Vec::with_capacity(d.n_features());
        let mut sq = Vec::with_capacity(d.n_features());
        let mut active = Vec::with_capacity(d.n_features());
        for j in 0..d.n_features() {
            let on = !standardization.zero_variance[j];
            let col: Vec<f64> =
                if on { (0..n).map(|i| standardization.transform_value(j, d.x(i, j))).collect() } else { vec![0.0; n] };
            sq.push(col.iter().map(|v| v * v).sum::<f64>() / n as f64);
            cols.push(col);
            active.push(on);
        }
        Design { cols, sq, active, n, standardization }
    }

    fn lambda_max(&self, y: &[f64]) -> f64 {
        let mean = y.iter().sum::<f64>() / self.n as f64;
        self.cols
            .iter()
            .zip(&self.active)
            .filter(|(_, on)| **on)
            .map(|(c, _)| (c.iter().zip(y).map(|(a, b)| a * (b - mean)).sum::<f64>() / self.n as f64).abs())
            .fold(0.0, f64::max)
    }
}

fn squared_objective(resid: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let n = resid.len() as f64;
    resid.iter().map(|r| r * r).sum::<f64>() / (2.0 * n) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Cyclic coordinate descent for the squared loss; `yc` is centered.
fn solve_squared(
    x: &Design,
    yc: &[f64],
    lambda: f64,
    beta: &mut [f64],
    opts: &LassoOptions,
) -> (usize, bool, Vec<f64>) {
    let n = x.n as f64;
    let mut resid: Vec<f64> = yc.to_vec();
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            for (r, z) in resid.iter_mut().zip(&x.cols[j]) {
                *r -= z * b;
            }
        }
    }
    let mut trace = vec![squared_objective(&resid, beta, lambda)];
    for sweep in 1..=opts.max_sweeps {
        let mut max_change = 0.0f64;
        for j in 0..beta.len() {
            if !x.active[j] {
                beta[j] = 0.0;
                continue;
            }
            let col = &x.cols[j];
            let old = beta[j];
            let rho = col.iter().zip(&resid).map(|(z, r)| z * r).sum::<f64>() / n + x.sq[j] * old;
            let new = soft_threshold(rho, lambda) / x.sq[j];
            let delta = new - old;
            if delta != 0.0 {
                for (r, z) in resid.iter_mut().zip(col) {
                    *r -= z * delta;
                }
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        trace.push(squared_objective(&resid, beta, lambda));
        if max_change < opts.tol {
            return (sweep, true, trace);
        }
    }
    (opts.max_sweeps, false, trace)
}

fn logistic_penalized(x: &Design, y: &[f64], beta: &[f64], b0: f64, lambda: f64) -> f64 {
    let mut loss = 0.0;
    for i in 0..x.n {
        let mut eta = b0;
        for (j, b) in beta.iter().enumerate() {
            if *b != 0.0 {
                eta += b * x.cols[j][i];
            }
        }
        loss += softplus(eta) - y[i] * eta;
    }
    loss / x.n as f64 + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

const LOGISTIC_MAX_OUTER: usize = 100;
const LOGISTIC_MIN_WEIGHT: f64 = 1e-5;

/// Iteratively reweighted coordinate descent for the L1-penalized logistic
/// loss.
fn solve_logistic(
    x: &Design,
    y: &[f64],
    lambda: f64,
    beta: &mut [f64],
    b0: &mut f64,
    opts: &LassoOptions,
) -> (usize, bool, Vec<f64>) {
    let n = x.n;
    let nf = n as f64;
    let mut trace = vec![logistic_penalized(x, y, beta, *b0, lambda)];
    let mut total_sweeps = 0;
    let mut eta = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut resid = vec![0.0; n];
    for _outer in 0..LOGISTIC_MAX_OUTER {
        for i in 0..n {
            let mut e = *b0;
            for (j, b) in beta.iter().enumerate() {
                if *b != 0.0 {
                    e += b * x.cols[j][i];
                }
            }
            eta[i] = e;
            let pr = sigmoid(e);
            w[i] = (pr * (1.0 - pr)).max(LOGISTIC_MIN_WEIGHT);
            // working response minus current fit
            resid[i] = (y[i] - pr) / w[i];
        }
        let old_beta = beta.to_vec();
        let old_b0 = *b0;
        let wsum: f64 = w.iter().sum();
        let wsq: Vec<f64> =
            x.cols.iter().map(|c| c.iter().zip(&w).map(|(z, wi)| wi * z * z).sum::<f64>() / nf).collect();
        let mut inner_converged = false;
        for _ in 0..opts.max_sweeps {
            total_sweeps += 1;
            let mut max_change = 0.0f64;
            for j in 0..beta.len() {
                if !x.active[j] || wsq[j] <= 0.0 {
                    beta[j] = 0.0;
                    continue;
                }
                let col = &x.cols[j];
                let old = beta[j];
                let rho =
                    col.iter().zip(&resid).zip(&w).map(|((z, r), wi)| wi * z * r).sum::<f64>() / nf + wsq[j] * old;
                let new = soft_threshold(rho, lambda) / wsq[j];
                let delta = new - old;
                if delta != 0.0 {
                    for (r, z) in resid.iter_mut().zip(col) {
                        *r -= z * delta;
                    }
                    beta[j] = new;
                    max_change = max_change.max(delta.abs());
                }
            }
            let shift = resid.iter().zip(&w).map(|(r, wi)| wi * r).sum::<f64>() / wsum;
            if shift != 0.0 {
                resid.iter_mut().for_each(|r| *r -= shift);
                *b0 += shift;
                max_change = max_change.max(shift.abs());
            }
            if max_change < opts.tol {
                inner_converged = true;
                break;
            }
        }
        trace.push(logistic_penalized(x, y, beta, *b0, lambda));
        let outer_change = beta.iter().zip(&old_beta).map(|(a, b)| (a - b).abs()).fold((*b0 - old_b0).abs(), f64::max);
        if inner_converged && outer_change < opts.tol.max(1e-8) {
            return (total_sweeps, true, trace);
        }
    }
    (total_sweeps, false, trace)
}

fn lasso_loss_for(d: &Dataset) -> Result<LassoLoss> {
    match d.task() {
        Task::Regression => Ok(LassoLoss::Squared),
        Task::Classification if d.n_classes() <= 2 => Ok(LassoLoss::Logistic),
        Task::Classification => Err(VimError::Parameter(format!(
            "lasso supports binary classification only, found {} classes",
            d.n_classes()
        ))),
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(VimError::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

fn path_on_design(x: &Design, d: &Dataset, loss: LassoLoss, lambdas: &[f64], opts: &LassoOptions) -> Vec<LassoFit> {
    let p = d.n_features();
    let y = d.y();
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let mut beta = vec![0.0; p];
    let mut b0 = match loss {
        LassoLoss::Squared => ybar,
        LassoLoss::Logistic => {
            let m = ybar.clamp(1e-6, 1.0 - 1e-6);
            (m / (1.0 - m)).ln()
        }
    };
    lambdas
        .iter()
        .map(|&lambda| {
            let (n_iter, converged, trace) = match loss {
                LassoLoss::Squared => solve_squared(x, &yc, lambda, &mut beta, opts),
                LassoLoss::Logistic => solve_logistic(x, y, lambda, &mut beta, &mut b0, opts),
            };
            LassoFit {
                lambda,
                beta: beta.clone(),
                intercept: b0,
                n_iter,
                converged,
                loss,
                standardization: x.standardization.clone(),
                objective_trace: trace,
            }
        })
        .collect()
}

pub fn lasso_fit(d: &Dataset, lambda: f64) -> Result<LassoFit> {
    lasso_fit_with(d, lambda, &LassoOptions::default())
}

pub fn lasso_fit_with(d: &Dataset, lambda: f64, opts: &LassoOptions) -> Result<LassoFit> {
    check_lambda(lambda)?;
    let loss = lasso_loss_for(d)?;
    let x = Design::new(d);
    Ok(path_on_design(&x, d, loss, &[lambda], opts).pop().unwrap())
}

/// Smallest λ with an all-zero solution: `max_j |z_jᵀ(y − ȳ)| / n`.
pub fn lambda_max(d: &Dataset) -> f64 {
    Design::new(d).lambda_max(d.y())
}

/// Log-spaced grid from `lambda_max` down to `lambda_max · 1e-4`.
pub fn lambda_grid(lambda_max: f64, n_lambdas: usize) -> Vec<f64> {
    let ratio: f64 = 1e-4;
    (0..n_lambdas).map(|k| lambda_max * ratio.powf(k as f64 / (n_lambdas - 1) as f64)).collect()
}

/// Warm-started fits over [`lambda_grid`], ordered by decreasing λ.
pub fn lasso_path(d: &Dataset, n_lambdas: usize) -> Result<Vec<LassoFit>> {
    lasso_path_with(d, n_lambdas, &LassoOptions::default())
}

pub fn lasso_path_with(d: &Dataset, n_lambdas: usize, opts: &LassoOptions) -> Result<Vec<LassoFit>> {
    if n_lambdas < 2 {
        return Err(VimError::Parameter(format!("n_lambdas must be at least 2, got {n_lambdas}")));
    }
    let loss = lasso_loss_for(d)?;
    let x = Design::new(d);
    let lmax = x.lambda_max(d.y());
    if lmax <= 0.0 {
        return Err(VimError::Estimation("lambda_max is zero: no feature correlates with the response".into()));
    }
    Ok(path_on_design(&x, d, loss, &lambda_grid(lmax, n_lambdas), opts))
}

/// Fits on an explicit λ sequence (must be decreasing for warm starts to help).
pub fn lasso_path_on_grid(d: &Dataset, lambdas: &[f64], opts: &LassoOptions) -> Result<Vec<LassoFit>> {
    for &l in lambdas {
        check_lambda(l)?;
    }
    let loss = lasso_loss_for(d)?;
    let x = Design::new(d);
    Ok(path_on_design(&x, d, loss, lambdas, opts))
}

#[derive(Debug, Clone)]
pub struct LassoCvConfig {
    pub folds: usize,
    pub n_lambdas: usize,
    /// Pick the largest λ within one standard error of the minimum.
    pub one_se: bool,
    pub seed: u64,
    pub options: LassoOptions,
}

impl Default for LassoCvConfig {
    fn default() -> Self {
        LassoCvConfig { folds: 5, n_lambdas: 100, one_se: false, seed: 0, options: LassoOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LassoCv {
    pub lambdas: Vec<f64>,
    /// Mean validation error per λ: MSE for regression, Brier score
    /// (MSE of predicted probabilities) for classification.
    pub cv_mean: Vec<f64>,
    pub cv_se: Vec<f64>,
    pub best_index: usize,
    pub chosen_index: usize,
    pub fit: LassoFit,
}

/// Fold id per row, from a seeded shuffle.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut crate::rng::seeded(seed));
    let mut fold = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        fold[row] = pos % folds;
    }
    fold
}

pub fn lasso_cv(d: &Dataset, cfg: &LassoCvConfig) -> Result<LassoCv> {
    let n = d.n_rows();
    if cfg.folds < 2 || cfg.folds > n {
        return Err(VimError::Parameter(format!("folds must be in [2, {n}], got {}", cfg.folds)));
    }
    let full_path = lasso_path_with(d, cfg.n_lambdas, &cfg.options)?;
    let lambdas: Vec<f64> = full_path.iter().map(|f| f.lambda).collect();
    let fold_of = fold_assignment(n, cfg.folds, cfg.seed);

    let fold_errors: Vec<Vec<f64>> = (0..cfg.folds)
        .into_par_iter()
        .map(|k| -> Result<Vec<f64>> {
            let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != k).collect();
            let valid: Vec<usize> = (0..n).filter(|&i| fold_of[i] == k).collect();
            let path = lasso_path_on_grid(&d.select_rows(&train), &lambdas, &cfg.options)?;
            Ok(path
                .iter()
                .map(|fit| {
                    let se: f64 = valid
                        .iter()
                        .map(|&i| {
                            let eta = fit.linear_predictor(d.row(i));
                            let pred = match fit.loss {
                                LassoLoss::Squared => eta,
                                LassoLoss::Logistic => sigmoid(eta),
                            };
                            (d.y()[i] - pred).powi(2)
                        })
                        .sum();
                    se / valid.len() as f64
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let k = cfg.folds as f64;
    let n_l = lambdas.len();
    let cv_mean: Vec<f64> = (0..n_l).map(|l| fold_errors.iter().map(|e| e[l]).sum::<f64>() / k).collect();
    let cv_se: Vec<f64> = (0..n_l)
        .map(|l| {
            let m = cv_mean[l];
            let var = fold_errors.iter().map(|e| (e[l] - m).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        })
        .collect();
    let mut best_index = 0;
    for l in 1..n_l {
        if cv_mean[l] < cv_mean[best_index] {
            best_index = l;
        }
    }
    let chosen_index = if cfg.one_se {
        let bound = cv_mean[best_index] + cv_se[best_index];
        (0..=best_index).find(|&l| cv_mean[l] <= bound).unwrap_or(best_index)
    } else {
        best_index
    };
    let fit = full_path[chosen_index].clone();
    Ok(LassoCv { lambdas, cv_mean, cv_se, best_index, chosen_index, fit })
}

/// Scores are `|β_j(λ*)|` on the standardized scale with λ* chosen by K-fold
/// cross-validation; features with a nonzero coefficient are selected.
pub fn lasso_vim(d: &Dataset, cfg: &LassoCvConfig) -> Result<(VimReport, LassoCv)> {
    let cv = lasso_cv(d, cfg)?;
    let scores: Vec<f64> = cv.fit.beta.iter().map(|b| b.abs()).collect();
    let report = VimReport::new("lasso", scores, cv.fit.nonzero(), cfg.seed)?;
    Ok((report, cv))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearKind {
    Ols,
    Logistic,
}

/// Unpenalized linear or logistic model on the raw feature scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearFit {
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub kind: LinearKind,
    /// The design was rank deficient (OLS: dependent columns got a zero
    /// coefficient; logistic: the Newton steps used a pseudo-inverse).
    pub rank_deficient: bool,
    /// Logistic only: the training classes are linearly separated, so the
    /// coefficients are limited by the iteration cap rather than converged.
    pub separated: bool,
    pub n_iter: usize,
}

impl LinearFit {
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        self.intercept + self.beta.iter().zip(row).map(|(b, v)| b * v).sum::<f64>()
    }

    /// Fitted value (OLS) or probability of class 1 (logistic).
    pub fn predict_value(&self, row: &[f64]) -> f64 {
        let eta = self.linear_predictor(row);
        match self.kind {
            LinearKind::Ols => eta,
            LinearKind::Logistic => sigmoid(eta),
        }
    }

    pub fn predict_proba(&self, d: &Dataset) -> Vec<f64> {
        d.rows().map(|r| sigmoid(self.linear_predictor(r))).collect()
    }
}

impl Predictor for LinearFit {
    fn predict_row(&self, row: &[f64]) -> f64 {
        match self.kind {
            LinearKind::Ols => self.linear_predictor(row),
            LinearKind::Logistic => f64::from(sigmoid(self.linear_predictor(row)) > 0.5),
        }
    }
}

const RANK_RELATIVE_CUTOFF: f64 = 1e-10;
const EIGEN_RELATIVE_CUTOFF: f64 = 1e-12;

/// Least squares `a·x ≈ b` by column-pivoted QR. Columns past the numerical
/// rank get a zero coefficient. Returns the solution and the rank.
fn pivoted_least_squares(a: DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, usize) {
    let p = a.ncols();
    let qr = a.col_piv_qr();
    let r = qr.r();
    let m = r.nrows().min(p);
    let lead = if m > 0 { r[(0, 0)].abs() } else { 0.0 };
    let rank = (0..m).take_while(|&k| lead > 0.0 && r[(k, k)].abs() > RANK_RELATIVE_CUTOFF * lead).count();
    let qtb = qr.q().transpose() * b;
    let mut z = DVector::<f64>::zeros(p);
    for k in (0..rank).rev() {
        let mut acc = qtb[k];
        for c in k + 1..rank {
            acc -= r[(k, c)] * z[c];
        }
        z[k] = acc / r[(k, k)];
    }
    qr.p().inv_permute_rows(&mut z);
    (z, rank)
}

/// Least squares with an intercept, solved by column-pivoted QR of the
/// centered design. For a rank-deficient design the coefficients of the
/// dependent columns are set to zero and the fit is flagged.
pub fn ols_fit(d: &Dataset) -> Result<LinearFit> {
    let n = d.n_rows();
    let p = d.n_features();
    let means: Vec<f64> = (0..p).map(|j| (0..n).map(|i| d.x(i, j)).sum::<f64>() / n as f64).collect();
    let ybar = d.y().iter().sum::<f64>() / n as f64;
    let x = DMatrix::from_fn(n, p, |i, j| d.x(i, j) - means[j]);
    let y = DVector::from_iterator(n, d.y().iter().map(|v| v - ybar));
    let (b, rank) = pivoted_least_squares(x, &y);
    let beta: Vec<f64> = b.iter().copied().collect();
    let intercept = ybar - beta.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();
    Ok(LinearFit { beta, intercept, kind: LinearKind::Ols, rank_deficient: rank < p, separated: false, n_iter: 1 })
}

/// Mean negative Bernoulli log-likelihood and its gradient with respect to
/// `(intercept, beta…)`.
pub fn logistic_objective(d: &Dataset, intercept: f64, beta: &[f64]) -> (f64, Vec<f64>) {
    let n = d.n_rows() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; beta.len() + 1];
    for (row, &y) in d.rows().zip(d.y()) {
        let eta = intercept + beta.iter().zip(row).map(|(b, v)| b * v).sum::<f64>();
        loss += softplus(eta) - y * eta;
        let r = sigmoid(eta) - y;
        grad[0] += r;
        for (g, v) in grad[1..].iter_mut().zip(row) {
            *g += r * v;
        }
    }
    grad.iter_mut().for_each(|g| *g /= n);
    (loss / n, grad)
}

const LOGISTIC_MAX_ITER: usize = 100;
const LOGISTIC_GRAD_TOL: f64 = 1e-9;

/// Maximum-likelihood logistic regression by damped Newton steps.
pub fn logistic_fit(d: &Dataset) -> Result<LinearFit> {
    if d.task() != Task::Classification {
        return Err(VimError::UnsupportedTask { method: "logistic regression".into(), task: d.task() });
    }
    if d.n_classes() > 2 {
        return Err(VimError::Parameter(format!("logistic regression supports two classes, found {}", d.n_classes())));
    }
    let n = d.n_rows();
    let p = d.n_features();
    let ybar = d.y().iter().sum::<f64>() / n as f64;
    let m = ybar.clamp(1e-6, 1.0 - 1e-6);
    let mut theta = vec![0.0; p + 1];
    theta[0] = (m / (1.0 - m)).ln();
    let (mut loss, mut grad) = logistic_objective(d, theta[0], &theta[1..]);
    let mut n_iter = 0;
    let mut rank_deficient = false;
    while n_iter < LOGISTIC_MAX_ITER {
        let gmax = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if gmax <= LOGISTIC_GRAD_TOL || loss < 1e-12 {
            break;
        }
        n_iter += 1;
        let mut h = DMatrix::<f64>::zeros(p + 1, p + 1);
        let mut a = vec![0.0; p + 1];
        a[0] = 1.0;
        for row in d.rows() {
            a[1..].copy_from_slice(row);
            let eta = theta[0] + theta[1..].iter().zip(row).map(|(b, v)| b * v).sum::<f64>();
            let pr = sigmoid(eta);
            let w = pr * (1.0 - pr) / n as f64;
            if w == 0.0 {
                continue;
            }
            for r in 0..=p {
                let wr = w * a[r];
                for c in r..=p {
                    h[(r, c)] += wr * a[c];
                }
            }
        }
        for r in 0..=p {
            for c in 0..r {
                h[(r, c)] = h[(c, r)];
            }
        }
        let g = DVector::from_iterator(p + 1, grad.iter().map(|v| -v));
        // pseudo-inverse Newton step from the eigendecomposition of the Hessian
        let eig = h.symmetric_eigen();
        let lmax = eig.eigenvalues.max();
        if lmax <= 0.0 {
            break;
        }
        let cutoff = lmax * EIGEN_RELATIVE_CUTOFF;
        let mut step = DVector::<f64>::zeros(p + 1);
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam > cutoff {
                let v = eig.eigenvectors.column(k);
                step += v * (v.dot(&g) / lam);
            } else {
                rank_deficient = true;
            }
        }
        let slope: f64 = step.iter().zip(&grad).map(|(s, g)| s * g).sum();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            let (l, gr) = logistic_objective(d, cand[0], &cand[1..]);
            if l <= loss + 1e-4 * t * slope {
                accepted = Some((cand, l, gr));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, l, gr)) => {
                theta = cand;
                loss = l;
                grad = gr;
            }
            None => break,
        }
    }
    let fit = LinearFit {
        beta: theta[1..].to_vec(),
        intercept: theta[0],
        kind: LinearKind::Logistic,
        rank_deficient,
        separated: false,
        n_iter,
    };
    let separated = d.rows().zip(d.y()).all(|(row, &y)| (2.0 * y - 1.0) * fit.linear_predictor(row) > 0.0);
    Ok(LinearFit { separated, ..fit })
}
