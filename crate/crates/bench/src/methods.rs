//! Uniform dispatch over the importance estimators.

use std::time::Instant;

use serde_json::{json, Value};
use vimkit::baseline::{correlation_vim, psi_vim, PsiConfig};
use vimkit::boost::{boost_fit, boost_vim, BoostConfig};
use vimkit::forest::{rf_fit, rf_mda, rf_mdi, RfConfig};
use vimkit::linear::{lasso_vim, LassoCvConfig};
use vimkit::perf::{perf_fit, perf_scores, BaseLearner, PerfConfig};
use vimkit::svm::{svm_wrapper_vim, KernelChoice, SvmWrapperConfig};
use vimkit::{Dataset, VimReport};

use crate::config::{MethodConfig, MethodId, Settings};
use crate::error::{BenchError, Result};

/// Default correlation selection threshold on ρ².
pub const CORR_THRESHOLD: f64 = 0.1;
pub const MDA_PERMUTATIONS: usize = 5;

#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub report: VimReport,
    /// Method-specific diagnostics.
    pub details: Value,
}

/// Runs one estimator. `wall_time_seconds` covers model fitting and scoring.
pub fn run_method(method: MethodId, d: &Dataset, config: &MethodConfig, seed: u64) -> Result<MethodOutput> {
    let s = config.for_method(method);
    let start = Instant::now();
    let (mut report, details) = dispatch(method, d, &s, seed)?;
    report.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(MethodOutput { report, details })
}

fn rf_config(s: &Settings) -> Result<RfConfig> {
    let mut cfg = RfConfig::default();
    if let Some(t) = s.usize("trees")? {
        cfg.n_trees = t;
    }
    cfg.mtry = s.usize("mtry")?;
    cfg.min_leaf = s.usize("min_leaf")?;
    cfg.max_depth = s.usize("max_depth")?;
    Ok(cfg)
}

fn forest_summary(f: &vimkit::forest::Forest) -> Value {
    json!({
        "n_trees": f.trees.len(),
        "mtry": f.mtry,
        "min_leaf": f.min_leaf,
    })
}

fn dispatch(method: MethodId, d: &Dataset, s: &Settings, seed: u64) -> Result<(VimReport, Value)> {
    Ok(match method {
        MethodId::Corr => {
            let threshold = s.f64("threshold")?.unwrap_or(CORR_THRESHOLD);
            let mut r = correlation_vim(d, threshold)?;
            r.seed = seed;
            (r, json!({ "threshold": threshold }))
        }
        MethodId::Psi => {
            let mut cfg = PsiConfig::default();
            if let Some(t) = s.usize("trees")? {
                cfg.n_trees = t;
            }
            if let Some(t) = s.f64("threshold")? {
                cfg.threshold = t;
            }
            let (r, estimates) = psi_vim(d, &cfg, seed)?;
            (r, json!({ "n_trees": cfg.n_trees, "threshold": cfg.threshold, "estimates": estimates }))
        }
        MethodId::Lasso => {
            let mut cfg = LassoCvConfig { seed, ..LassoCvConfig::default() };
            if let Some(v) = s.usize("folds")? {
                cfg.folds = v;
            }
            if let Some(v) = s.usize("n_lambdas")? {
                cfg.n_lambdas = v;
            }
            if let Some(v) = s.bool("one_se")? {
                cfg.one_se = v;
            }
            if let Some(v) = s.f64("tol")? {
                cfg.options.tol = v;
            }
            if let Some(v) = s.usize("max_sweeps")? {
                cfg.options.max_sweeps = v;
            }
            let (r, cv) = lasso_vim(d, &cfg)?;
            let details = json!({
                "lambdas": cv.lambdas,
                "cv_mean": cv.cv_mean,
                "cv_se": cv.cv_se,
                "best_index": cv.best_index,
                "chosen_index": cv.chosen_index,
                "lambda": cv.fit.lambda,
                "beta": cv.fit.beta,
                "intercept": cv.fit.intercept,
                "converged": cv.fit.converged,
            });
            (r, details)
        }
        MethodId::RfMdi => {
            let f = rf_fit(d, &rf_config(s)?, seed)?;
            (rf_mdi(&f)?, forest_summary(&f))
        }
        MethodId::RfMda => {
            let f = rf_fit(d, &rf_config(s)?, seed)?;
            let perms = s.usize("permutations")?.unwrap_or(MDA_PERMUTATIONS);
            let (r, mda) = rf_mda(&f, d, perms, seed)?;
            (r, json!({ "forest": forest_summary(&f), "mda": mda }))
        }
        MethodId::Xgb => {
            let mut cfg = BoostConfig::default();
            if let Some(v) = s.usize("rounds")? {
                cfg.n_rounds = v;
            }
            if let Some(v) = s.f64("eta")? {
                cfg.eta = v;
            }
            if let Some(v) = s.f64("lambda")? {
                cfg.lambda = v;
            }
            if let Some(v) = s.f64("gamma")? {
                cfg.gamma = v;
            }
            if let Some(v) = s.usize("max_depth")? {
                cfg.max_depth = v;
            }
            if let Some(v) = s.f64("min_child_weight")? {
                cfg.min_child_weight = v;
            }
            let squared = s.bool("squared_gain")?.unwrap_or(true);
            let m = boost_fit(d, &cfg, seed)?;
            let (r, details) = boost_vim(&m, squared)?;
            let detail = json!({
                "n_rounds": m.trees.len(),
                "final_training_loss": m.training_loss.last(),
                "importance": details,
            });
            (r, detail)
        }
        MethodId::Svm => {
            let kernel = match s.str("kernel").unwrap_or("linear") {
                "linear" => KernelChoice::Linear,
                "rbf" => KernelChoice::Rbf { sigma: s.f64("sigma")? },
                other => return Err(BenchError::Config(format!("svm: unknown kernel '{other}'"))),
            };
            let mut cfg = SvmWrapperConfig { kernel, ..SvmWrapperConfig::default() };
            if let Some(v) = s.f64("c")? {
                cfg.c = v;
            }
            if let Some(v) = s.usize("keep")? {
                cfg.keep_m = Some(v);
            }
            if let Some(v) = s.f64("tol")? {
                cfg.tol = v;
            }
            let (r, details) = svm_wrapper_vim(d, &cfg, seed)?;
            (r, serde_json::to_value(details)?)
        }
        MethodId::Perf => {
            let mut cfg = PerfConfig::default();
            if let Some(v) = s.usize("models")? {
                cfg.n_models = v;
            }
            cfg.subset_size = s.usize("subset")?;
            if let Some(l) = s.str("learner") {
                cfg.learner = l.parse::<BaseLearner>()?;
            }
            if let Some(v) = s.usize("retries")? {
                cfg.max_retries = v;
            }
            let e = perf_fit(d, &cfg, seed)?;
            let (r, details) = perf_scores(&e)?;
            let detail = json!({
                "learner": e.base_learner,
                "subset_size": e.subset_size,
                "perf": details,
            });
            (r, detail)
        }
    })
}
