//! Multi-method, multi-seed benchmark runs and their output files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use vimkit::{EvalMetrics, Task, VimReport};

use crate::config::{MethodConfig, MethodId};
use crate::error::{io_err, BenchError, Result};
use crate::eval::{evaluate_selected, EvalMode, DEFAULT_TOP_K};
use crate::methods::run_method;
use crate::source::{DataSource, LoadedData};
use crate::svg::bar_chart;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const BASELINE_NAME: &str = "all-features";

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub methods: Vec<MethodId>,
    pub seeds: Vec<u64>,
    pub eval: EvalMode,
    pub config: MethodConfig,
    /// Features evaluated for a method that selects none.
    pub top_k: usize,
    /// When false every wall time is reported as 0, so repeated runs produce
    /// identical files.
    pub timing: bool,
}

impl SuiteConfig {
    pub fn new(methods: Vec<MethodId>, seeds: Vec<u64>, eval: EvalMode) -> Self {
        SuiteConfig { methods, seeds, eval, config: MethodConfig::default(), top_k: DEFAULT_TOP_K, timing: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodRun {
    pub method: MethodId,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<VimReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
    /// Features passed to the neutral model.
    pub evaluated: Vec<usize>,
    /// The selection was empty and the top-k ranked features were used.
    pub fallback_top_k: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<EvalMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_error: Option<String>,
}

impl MethodRun {
    pub fn succeeded(&self) -> bool {
        self.ok && self.metrics.is_some()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Baseline {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<EvalMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub dataset_sha256: String,
    pub n_rows: usize,
    pub n_features: usize,
    pub feature_names: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<usize>>,
    pub baseline: Baseline,
    pub methods: Vec<MethodRun>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingRow {
    pub seed: u64,
    pub method: MethodId,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchResult {
    pub toolkit_version: String,
    pub source: String,
    pub task: Task,
    pub eval: EvalMode,
    pub timing_enabled: bool,
    pub seeds: Vec<u64>,
    pub runs: Vec<SeedRun>,
    /// One row per attempted method and seed.
    pub timing: Vec<TimingRow>,
}

impl BenchResult {
    pub fn all_succeeded(&self) -> bool {
        self.runs.iter().all(|r| r.methods.iter().all(MethodRun::succeeded))
    }

    pub fn method_runs(&self, method: MethodId) -> impl Iterator<Item = (&SeedRun, &MethodRun)> {
        self.runs.iter().flat_map(move |r| r.methods.iter().filter(move |m| m.method == method).map(move |m| (r, m)))
    }
}

/// Scores one loaded dataset with one method and evaluates the selection.
/// Also returns the scoring time, which for a failed method runs until the
/// failure.
pub fn run_one(loaded: &LoadedData, method: MethodId, cfg: &SuiteConfig, seed: u64) -> (MethodRun, f64) {
    let d = &loaded.data;
    let start = Instant::now();
    let outcome = run_method(method, d, &cfg.config, seed);
    let failed_after = start.elapsed().as_secs_f64();
    let seconds = match &outcome {
        Ok(out) => out.report.wall_time_seconds,
        Err(_) => failed_after,
    };
    let seconds = if cfg.timing { seconds } else { 0.0 };
    let run = match outcome {
        Err(e) => MethodRun {
            method,
            ok: false,
            error: Some(e.to_string()),
            report: None,
            details: None,
            evaluated: Vec::new(),
            fallback_top_k: false,
            metrics: None,
            eval_error: None,
        },
        Ok(mut out) => {
            if !cfg.timing {
                out.report.wall_time_seconds = 0.0;
            }
            let fallback = out.report.selected.is_empty();
            let evaluated =
                if fallback { out.report.top_k(cfg.top_k.min(d.n_features())) } else { out.report.selected.clone() };
            let (metrics, eval_error) = match evaluate_selected(d, &evaluated, cfg.eval, seed) {
                Ok(m) => (Some(m), None),
                Err(e) => (None, Some(e.to_string())),
            };
            MethodRun {
                method,
                ok: true,
                error: None,
                report: Some(out.report),
                details: Some(out.details),
                evaluated,
                fallback_top_k: fallback,
                metrics,
                eval_error,
            }
        }
    };
    (run, seconds)
}

pub fn run_suite(source: &DataSource, cfg: &SuiteConfig) -> Result<BenchResult> {
    if cfg.seeds.is_empty() {
        return Err(BenchError::Config("at least one seed is required".into()));
    }
    cfg.config.check_against(&cfg.methods)?;
    let mut runs = Vec::new();
    let mut timing = Vec::new();
    let mut task = None;
    for &seed in &cfg.seeds {
        let loaded = source.load(seed)?;
        let d = &loaded.data;
        task = Some(d.task());
        let all: Vec<usize> = (0..d.n_features()).collect();
        let baseline = match evaluate_selected(d, &all, cfg.eval, seed) {
            Ok(m) => Baseline { metrics: Some(m), error: None },
            Err(e) => Baseline { metrics: None, error: Some(e.to_string()) },
        };
        let mut methods = Vec::new();
        for &m in &cfg.methods {
            let (run, seconds) = run_one(&loaded, m, cfg, seed);
            timing.push(TimingRow { seed, method: m, seconds });
            methods.push(run);
        }
        runs.push(SeedRun {
            seed,
            dataset_sha256: loaded.sha256.clone(),
            n_rows: d.n_rows(),
            n_features: d.n_features(),
            feature_names: d.names().to_vec(),
            support: loaded.metadata.as_ref().map(|m| m.support.clone()),
            baseline,
            methods,
        });
    }
    Ok(BenchResult {
        toolkit_version: TOOLKIT_VERSION.to_string(),
        source: source.describe(),
        task: task.expect("at least one seed"),
        eval: cfg.eval,
        timing_enabled: cfg.timing,
        seeds: cfg.seeds.clone(),
        runs,
        timing,
    })
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| BenchError::Config(format!("csv output: {e}"));
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(&r).map_err(wrap)?;
    }
    w.into_inner().map_err(|e| BenchError::Config(format!("csv output: {e}")))
}

/// Round-trip formatting; scientific notation for very small or large magnitudes.
fn fmt_value(v: f64) -> String {
    if v != 0.0 && v.is_finite() && (v.abs() < 1e-4 || v.abs() >= 1e12) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

/// Metric table: one row per seed, method and metric, baseline included.
pub fn tables_csv(result: &BenchResult) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    for run in &result.runs {
        let seed = run.seed.to_string();
        let mut push = |method: &str, status: &str, n_eval: usize, fallback: bool, metrics: Option<&EvalMetrics>| {
            let base = [seed.clone(), method.to_string(), status.to_string(), n_eval.to_string(), fallback.to_string()];
            match metrics {
                Some(m) => {
                    for (name, v) in m.entries() {
                        let mut r = base.to_vec();
                        r.push(name.to_string());
                        r.push(fmt_value(v));
                        rows.push(r);
                    }
                }
                None => {
                    let mut r = base.to_vec();
                    r.extend([String::new(), String::new()]);
                    rows.push(r);
                }
            }
        };
        let base_status = if run.baseline.metrics.is_some() { "ok" } else { "error" };
        push(BASELINE_NAME, base_status, run.n_features, false, run.baseline.metrics.as_ref());
        for m in &run.methods {
            let status = match (m.ok, m.metrics.is_some()) {
                (true, true) => "ok",
                (true, false) => "eval-error",
                _ => "error",
            };
            push(m.method.as_str(), status, m.evaluated.len(), m.fallback_top_k, m.metrics.as_ref());
        }
    }
    csv_bytes(&["seed", "method", "status", "n_evaluated", "fallback_top_k", "metric", "value"], rows)
}

pub fn timing_csv(result: &BenchResult) -> Result<Vec<u8>> {
    let rows =
        result.timing.iter().map(|t| vec![t.seed.to_string(), t.method.to_string(), fmt_value(t.seconds)]).collect();
    csv_bytes(&["seed", "method", "seconds"], rows)
}

/// Writes `report.json`, `tables.csv`, `timing.csv` and one `scores_<method>.svg` per method, charting the first seed. Returns the
/// paths written.
pub fn write_outputs(result: &BenchResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<()> {
        let path = out_dir.join(name);
        write_atomic(&path, &bytes)?;
        written.push(path);
        Ok(())
    };
    let mut json = serde_json::to_vec_pretty(result)?;
    json.push(b'\n');
    put("report.json".into(), json)?;
    put("tables.csv".into(), tables_csv(result)?)?;
    put("timing.csv".into(), timing_csv(result)?)?;
    if let Some(first) = result.runs.first() {
        for m in &first.methods {
            if let Some(r) = &m.report {
                put(format!("scores_{}.svg", m.method), bar_chart(r, &first.feature_names).into_bytes())?;
            }
        }
    }
    Ok(written)
}
