use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;
use vimkit::{write_csv, Task, VimReport};
use vimkit_bench::source::{sha256_hex, ScenarioSource};
use vimkit_bench::suite::{write_atomic, TOOLKIT_VERSION};
use vimkit_bench::{
    init_threads, parse_methods, run_method, run_suite, svg, write_outputs, DataSource, EvalMode, MethodConfig,
    MethodId, SuiteConfig,
};

#[derive(Parser)]
#[command(name = "vim", version, about = "Variable importance scoring and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Reg,
    Class,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::Reg => Task::Regression,
            TaskArg::Class => Task::Classification,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Score features with one method.
    Score {
        #[arg(long)]
        method: String,
        /// CSV path or scenario:NAME[:key=value,...]
        #[arg(long)]
        data: String,
        #[arg(long, value_enum)]
        task: Option<TaskArg>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Method setting as key=value or method.key=value; repeatable.
        #[arg(long = "config")]
        config: Vec<String>,
        #[arg(long, value_enum, default_value = "on")]
        timing: OnOff,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a simulated dataset and its JSON sidecar.
    Simulate {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        noise_sd: Option<f64>,
        /// Feature count of the wide scenario.
        #[arg(long)]
        p: Option<usize>,
        /// Extra pure-noise columns to append.
        #[arg(long, default_value_t = 0)]
        extra_noise: usize,
        /// CSV output path; the sidecar goes next to it with a .json extension.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several methods over several seeds and evaluate their selections.
    Bench {
        #[arg(long)]
        data: String,
        #[arg(long, value_enum)]
        task: Option<TaskArg>,
        /// Comma-separated method ids or "all".
        #[arg(long, default_value = "all")]
        methods: String,
        /// Comma-separated seeds or a half-open range A..B.
        #[arg(long, default_value = "0")]
        seeds: String,
        /// in-sample, holdout or holdout:FRACTION.
        #[arg(long, default_value = "holdout")]
        eval: String,
        #[arg(long = "config")]
        config: Vec<String>,
        #[arg(long, default_value_t = vimkit_bench::eval::DEFAULT_TOP_K)]
        top_k: usize,
        #[arg(long, value_enum, default_value = "on")]
        timing: OnOff,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_seeds(s: &str) -> anyhow::Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        if b <= a {
            bail!("empty seed range {s}");
        }
        return Ok((a..b).collect());
    }
    s.split(',').map(|t| t.trim().parse::<u64>().with_context(|| format!("bad seed '{t}'"))).collect()
}

#[derive(Serialize)]
struct ScoreOutput<'a> {
    toolkit_version: &'a str,
    source: String,
    seed: u64,
    dataset_sha256: &'a str,
    feature_names: &'a [String],
    report: &'a VimReport,
    details: &'a Value,
}

fn score(
    method: &str,
    data: &str,
    task: Option<TaskArg>,
    seed: u64,
    config: &[String],
    timing: OnOff,
    out: &Path,
) -> anyhow::Result<ExitCode> {
    let method: MethodId = method.parse()?;
    let source = DataSource::parse(data, task.map(Task::from))?;
    let config = MethodConfig::parse(config)?;
    config.check_against(&[method])?;
    let loaded = source.load(seed)?;
    let mut output = match run_method(method, &loaded.data, &config, seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{method}: {e}");
            return Ok(ExitCode::FAILURE);
        }
    };
    if matches!(timing, OnOff::Off) {
        output.report.wall_time_seconds = 0.0;
    }
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let doc = ScoreOutput {
        toolkit_version: TOOLKIT_VERSION,
        source: source.describe(),
        seed,
        dataset_sha256: &loaded.sha256,
        feature_names: loaded.data.names(),
        report: &output.report,
        details: &output.details,
    };
    let mut json = serde_json::to_vec_pretty(&doc)?;
    json.push(b'\n');
    write_atomic(&out.join("report.json"), &json)?;
    let chart = svg::bar_chart(&output.report, loaded.data.names());
    write_atomic(&out.join(format!("scores_{method}.svg")), chart.as_bytes())?;
    let names = loaded.data.names();
    let top: Vec<&str> = output.report.ranking.iter().take(10).map(|&j| names[j].as_str()).collect();
    let selected: Vec<&str> = output.report.selected.iter().map(|&j| names[j].as_str()).collect();
    println!("{method}: top {} | selected {}", top.join(" "), selected.join(" "));
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    csv_sha256: String,
    extra_noise: usize,
    #[serde(flatten)]
    metadata: &'a vimkit::simgen::ScenarioMetadata,
}

fn simulate(
    scenario: &str,
    n: Option<usize>,
    seed: u64,
    noise_sd: Option<f64>,
    p: Option<usize>,
    extra_noise: usize,
    out: &Path,
) -> anyhow::Result<ExitCode> {
    let src = ScenarioSource { scenario: scenario.parse()?, n, noise_sd, features: p, extra_noise };
    let loaded = DataSource::Scenario(src).load(seed)?;
    let mut bytes = Vec::new();
    write_csv(&loaded.data, &mut bytes)?;
    let metadata = loaded.metadata.as_ref().expect("scenario sources carry metadata");
    let sidecar = Sidecar { csv_sha256: sha256_hex(&bytes), extra_noise, metadata };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_atomic(out, &bytes)?;
    let mut json = serde_json::to_vec_pretty(&sidecar)?;
    json.push(b'\n');
    write_atomic(&out.with_extension("json"), &json)?;
    println!("{} rows x {} features -> {}", loaded.data.n_rows(), loaded.data.n_features(), out.display());
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn bench(
    data: &str,
    task: Option<TaskArg>,
    methods: &str,
    seeds: &str,
    eval: &str,
    config: &[String],
    top_k: usize,
    timing: OnOff,
    out: &Path,
) -> anyhow::Result<ExitCode> {
    let source = DataSource::parse(data, task.map(Task::from))?;
    let mut cfg = SuiteConfig::new(parse_methods(methods)?, parse_seeds(seeds)?, eval.parse::<EvalMode>()?);
    cfg.config = MethodConfig::parse(config)?;
    cfg.top_k = top_k;
    cfg.timing = matches!(timing, OnOff::On);
    let result = run_suite(&source, &cfg)?;
    write_outputs(&result, out)?;
    for run in &result.runs {
        for m in &run.methods {
            match (&m.error, &m.eval_error, &m.metrics) {
                (Some(e), _, _) => println!("seed {} {:<7} error: {e}", run.seed, m.method),
                (_, Some(e), _) => println!("seed {} {:<7} evaluation error: {e}", run.seed, m.method),
                (_, _, Some(metrics)) => {
                    let cols: Vec<String> = metrics.entries().iter().map(|(k, v)| format!("{k}={v:.6}")).collect();
                    println!("seed {} {:<7} {} features  {}", run.seed, m.method, m.evaluated.len(), cols.join(" "));
                }
                _ => {}
            }
        }
    }
    Ok(if result.all_succeeded() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    init_threads()?;
    match cli.command {
        Command::Score { method, data, task, seed, config, timing, out } => {
            score(&method, &data, task, seed, &config, timing, &out)
        }
        Command::Simulate { scenario, n, seed, noise_sd, p, extra_noise, out } => {
            simulate(&scenario, n, seed, noise_sd, p, extra_noise, &out)
        }
        Command::Bench { data, task, methods, seeds, eval, config, top_k, timing, out } => {
            bench(&data, task, &methods, &seeds, &eval, &config, top_k, timing, &out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
