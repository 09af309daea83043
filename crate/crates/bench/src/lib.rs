//! Benchmark harness for the vimkit estimators: method dispatch, neutral-model
//! evaluation of selected subsets, multi-seed suites and their output files.

pub mod config;
pub mod error;
pub mod eval;
pub mod methods;
pub mod source;
pub mod suite;
pub mod svg;

pub use config::{parse_methods, MethodConfig, MethodId};
pub use error::{BenchError, Result};
pub use eval::{evaluate_selected, EvalMode};
pub use methods::{run_method, MethodOutput};
pub use source::DataSource;
pub use suite::{run_suite, write_outputs, BenchResult, SuiteConfig};

/// Sizes the global rayon pool from `VIM_THREADS` when it is set. Results do
/// not depend on the thread count.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("VIM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| BenchError::Config(format!("VIM_THREADS must be a positive integer, got '{v}'")))?;
    if n == 0 {
        return Err(BenchError::Config("VIM_THREADS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| BenchError::Config(format!("thread pool: {e}")))
}
