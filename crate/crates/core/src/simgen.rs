//! Seeded simulation scenarios.
//!
//! - `correlated`: ten features, X3, X4 and X7 built from X1 and X2, and the
//!   noiseless target `1 + 20X1 + 30X2 + 9X3 + 100X8 + 40X7` by default.
//! - `redundant`: binary classes with Gaussian informative features and
//!   redundant features that are exact linear combinations of them.
//! - `wide`: a sparse linear regression with many more features than rows.
//!
//! Feature `Xk` (1-based name) is column `k − 1`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Task};
use crate::error::{Result, VimError};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Correlated,
    Redundant,
    Wide,
}

impl std::str::FromStr for Scenario {
    type Err = VimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "correlated" => Ok(Scenario::Correlated),
            "redundant" => Ok(Scenario::Redundant),
            "wide" => Ok(Scenario::Wide),
            other => Err(VimError::Parameter(format!("unknown scenario '{other}'"))),
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scenario::Correlated => "correlated",
            Scenario::Redundant => "redundant",
            Scenario::Wide => "wide",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub n: usize,
    pub seed: u64,
    /// Standard deviation of the additive Gaussian noise (regression).
    pub noise_sd: f64,
    pub n_informative: usize,
    pub n_redundant: usize,
    pub n_noise: usize,
    /// Total feature count of the wide scenario.
    pub n_features: usize,
}

impl ScenarioSpec {
    pub fn correlated(n: usize, seed: u64) -> Self {
        ScenarioSpec {
            scenario: Scenario::Correlated,
            n,
            seed,
            noise_sd: 0.0,
            n_informative: 0,
            n_redundant: 0,
            n_noise: 0,
            n_features: 10,
        }
    }

    pub fn redundant(n: usize, seed: u64) -> Self {
        ScenarioSpec {
            scenario: Scenario::Redundant,
            n,
            seed,
            noise_sd: 0.0,
            n_informative: 5,
            n_redundant: 5,
            n_noise: 0,
            n_features: 10,
        }
    }

    /// `n × n_features` with five active features and unit noise.
    pub fn wide(n: usize, n_features: usize, seed: u64) -> Self {
        ScenarioSpec {
            scenario: Scenario::Wide,
            n,
            seed,
            noise_sd: 1.0,
            n_informative: 5,
            n_redundant: 0,
            n_noise: 0,
            n_features,
        }
    }

    pub fn generate(&self) -> Result<Simulated> {
        match self.scenario {
            Scenario::Correlated => gen_correlated(self),
            Scenario::Redundant => gen_redundant(self),
            Scenario::Wide => gen_wide(self),
        }
    }
}

/// Contents of the JSON sidecar written next to a simulated CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetadata {
    pub seed: u64,
    pub spec: ScenarioSpec,
    /// Intercept and per-column coefficients of the regression target.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_coefficients: Option<Vec<f64>>,
    /// Role of each output column: "informative", "redundant" or "noise".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column_roles: Option<Vec<String>>,
    /// Output columns whose values determine the response.
    pub support: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Simulated {
    pub data: Dataset,
    pub metadata: ScenarioMetadata,
}

fn names(p: usize) -> Vec<String> {
    (1..=p).map(|k| format!("X{k}")).collect()
}

pub const CORRELATED_INTERCEPT: f64 = 1.0;
/// Coefficients of X1..X10 in the correlated target.
pub const CORRELATED_COEFFICIENTS: [f64; 10] = [20.0, 30.0, 9.0, 0.0, 0.0, 0.0, 40.0, 100.0, 0.0, 0.0];

pub fn gen_correlated(spec: &ScenarioSpec) -> Result<Simulated> {
    if spec.n < 10 {
        return Err(VimError::Parameter(format!("correlated scenario needs n >= 10, got {}", spec.n)));
    }
    if !(spec.noise_sd >= 0.0 && spec.noise_sd.is_finite()) {
        return Err(VimError::Parameter(format!("noise_sd must be nonnegative, got {}", spec.noise_sd)));
    }
    let mut r = rng::seeded(spec.seed);
    let mut rows = Vec::with_capacity(spec.n);
    let mut y = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let mut x = [0.0f64; 10];
        for k in [0, 1, 4, 5, 7, 8, 9] {
            x[k] = r.sample(StandardNormal);
        }
        x[2] = 0.1 * x[0] + 0.025 * x[1];
        x[3] = 0.4 * x[2] + 0.1 * x[1];
        x[6] = 0.6 * x[2] + 0.2 * x[1];
        let eps: f64 = if spec.noise_sd > 0.0 { r.sample(StandardNormal) } else { 0.0 };
        y.push(1.0 + 20.0 * x[0] + 30.0 * x[1] + 9.0 * x[2] + 100.0 * x[7] + 40.0 * x[6] + spec.noise_sd * eps);
        rows.push(x.to_vec());
    }
    let data = Dataset::new(rows, y, names(10), Task::Regression)?;
    Ok(Simulated {
        data,
        metadata: ScenarioMetadata {
            seed: spec.seed,
            spec: spec.clone(),
            intercept: Some(CORRELATED_INTERCEPT),
            true_coefficients: Some(CORRELATED_COEFFICIENTS.to_vec()),
            column_roles: None,
            // X3 and X7 are combinations of X1 and X2, so X1, X2, X8 suffice.
            support: vec![0, 1, 7],
        },
    })
}

pub fn gen_redundant(spec: &ScenarioSpec) -> Result<Simulated> {
    if spec.n < 50 {
        return Err(VimError::Parameter(format!("redundant scenario needs n >= 50, got {}", spec.n)));
    }
    if spec.n_informative < 1 {
        return Err(VimError::Parameter("n_informative must be at least 1".into()));
    }
    let (ni, nr, nn) = (spec.n_informative, spec.n_redundant, spec.n_noise);
    let p = ni + nr + nn;
    let mut r = rng::seeded(spec.seed);
    let coef: Vec<Vec<f64>> = (0..nr).map(|_| (0..ni).map(|_| r.random_range(-1.0..=1.0)).collect()).collect();
    let mut perm: Vec<usize> = (0..p).collect();
    perm.shuffle(&mut r);
    let mut rows = Vec::with_capacity(spec.n);
    let mut y = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let label = r.random_bool(0.5);
        let mean = if label { 1.0 } else { -1.0 };
        let mut raw = Vec::with_capacity(p);
        for _ in 0..ni {
            raw.push(mean + r.sample::<f64, _>(StandardNormal));
        }
        for c in &coef {
            raw.push(c.iter().zip(&raw[..ni]).map(|(a, v)| a * v).sum());
        }
        for _ in 0..nn {
            raw.push(r.sample(StandardNormal));
        }
        // output column k holds generated column perm[k]
        rows.push(perm.iter().map(|&src| raw[src]).collect());
        y.push(f64::from(u8::from(label)));
    }
    let role = |src: usize| {
        if src < ni {
            "informative"
        } else if src < ni + nr {
            "redundant"
        } else {
            "noise"
        }
    };
    let roles: Vec<String> = perm.iter().map(|&src| role(src).to_string()).collect();
    let support = (0..p).filter(|&k| perm[k] < ni).collect();
    let data = Dataset::new(rows, y, names(p), Task::Classification)?;
    Ok(Simulated {
        data,
        metadata: ScenarioMetadata {
            seed: spec.seed,
            spec: spec.clone(),
            intercept: None,
            true_coefficients: None,
            column_roles: Some(roles),
            support,
        },
    })
}

/// Coefficients 5, 4, 3, 2, 1 on the first `n_informative` columns (cycled
/// when more are requested), zero elsewhere.
pub fn gen_wide(spec: &ScenarioSpec) -> Result<Simulated> {
    let p = spec.n_features;
    if spec.n < 2 || p < 1 || spec.n_informative > p {
        return Err(VimError::Parameter(format!(
            "wide scenario needs n >= 2 and n_informative <= n_features, got n={}, p={p}, k={}",
            spec.n, spec.n_informative
        )));
    }
    let mut beta = vec![0.0; p];
    for (j, b) in beta.iter_mut().enumerate().take(spec.n_informative) {
        *b = (5 - j % 5) as f64;
    }
    let mut r = rng::seeded(spec.seed);
    let mut rows = Vec::with_capacity(spec.n);
    let mut y = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let x: Vec<f64> = (0..p).map(|_| r.sample(StandardNormal)).collect();
        let eps: f64 = r.sample(StandardNormal);
        y.push(x.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + spec.noise_sd * eps);
        rows.push(x);
    }
    let data = Dataset::new(rows, y, names(p), Task::Regression)?;
    Ok(Simulated {
        data,
        metadata: ScenarioMetadata {
            seed: spec.seed,
            spec: spec.clone(),
            intercept: Some(0.0),
            true_coefficients: Some(beta),
            column_roles: None,
            support: (0..spec.n_informative).collect(),
        },
    })
}

/// Appends `k` independent standard normal columns named `N1..Nk`.
pub fn augment_with_noise(d: &Dataset, k: usize, seed: u64) -> Result<Dataset> {
    let mut r = rng::stream(seed, 0x6e6f697365);
    let p = d.n_features();
    let mut x = Vec::with_capacity(d.n_rows() * (p + k));
    for row in d.rows() {
        x.extend_from_slice(row);
        x.extend((0..k).map(|_| r.sample::<f64, _>(StandardNormal)));
    }
    let mut names = d.names().to_vec();
    names.extend((1..=k).map(|i| format!("N{i}")));
    Dataset::from_flat(x, d.n_rows(), d.y().to_vec(), names, d.task())
}
