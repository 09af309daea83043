//! Method identifiers and `key=value` method configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MethodId {
    #[serde(rename = "corr")]
    Corr,
    #[serde(rename = "psi")]
    Psi,
    #[serde(rename = "lasso")]
    Lasso,
    #[serde(rename = "rf-mdi")]
    RfMdi,
    #[serde(rename = "rf-mda")]
    RfMda,
    #[serde(rename = "xgb")]
    Xgb,
    #[serde(rename = "svm")]
    Svm,
    #[serde(rename = "perf")]
    Perf,
}

impl MethodId {
    pub const ALL: [MethodId; 8] = [
        MethodId::Corr,
        MethodId::Psi,
        MethodId::Lasso,
        MethodId::RfMdi,
        MethodId::RfMda,
        MethodId::Xgb,
        MethodId::Svm,
        MethodId::Perf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::Corr => "corr",
            MethodId::Psi => "psi",
            MethodId::Lasso => "lasso",
            MethodId::RfMdi => "rf-mdi",
            MethodId::RfMda => "rf-mda",
            MethodId::Xgb => "xgb",
            MethodId::Svm => "svm",
            MethodId::Perf => "perf",
        }
    }

    /// Configuration keys the method understands.
    pub fn keys(self) -> &'static [&'static str] {
        const FOREST: &[&str] = &["trees", "mtry", "min_leaf", "max_depth"];
        match self {
            MethodId::Corr => &["threshold"],
            MethodId::Psi => &["trees", "threshold"],
            MethodId::Lasso => &["folds", "n_lambdas", "one_se", "tol", "max_sweeps"],
            MethodId::RfMdi => FOREST,
            MethodId::RfMda => &["trees", "mtry", "min_leaf", "max_depth", "permutations"],
            MethodId::Xgb => &["rounds", "eta", "lambda", "gamma", "max_depth", "min_child_weight", "squared_gain"],
            MethodId::Svm => &["kernel", "sigma", "c", "keep", "tol"],
            MethodId::Perf => &["models", "subset", "learner", "retries"],
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown method '{s}'")))
    }
}

/// Parses `all` or a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<MethodId>> {
    if list.trim() == "all" {
        return Ok(MethodId::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let m: MethodId = part.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(BenchError::Config("empty method list".into()));
    }
    Ok(out)
}

/// `key=value` settings. A key may be scoped to one method as
/// `method.key=value`; unscoped keys apply to every method that accepts them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MethodConfig {
    entries: Vec<(Option<MethodId>, String, String)>,
}

impl MethodConfig {
    pub fn parse<S: AsRef<str>>(items: &[S]) -> Result<Self> {
        let mut entries = Vec::new();
        for item in items {
            let item = item.as_ref();
            let (key, value) =
                item.split_once('=').ok_or_else(|| BenchError::Config(format!("expected key=value, got '{item}'")))?;
            let (scope, key) = match key.split_once('.') {
                Some((m, k)) => (Some(m.parse::<MethodId>()?), k),
                None => (None, key),
            };
            if let Some(m) = scope {
                if !m.keys().contains(&key) {
                    return Err(BenchError::Config(format!("method {m} has no setting '{key}'")));
                }
            }
            entries.push((scope, key.trim().to_string(), value.trim().to_string()));
        }
        Ok(MethodConfig { entries })
    }

    /// Fails on an unscoped key that none of `methods` accepts.
    pub fn check_against(&self, methods: &[MethodId]) -> Result<()> {
        for (scope, key, _) in &self.entries {
            if scope.is_none() && !methods.iter().any(|m| m.keys().contains(&key.as_str())) {
                return Err(BenchError::Config(format!("no requested method accepts the setting '{key}'")));
            }
        }
        Ok(())
    }

    /// Settings visible to `method`; scoped entries win over unscoped ones.
    pub fn for_method(&self, method: MethodId) -> Settings {
        let mut map = BTreeMap::new();
        for pass_scoped in [false, true] {
            for (scope, key, value) in &self.entries {
                let applies = match scope {
                    None => !pass_scoped && method.keys().contains(&key.as_str()),
                    Some(m) => pass_scoped && *m == method,
                };
                if applies {
                    map.insert(key.clone(), value.clone());
                }
            }
        }
        Settings { method, map }
    }
}

/// Resolved settings for one method.
#[derive(Debug, Clone)]
pub struct Settings {
    method: MethodId,
    map: BTreeMap<String, String>,
}

impl Settings {
    fn parse_value<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.map
            .get(key)
            .map(|v| {
                v.parse::<T>().map_err(|_| BenchError::Config(format!("{}: cannot parse {key}='{v}'", self.method)))
            })
            .transpose()
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.parse_value(key)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.parse_value(key)
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        self.parse_value(key)
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }
}
