//! Prediction interface shared by every fitted learner.

use serde::{Deserialize, Serialize};

use crate::boost::BoostModel;
use crate::data::Dataset;
use crate::forest::{Forest, Tree};
use crate::linear::LinearFit;

/// A trained point predictor: a real value for regression models and a class
/// label for classifiers.
pub trait Predictor: Sync {
    fn predict_row(&self, row: &[f64]) -> f64;

    fn predict(&self, d: &Dataset) -> Vec<f64> {
        d.rows().map(|r| self.predict_row(r)).collect()
    }
}

impl<F> Predictor for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn predict_row(&self, row: &[f64]) -> f64 {
        self(row)
    }
}

/// Opaque trained predictor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FittedModel {
    Linear(LinearFit),
    Tree(Tree),
    Forest(Forest),
    Boost(BoostModel),
}

impl Predictor for FittedModel {
    fn predict_row(&self, row: &[f64]) -> f64 {
        match self {
            FittedModel::Linear(m) => m.predict_row(row),
            FittedModel::Tree(m) => m.predict_row(row),
            FittedModel::Forest(m) => m.predict_row(row),
            FittedModel::Boost(m) => m.predict_row(row),
        }
    }
}
