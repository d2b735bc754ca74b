//! Surrogate models of TDC run outcomes.
//!
//! Every model predicts the five [`RunOutcome`] targets with one random forest
//! per target. Two feature schemas exist: GA parameters only (per-set models) and
//! GA parameters plus the set descriptor over a frozen n-gram vocabulary (the
//! general model). Per-set models combine into an unweighted average ensemble
//! and a k-nearest-sets ensemble.

mod eval;
mod forest;
mod models;
mod persist;
mod tree;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use eval::{
    evaluate_families, grid_search, mape, render_mape_table, EvalReport, GridSearch, HyperGrid, Mape,
    TargetReport, FAMILY_ORDER, TABLE_TARGET_ORDER,
};
pub use forest::{train_forest, Forest, ForestHyperparams};
pub use models::{
    predict_average_ensemble, predict_knn_ensemble, train_each, train_general, AverageEnsemble,
    KnnEnsemble, OutcomePredictor, SetModel, TrainConfig,
};
pub use persist::{Family, ModelFile, FORMAT_VERSION};
pub use tree::{train_tree, FittedTree, Matrix, Node, RegressionTree, TreeParams};

use crate::cluster::RunOutcome;
use crate::evotemplate::GAParams;
use crate::harness::{param_values, TrainingSample, PARAM_COLUMNS};
use crate::seqcore::{SetDescriptor, DESCRIPTOR_STAT_COLUMNS};

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("EmptyTraining: no rows to train on")]
    EmptyTraining,
    #[error("InvalidHyperparams: {0}")]
    InvalidHyperparams(String),
    #[error("AllTargetsZero: every true value is zero")]
    AllTargetsZero,
    #[error("LengthMismatch: {0} true values vs {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("TooFewSamples: {0}")]
    TooFewSamples(String),
    #[error("TooFewSets: {0}")]
    TooFewSets(String),
    #[error("NoModels: ensemble has no members")]
    NoModels,
    #[error("InvalidK: k = {k} with {n} models")]
    InvalidK { k: usize, n: usize },
    #[error("SchemaMismatch: {0}")]
    SchemaMismatch(String),
    #[error("FormatError: {0}")]
    Format(String),
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
}

/// The five predicted run outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    ElapsedSeconds,
    NumClusters,
    Chi,
    Dbi,
    NonClustered,
}

/// All targets in [`RunOutcome::values`] order.
pub const TARGETS: [Target; 5] = [
    Target::ElapsedSeconds,
    Target::NumClusters,
    Target::Chi,
    Target::Dbi,
    Target::NonClustered,
];

impl Target {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        RunOutcome::FIELDS[self.index()]
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = SurrogateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TARGETS
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| SurrogateError::SchemaMismatch(format!("unknown target {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemaKind {
    PeOnly,
    PePlusPs,
}

impl SchemaKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemaKind::PeOnly => "pe_only",
            SchemaKind::PePlusPs => "pe_plus_ps",
        }
    }
}

/// Named, ordered feature columns of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSchema {
    pub kind: SchemaKind,
    /// N-gram keys appended after the descriptor statistics (empty for `PeOnly`).
    pub vocab: Vec<String>,
}

impl FeatureSchema {
    pub fn pe_only() -> Self {
        FeatureSchema {
            kind: SchemaKind::PeOnly,
            vocab: Vec::new(),
        }
    }

    pub fn pe_plus_ps(mut vocab: Vec<String>) -> Self {
        vocab.sort();
        vocab.dedup();
        FeatureSchema {
            kind: SchemaKind::PePlusPs,
            vocab,
        }
    }

    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = PARAM_COLUMNS.iter().map(|s| s.to_string()).collect();
        if self.kind == SchemaKind::PePlusPs {
            names.extend(DESCRIPTOR_STAT_COLUMNS.iter().map(|s| s.to_string()));
            names.extend(self.vocab.iter().map(|k| format!("ngram:{k}")));
        }
        names
    }

    pub fn width(&self) -> usize {
        match self.kind {
            SchemaKind::PeOnly => PARAM_COLUMNS.len(),
            SchemaKind::PePlusPs => {
                PARAM_COLUMNS.len() + DESCRIPTOR_STAT_COLUMNS.len() + self.vocab.len()
            }
        }
    }

    /// Feature vector; n-grams outside the vocabulary are ignored and missing
    /// ones read 0.
    pub fn encode(
        &self,
        params: &GAParams,
        descriptor: Option<&SetDescriptor>,
    ) -> Result<Vec<f64>, SurrogateError> {
        let mut x = param_values(params).to_vec();
        if self.kind == SchemaKind::PePlusPs {
            let d = descriptor.ok_or_else(|| {
                SurrogateError::SchemaMismatch("model needs a set descriptor".into())
            })?;
            x.extend(d.stat_values());
            x.extend(self.vocab.iter().map(|k| d.ngram(k)));
        }
        Ok(x)
    }

    pub fn encode_sample(&self, s: &TrainingSample) -> Result<Vec<f64>, SurrogateError> {
        self.encode(&s.params, Some(&s.descriptor))
    }
}

/// How target values are mapped before fitting and mapped back after prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetTransform {
    Identity,
    /// `ln(1 + y)`; forests then average relative rather than absolute errors.
    #[default]
    Log1p,
}

impl TargetTransform {
    pub fn name(self) -> &'static str {
        match self {
            TargetTransform::Identity => "identity",
            TargetTransform::Log1p => "log1p",
        }
    }

    pub fn forward(self, y: f64) -> f64 {
        match self {
            TargetTransform::Identity => y,
            TargetTransform::Log1p => y.ln_1p(),
        }
    }

    pub fn inverse(self, z: f64) -> f64 {
        match self {
            TargetTransform::Identity => z,
            TargetTransform::Log1p => z.exp_m1(),
        }
    }
}

impl FromStr for TargetTransform {
    type Err = SurrogateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(TargetTransform::Identity),
            "log1p" => Ok(TargetTransform::Log1p),
            other => Err(SurrogateError::Format(format!("unknown transform {other:?}"))),
        }
    }
}

/// Five per-target forests over one feature schema.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateForest {
    pub schema: FeatureSchema,
    pub transform: TargetTransform,
    /// Indexed by [`Target::index`].
    pub forests: Vec<Forest>,
}

impl SurrogateForest {
    pub fn fit(
        schema: FeatureSchema,
        samples: &[TrainingSample],
        hyper: ForestHyperparams,
        transform: TargetTransform,
    ) -> Result<Self, SurrogateError> {
        if samples.is_empty() {
            return Err(SurrogateError::EmptyTraining);
        }
        if transform == TargetTransform::Log1p
            && samples.iter().any(|s| s.outcome.values().iter().any(|&v| v < 0.0))
        {
            return Err(SurrogateError::SchemaMismatch(
                "log1p transform needs non-negative targets".into(),
            ));
        }
        let mut x = Matrix::new(schema.width());
        for s in samples {
            x.push_row(&schema.encode_sample(s)?);
        }
        let forests = TARGETS
            .iter()
            .map(|t| {
                let y: Vec<f64> = samples
                    .iter()
                    .map(|s| transform.forward(s.outcome.values()[t.index()]))
                    .collect();
                train_forest(&x, &y, &hyper)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SurrogateForest {
            schema,
            transform,
            forests,
        })
    }

    pub fn predict_features(&self, x: &[f64]) -> [f64; 5] {
        let mut out = [0.0; 5];
        for (o, f) in out.iter_mut().zip(&self.forests) {
            *o = self.transform.inverse(f.predict(x));
        }
        out
    }

    pub fn predict(
        &self,
        params: &GAParams,
        descriptor: Option<&SetDescriptor>,
    ) -> Result<[f64; 5], SurrogateError> {
        Ok(self.predict_features(&self.schema.encode(params, descriptor)?))
    }
}

/// Features ranked by normalized impurity decrease for one target; features
/// that never split are omitted.
pub fn feature_importance(forest: &SurrogateForest, target: Target) -> Vec<(String, f64)> {
    let names = forest.schema.names();
    let mut ranked: Vec<(String, f64)> = names
        .into_iter()
        .zip(forest.forests[target.index()].importance.iter().copied())
        .filter(|(_, v)| *v > 0.0)
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}
