//! Model families: per-set forests, the general forest, and the two ensembles
//! built from per-set forests.

use std::collections::BTreeSet;

use super::eval::{grid_search, HyperGrid};
use super::{FeatureSchema, SurrogateError, SurrogateForest, TargetTransform};
use crate::evotemplate::GAParams;
use crate::harness::{by_set, split, SplitSpec, TrainingSample};
use crate::seqcore::SetDescriptor;

/// Minimum number of samples for a per-set model.
pub const MIN_SET_SAMPLES: usize = 10;

/// Anything that predicts the five outcomes for a parameter vector on a set.
pub trait OutcomePredictor: Send + Sync {
    fn predict_outcome(
        &self,
        params: &GAParams,
        descriptor: &SetDescriptor,
    ) -> Result<[f64; 5], SurrogateError>;

    /// Short family name, e.g. `general`.
    fn family(&self) -> &'static str;
}

impl OutcomePredictor for SurrogateForest {
    fn predict_outcome(
        &self,
        params: &GAParams,
        descriptor: &SetDescriptor,
    ) -> Result<[f64; 5], SurrogateError> {
        self.predict(params, Some(descriptor))
    }

    fn family(&self) -> &'static str {
        match self.schema.kind {
            super::SchemaKind::PeOnly => "each",
            super::SchemaKind::PePlusPs => "general",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub grid: HyperGrid,
    pub feature_fraction: f64,
    pub seed: u64,
    pub transform: TargetTransform,
    /// Split of the training rows used to score the hyperparameter grid.
    pub validation: SplitSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            grid: HyperGrid::default(),
            feature_fraction: 1.0 / 3.0,
            seed: 0,
            transform: TargetTransform::default(),
            validation: SplitSpec::default(),
        }
    }
}

/// A per-set forest together with the descriptor of the set it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct SetModel {
    pub name: String,
    pub descriptor: SetDescriptor,
    pub forest: SurrogateForest,
}

fn tune_and_fit(
    schema: FeatureSchema,
    samples: &[TrainingSample],
    cfg: &TrainConfig,
) -> Result<SurrogateForest, SurrogateError> {
    let (fit_rows, validation_rows) = split(samples, cfg.validation)
        .map_err(|e| SurrogateError::TooFewSamples(e.to_string()))?;
    let candidates = cfg.grid.configs(cfg.feature_fraction, cfg.seed);
    let search = grid_search(
        &fit_rows,
        &validation_rows,
        &schema,
        &candidates,
        cfg.transform,
    )?;
    SurrogateForest::fit(schema, samples, search.best, cfg.transform)
}

/// One forest per set on GA parameters only, tuned on a split of that set's rows.
/// Sets with fewer than [`MIN_SET_SAMPLES`] rows are skipped and reported.
pub fn train_each(
    samples: &[TrainingSample],
    cfg: &TrainConfig,
) -> Result<(Vec<SetModel>, Vec<String>), SurrogateError> {
    let mut models = Vec::new();
    let mut skipped = Vec::new();
    for (name, rows) in by_set(samples) {
        if rows.len() < MIN_SET_SAMPLES {
            skipped.push(format!(
                "TooFewSamples: set {name:?} has {} samples, need {MIN_SET_SAMPLES}",
                rows.len()
            ));
            continue;
        }
        let forest = tune_and_fit(FeatureSchema::pe_only(), &rows, cfg)?;
        models.push(SetModel {
            descriptor: rows[0].descriptor.clone(),
            name,
            forest,
        });
    }
    Ok((models, skipped))
}

/// One forest over all sets on GA parameters plus set descriptors. The n-gram
/// vocabulary is the union seen in training.
pub fn train_general(
    samples: &[TrainingSample],
    cfg: &TrainConfig,
) -> Result<SurrogateForest, SurrogateError> {
    let sets: BTreeSet<&str> = samples.iter().map(|s| s.set_name.as_str()).collect();
    if sets.len() < 2 {
        return Err(SurrogateError::TooFewSets(format!(
            "general model needs at least 2 sets, got {}",
            sets.len()
        )));
    }
    let vocab: BTreeSet<String> = samples
        .iter()
        .flat_map(|s| s.descriptor.ngram_freqs.keys().cloned())
        .collect();
    tune_and_fit(
        FeatureSchema::pe_plus_ps(vocab.into_iter().collect()),
        samples,
        cfg,
    )
}

/// Mean that does not depend on the order of `values`.
fn order_free_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

fn mean_prediction(
    models: &[&SurrogateForest],
    params: &GAParams,
    descriptor: Option<&SetDescriptor>,
) -> Result<[f64; 5], SurrogateError> {
    if models.is_empty() {
        return Err(SurrogateError::NoModels);
    }
    let preds = models
        .iter()
        .map(|m| m.predict(params, descriptor))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = [0.0; 5];
    for (t, o) in out.iter_mut().enumerate() {
        let mut column: Vec<f64> = preds.iter().map(|p| p[t]).collect();
        *o = order_free_mean(&mut column);
    }
    Ok(out)
}

/// Unweighted mean of the member predictions.
pub fn predict_average_ensemble(
    models: &[&SurrogateForest],
    params: &GAParams,
) -> Result<[f64; 5], SurrogateError> {
    mean_prediction(models, params, None)
}

/// Descriptor columns: the six statistics, then n-gram frequencies over `vocab`.
fn descriptor_vector(d: &SetDescriptor, vocab: &[String]) -> Vec<f64> {
    d.stat_values()
        .into_iter()
        .chain(vocab.iter().map(|k| d.ngram(k)))
        .collect()
}

/// Member indices ordered by z-scored Euclidean distance to `target` (ties by
/// name). Statistics come from the member descriptors; constant columns are
/// dropped.
pub(crate) fn rank_neighbors(members: &[&SetModel], target: &SetDescriptor) -> Vec<usize> {
    let vocab: Vec<String> = members
        .iter()
        .flat_map(|m| m.descriptor.ngram_freqs.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let rows: Vec<Vec<f64>> = members
        .iter()
        .map(|m| descriptor_vector(&m.descriptor, &vocab))
        .collect();
    let query = descriptor_vector(target, &vocab);
    let n = rows.len() as f64;
    let width = query.len();
    let mut scale = Vec::with_capacity(width);
    for c in 0..width {
        let mean = rows.iter().map(|r| r[c]).sum::<f64>() / n;
        let sd = (rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n).sqrt();
        scale.push((mean, sd));
    }
    let distance = |row: &[f64]| -> f64 {
        scale
            .iter()
            .enumerate()
            .filter(|(_, (_, sd))| *sd > 0.0)
            .map(|(c, (mean, sd))| ((row[c] - mean) / sd - (query[c] - mean) / sd).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut order: Vec<(f64, &str, usize)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (distance(r), members[i].name.as_str(), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    order.into_iter().map(|(_, _, i)| i).collect()
}

/// Mean prediction of the `k` members whose set descriptors are closest to
/// `new_descriptor`.
pub fn predict_knn_ensemble(
    members: &[&SetModel],
    new_descriptor: &SetDescriptor,
    k: usize,
    params: &GAParams,
) -> Result<[f64; 5], SurrogateError> {
    if members.is_empty() {
        return Err(SurrogateError::NoModels);
    }
    if k == 0 || k > members.len() {
        return Err(SurrogateError::InvalidK {
            k,
            n: members.len(),
        });
    }
    let neighbors: Vec<&SurrogateForest> = rank_neighbors(members, new_descriptor)
        .into_iter()
        .take(k)
        .map(|i| &members[i].forest)
        .collect();
    mean_prediction(&neighbors, params, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AverageEnsemble {
    pub members: Vec<SetModel>,
}

impl OutcomePredictor for AverageEnsemble {
    fn predict_outcome(
        &self,
        params: &GAParams,
        _descriptor: &SetDescriptor,
    ) -> Result<[f64; 5], SurrogateError> {
        let models: Vec<&SurrogateForest> = self.members.iter().map(|m| &m.forest).collect();
        predict_average_ensemble(&models, params)
    }

    fn family(&self) -> &'static str {
        "average"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnEnsemble {
    pub members: Vec<SetModel>,
    pub k: usize,
}

impl OutcomePredictor for KnnEnsemble {
    fn predict_outcome(
        &self,
        params: &GAParams,
        descriptor: &SetDescriptor,
    ) -> Result<[f64; 5], SurrogateError> {
        let refs: Vec<&SetModel> = self.members.iter().collect();
        predict_knn_ensemble(&refs, descriptor, self.k, params)
    }

    fn family(&self) -> &'static str {
        "knn"
    }
}
