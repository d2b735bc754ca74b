//! MAPE, hyperparameter grid search and per-family evaluation reports.

use rayon::prelude::*;

use super::models::{predict_average_ensemble, predict_knn_ensemble, SetModel};
use super::{
    FeatureSchema, ForestHyperparams, SurrogateError, SurrogateForest, Target, TargetTransform,
    TARGETS,
};
use crate::harness::{by_set, split, SplitSpec, TrainingSample};

/// Mean absolute percentage error over the rows with a non-zero true value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mape {
    /// Percent.
    pub value: f64,
    /// Rows skipped because their true value was zero.
    pub excluded: usize,
}

/// `100 / n * sum(|y_true - y_pred| / |y_true|)`; zero-valued truths are
/// excluded from both the sum and `n`.
pub fn mape(y_true: &[f64], y_pred: &[f64]) -> Result<Mape, SurrogateError> {
    if y_true.len() != y_pred.len() || y_true.is_empty() {
        return Err(SurrogateError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t == 0.0 {
            continue;
        }
        sum += (t - p).abs() / t.abs();
        used += 1;
    }
    if used == 0 {
        return Err(SurrogateError::AllTargetsZero);
    }
    Ok(Mape {
        value: 100.0 * sum / used as f64,
        excluded: y_true.len() - used,
    })
}

/// Candidate values for the three tuned forest hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub min_samples_split: Vec<usize>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        HyperGrid {
            n_trees: vec![25, 50],
            max_depth: vec![3, 6, 12],
            min_samples_split: vec![2, 8, 16],
        }
    }
}

impl HyperGrid {
    pub fn configs(&self, feature_fraction: f64, seed: u64) -> Vec<ForestHyperparams> {
        let mut out = Vec::new();
        for &n_trees in &self.n_trees {
            for &max_depth in &self.max_depth {
                for &min_samples_split in &self.min_samples_split {
                    out.push(ForestHyperparams {
                        n_trees,
                        max_depth,
                        min_samples_split,
                        feature_fraction,
                        seed,
                    });
                }
            }
        }
        out
    }
}

fn target_column(samples: &[TrainingSample], t: Target) -> Vec<f64> {
    samples.iter().map(|s| s.outcome.values()[t.index()]).collect()
}

/// Validation error per target: MAPE, or mean absolute error where every true
/// value is zero and MAPE is undefined.
fn validation_scores(
    forest: &SurrogateForest,
    validation: &[TrainingSample],
) -> Result<[f64; 5], SurrogateError> {
    let preds = validation
        .iter()
        .map(|s| Ok(forest.predict_features(&forest.schema.encode_sample(s)?)))
        .collect::<Result<Vec<_>, SurrogateError>>()?;
    let mut out = [0.0; 5];
    for t in TARGETS {
        let y: Vec<f64> = target_column(validation, t);
        let p: Vec<f64> = preds.iter().map(|r| r[t.index()]).collect();
        out[t.index()] = match mape(&y, &p) {
            Ok(m) => m.value,
            Err(SurrogateError::AllTargetsZero) => {
                p.iter().map(|v| v.abs()).sum::<f64>() / p.len() as f64
            }
            Err(e) => return Err(e),
        };
    }
    Ok(out)
}

/// Grid-search result: the chosen hyperparameters and every candidate's
/// per-target validation error.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSearch {
    pub best: ForestHyperparams,
    pub scores: Vec<(ForestHyperparams, [f64; 5])>,
}

/// Fits every candidate on `train`, scores it on `validation`, and picks the one
/// with the lowest mean validation error across the five targets (ties go to
/// fewer trees, then shallower depth, then grid order). A target's error is its
/// MAPE, or its mean absolute error where every true value is zero.
pub fn grid_search(
    train: &[TrainingSample],
    validation: &[TrainingSample],
    schema: &FeatureSchema,
    candidates: &[ForestHyperparams],
    transform: TargetTransform,
) -> Result<GridSearch, SurrogateError> {
    if candidates.is_empty() {
        return Err(SurrogateError::InvalidHyperparams("empty grid".into()));
    }
    if train.is_empty() || validation.is_empty() {
        return Err(SurrogateError::EmptyTraining);
    }
    let scores = candidates
        .par_iter()
        .map(|hp| {
            let forest = SurrogateForest::fit(schema.clone(), train, *hp, transform)?;
            Ok((*hp, validation_scores(&forest, validation)?))
        })
        .collect::<Result<Vec<_>, SurrogateError>>()?;
    let mean = |v: &[f64; 5]| v.iter().sum::<f64>() / 5.0;
    let best = scores
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| {
            mean(&a.1)
                .total_cmp(&mean(&b.1))
                .then(a.0.n_trees.cmp(&b.0.n_trees))
                .then(a.0.max_depth.cmp(&b.0.max_depth))
                .then(i.cmp(j))
        })
        .map(|(_, s)| s.0)
        .expect("non-empty grid");
    Ok(GridSearch { best, scores })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetReport {
    pub target: Target,
    /// `None` when every true value is zero.
    pub train: Option<Mape>,
    pub test: Option<Mape>,
    /// Mean of `y_true - y_pred` on the test rows.
    pub residual_mean: f64,
    pub residual_sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub family: String,
    pub n_train: usize,
    pub n_test: usize,
    /// Indexed by [`Target::index`].
    pub targets: Vec<TargetReport>,
}

impl EvalReport {
    pub fn target(&self, t: Target) -> &TargetReport {
        &self.targets[t.index()]
    }

    /// Mean test MAPE over the targets where it is defined.
    pub fn mean_test_mape(&self) -> f64 {
        let vals: Vec<f64> = self
            .targets
            .iter()
            .filter_map(|r| r.test.map(|m| m.value))
            .collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    }

    fn build(
        family: &str,
        train: &[([f64; 5], [f64; 5])],
        test: &[([f64; 5], [f64; 5])],
    ) -> Result<Self, SurrogateError> {
        let score = |rows: &[([f64; 5], [f64; 5])], t: usize| -> Result<Option<Mape>, SurrogateError> {
            if rows.is_empty() {
                return Ok(None);
            }
            let y: Vec<f64> = rows.iter().map(|r| r.0[t]).collect();
            let p: Vec<f64> = rows.iter().map(|r| r.1[t]).collect();
            match mape(&y, &p) {
                Ok(m) => Ok(Some(m)),
                Err(SurrogateError::AllTargetsZero) => Ok(None),
                Err(e) => Err(e),
            }
        };
        let mut targets = Vec::new();
        for t in TARGETS {
            let i = t.index();
            let residuals: Vec<f64> = test.iter().map(|r| r.0[i] - r.1[i]).collect();
            let n = residuals.len().max(1) as f64;
            let mean = residuals.iter().sum::<f64>() / n;
            let sd = (residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
            targets.push(TargetReport {
                target: t,
                train: score(train, i)?,
                test: score(test, i)?,
                residual_mean: mean,
                residual_sd: sd,
            });
        }
        Ok(EvalReport {
            family: family.to_string(),
            n_train: train.len(),
            n_test: test.len(),
            targets,
        })
    }
}

/// Row order of the evaluation table.
pub const FAMILY_ORDER: [&str; 4] = ["each", "general", "average", "knn"];

/// Column order of the evaluation table.
pub const TABLE_TARGET_ORDER: [Target; 5] = [
    Target::Chi,
    Target::Dbi,
    Target::ElapsedSeconds,
    Target::NonClustered,
    Target::NumClusters,
];

/// Scores the model families on the same per-set train/test split used for
/// training. Per-set models predict their own set. The ensembles predict each
/// set from the models of the other sets only, as they would for a new set.
pub fn evaluate_families(
    each: &[SetModel],
    general: Option<&SurrogateForest>,
    samples: &[TrainingSample],
    split_spec: SplitSpec,
    knn_k: usize,
) -> Result<Vec<EvalReport>, SurrogateError> {
    type Rows = Vec<([f64; 5], [f64; 5])>;
    let mut parts: [(Rows, Rows); 4] = Default::default();
    for (name, rows) in by_set(samples) {
        let (train, test) =
            split(&rows, split_spec).map_err(|e| SurrogateError::TooFewSamples(e.to_string()))?;
        let own = each.iter().find(|m| m.name == name);
        let others: Vec<&SetModel> = each.iter().filter(|m| m.name != name).collect();
        let other_forests: Vec<&SurrogateForest> = others.iter().map(|m| &m.forest).collect();
        for (phase, group) in [(0usize, &train), (1, &test)] {
            for s in group.iter() {
                let truth = s.outcome.values();
                if let Some(m) = own {
                    let p = m.forest.predict(&s.params, None)?;
                    push(&mut parts[0], phase, truth, p);
                }
                if let Some(g) = general {
                    let p = g.predict(&s.params, Some(&s.descriptor))?;
                    push(&mut parts[1], phase, truth, p);
                }
                if !others.is_empty() {
                    let p = predict_average_ensemble(&other_forests, &s.params)?;
                    push(&mut parts[2], phase, truth, p);
                    let k = knn_k.clamp(1, others.len());
                    let p = predict_knn_ensemble(&others, &s.descriptor, k, &s.params)?;
                    push(&mut parts[3], phase, truth, p);
                }
            }
        }
    }
    FAMILY_ORDER
        .iter()
        .zip(parts.iter())
        .filter(|(_, (train, test))| !train.is_empty() || !test.is_empty())
        .map(|(family, (train, test))| EvalReport::build(family, train, test))
        .collect()
}

fn push(part: &mut (Vec<([f64; 5], [f64; 5])>, Vec<([f64; 5], [f64; 5])>), phase: usize, truth: [f64; 5], pred: [f64; 5]) {
    if phase == 0 {
        part.0.push((truth, pred));
    } else {
        part.1.push((truth, pred));
    }
}

/// Test MAPE per family (rows) and target (columns) as CSV; undefined cells read `NA`.
pub fn render_mape_table(reports: &[EvalReport]) -> String {
    let mut out = String::from("family");
    for t in TABLE_TARGET_ORDER {
        out.push(',');
        out.push_str(t.name());
    }
    out.push('\n');
    for r in reports {
        out.push_str(&r.family);
        for t in TABLE_TARGET_ORDER {
            out.push(',');
            match r.target(t).test {
                Some(m) => out.push_str(&format!("{:.2}", m.value)),
                None => out.push_str("NA"),
            }
        }
        out.push('\n');
    }
    out
}
