//! Bagged regression forests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tree::{train_tree, Matrix, RegressionTree, TreeParams};
use super::SurrogateError;
use crate::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestHyperparams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub feature_fraction: f64,
    pub seed: u64,
}

impl Default for ForestHyperparams {
    fn default() -> Self {
        ForestHyperparams {
            n_trees: 100,
            max_depth: 12,
            min_samples_split: 2,
            feature_fraction: 1.0 / 3.0,
            seed: 0,
        }
    }
}

impl ForestHyperparams {
    pub fn validate(&self) -> Result<(), SurrogateError> {
        if self.n_trees == 0
            || self.max_depth == 0
            || self.min_samples_split < 2
            || !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0)
        {
            return Err(SurrogateError::InvalidHyperparams(format!("{self:?}")));
        }
        Ok(())
    }

    pub(crate) fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            feature_fraction: self.feature_fraction,
        }
    }
}

/// Random forest for one target.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub hyper: ForestHyperparams,
    pub trees: Vec<RegressionTree>,
    /// Normalized impurity decrease per feature; all zero when no tree splits.
    pub importance: Vec<f64>,
}

impl Forest {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let first = self.trees[0].predict(x);
        let mut sum = 0.0;
        let mut all_same = true;
        for t in &self.trees {
            let p = t.predict(x);
            all_same &= p == first;
            sum += p;
        }
        if all_same {
            first
        } else {
            sum / self.trees.len() as f64
        }
    }
}

/// Trains `n_trees` trees, each on a same-size bootstrap resample drawn from its
/// own RNG stream (`derive_seed(seed, tree_index)`).
pub fn train_forest(
    x: &Matrix,
    y: &[f64],
    hp: &ForestHyperparams,
) -> Result<Forest, SurrogateError> {
    hp.validate()?;
    let n = x.rows();
    if n == 0 || y.len() != n {
        return Err(SurrogateError::EmptyTraining);
    }
    let fitted = (0..hp.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(hp.seed, t as u64));
            let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            train_tree(x, y, &rows, hp.tree_params(), &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut importance = vec![0.0; x.cols()];
    for f in &fitted {
        for (acc, v) in importance.iter_mut().zip(&f.importance) {
            *acc += v;
        }
    }
    let total: f64 = importance.iter().sum();
    if total > 0.0 {
        for v in &mut importance {
            *v /= total;
        }
    }
    Ok(Forest {
        hyper: *hp,
        trees: fitted.into_iter().map(|f| f.tree).collect(),
        importance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row_forest_predicts_its_target() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0]]);
        let hp = ForestHyperparams {
            n_trees: 1,
            ..Default::default()
        };
        let f = train_forest(&x, &[7.5], &hp).unwrap();
        assert_eq!(f.predict(&[0.0, 0.0]), 7.5);
    }

    #[test]
    fn constant_target_is_exact() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let x = Matrix::from_rows(&rows);
        let y = vec![0.1; 20];
        let f = train_forest(&x, &y, &ForestHyperparams::default()).unwrap();
        for r in &rows {
            assert_eq!(f.predict(r), 0.1);
        }
        assert!(f.importance.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn invalid_hyperparams() {
        let x = Matrix::from_rows(&[vec![1.0]]);
        for hp in [
            ForestHyperparams {
                n_trees: 0,
                ..Default::default()
            },
            ForestHyperparams {
                min_samples_split: 1,
                ..Default::default()
            },
            ForestHyperparams {
                feature_fraction: 0.0,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                train_forest(&x, &[1.0], &hp),
                Err(SurrogateError::InvalidHyperparams(_))
            ));
        }
    }
}
