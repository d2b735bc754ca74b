//! CART regression trees.

use rand::seq::index::sample;
use rand::Rng;

use super::SurrogateError;

/// Row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    data: Vec<f64>,
    cols: usize,
}

impl Matrix {
    pub fn new(cols: usize) -> Self {
        Matrix {
            data: Vec::new(),
            cols,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Matrix::new(cols);
        for r in rows {
            m.push_row(r);
        }
        m
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols, "row width");
        self.data.extend_from_slice(row);
    }

    pub fn rows(&self) -> usize {
        if self.cols == 0 {
            0
        } else {
            self.data.len() / self.cols
        }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left (the next node in preorder),
    /// the others to `right`.
    Split {
        feature: usize,
        threshold: f64,
        right: usize,
    },
}

/// A regression tree stored as a preorder node list.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    /// Validates the preorder layout: every split's left child is the next node
    /// and `right` points past the whole left subtree.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self, SurrogateError> {
        fn walk(nodes: &[Node], at: usize) -> Result<usize, SurrogateError> {
            match nodes.get(at) {
                None => Err(SurrogateError::Format(format!("node {at} missing"))),
                Some(Node::Leaf { .. }) => Ok(at + 1),
                Some(Node::Split { right, .. }) => {
                    let after_left = walk(nodes, at + 1)?;
                    if after_left != *right {
                        return Err(SurrogateError::Format(format!(
                            "node {at}: right child {right}, expected {after_left}"
                        )));
                    }
                    walk(nodes, *right)
                }
            }
        }
        if walk(&nodes, 0)? != nodes.len() {
            return Err(SurrogateError::Format("trailing tree nodes".into()));
        }
        Ok(RegressionTree { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    right,
                } => {
                    at = if x[feature] <= threshold { at + 1 } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> (usize, usize) {
            match nodes[at] {
                Node::Leaf { .. } => (0, at + 1),
                Node::Split { .. } => {
                    let (l, next) = walk(nodes, at + 1);
                    let (r, end) = walk(nodes, next);
                    (1 + l.max(r), end)
                }
            }
        }
        walk(&self.nodes, 0).0
    }

    pub fn leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// Fraction of features considered at each split.
    pub feature_fraction: f64,
}

/// A fitted tree plus the total squared-error reduction credited to each feature.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedTree {
    pub tree: RegressionTree,
    pub importance: Vec<f64>,
}

struct Builder<'a, R> {
    x: &'a Matrix,
    y: &'a [f64],
    params: TreeParams,
    n_candidates: usize,
    rng: &'a mut R,
    nodes: Vec<Node>,
    importance: Vec<f64>,
}

fn sse(y: &[f64], idx: &[usize]) -> (f64, f64) {
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / n;
    let sse = idx.iter().map(|&i| (y[i] - mean).powi(2)).sum();
    (mean, sse)
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    cost: f64,
    n_left: usize,
}

impl<R: Rng> Builder<'_, R> {
    fn best_split(&mut self, idx: &mut [usize]) -> Option<BestSplit> {
        let n_features = self.x.cols();
        let mut features: Vec<usize> = if self.n_candidates >= n_features {
            (0..n_features).collect()
        } else {
            sample(self.rng, n_features, self.n_candidates).into_vec()
        };
        features.sort_unstable();

        let mut best: Option<BestSplit> = None;
        let n = idx.len();
        // Centering keeps the running sums well conditioned.
        let shift = idx.iter().map(|&i| self.y[i]).sum::<f64>() / n as f64;
        for &f in &features {
            idx.sort_by(|&a, &b| self.x.get(a, f).total_cmp(&self.x.get(b, f)).then(a.cmp(&b)));
            let total_sum: f64 = idx.iter().map(|&i| self.y[i] - shift).sum();
            let total_sq: f64 = idx.iter().map(|&i| (self.y[i] - shift).powi(2)).sum();
            let (mut left_sum, mut left_sq) = (0.0, 0.0);
            for pos in 0..n - 1 {
                let yi = self.y[idx[pos]] - shift;
                left_sum += yi;
                left_sq += yi * yi;
                let here = self.x.get(idx[pos], f);
                let next = self.x.get(idx[pos + 1], f);
                if here == next {
                    continue;
                }
                let nl = (pos + 1) as f64;
                let nr = (n - pos - 1) as f64;
                let right_sum = total_sum - left_sum;
                let right_sq = total_sq - left_sq;
                let cost = (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
                if best.as_ref().map_or(true, |b| cost < b.cost) {
                    let mut threshold = here + (next - here) / 2.0;
                    if threshold >= next {
                        threshold = here;
                    }
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        cost,
                        n_left: pos + 1,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) {
        let (mean, parent_sse) = sse(self.y, idx);
        let constant = idx.iter().all(|&i| self.y[i] == self.y[idx[0]]);
        if constant {
            self.nodes.push(Node::Leaf {
                value: self.y[idx[0]],
            });
            return;
        }
        if depth >= self.params.max_depth || idx.len() < self.params.min_samples_split {
            self.nodes.push(Node::Leaf { value: mean });
            return;
        }
        let Some(split) = self.best_split(idx) else {
            self.nodes.push(Node::Leaf { value: mean });
            return;
        };
        // Re-derive the partition exactly from the threshold; the split cost from the
        // running sums is only used for ranking.
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x.get(i, split.feature) <= split.threshold);
        debug_assert_eq!(left_idx.len(), split.n_left);
        let child_sse = sse(self.y, &left_idx).1 + sse(self.y, &right_idx).1;
        let gain = parent_sse - child_sse;
        if !(gain > 0.0) {
            self.nodes.push(Node::Leaf { value: mean });
            return;
        }
        self.importance[split.feature] += gain;
        let at = self.nodes.len();
        self.nodes.push(Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            right: 0,
        });
        let mut left_idx = left_idx;
        let mut right_idx = right_idx;
        self.grow(&mut left_idx, depth + 1);
        let right_at = self.nodes.len();
        if let Node::Split { right, .. } = &mut self.nodes[at] {
            *right = right_at;
        }
        self.grow(&mut right_idx, depth + 1);
    }
}

/// Greedy CART fit on the rows listed in `rows` (repeats allowed, as in a bootstrap).
///
/// Each split minimizes the summed squared error of the two children over
/// midpoints between consecutive distinct feature values. Growth stops at
/// `max_depth`, below `min_samples_split` rows, at a constant target, or when no
/// split reduces the error. Leaves predict the mean target of their rows.
pub fn train_tree<R: Rng>(
    x: &Matrix,
    y: &[f64],
    rows: &[usize],
    params: TreeParams,
    rng: &mut R,
) -> Result<FittedTree, SurrogateError> {
    if rows.is_empty() || x.rows() == 0 {
        return Err(SurrogateError::EmptyTraining);
    }
    let n_features = x.cols();
    let n_candidates = ((params.feature_fraction * n_features as f64).ceil() as usize).clamp(1, n_features.max(1));
    let mut builder = Builder {
        x,
        y,
        params,
        n_candidates,
        rng,
        nodes: Vec::new(),
        importance: vec![0.0; n_features],
    };
    let mut idx = rows.to_vec();
    builder.grow(&mut idx, 0);
    Ok(FittedTree {
        tree: RegressionTree {
            nodes: builder.nodes,
        },
        importance: builder.importance,
    })
}
