//! Conventional inverse baselines: a direct-inverse MLP (hardness -> 13
//! features) and a multi-output regression forest fitted by CART variance
//! reduction on the single hardness input.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, N_FEATURES};
use crate::error::{Error, Result};
use crate::nncore::{Matrix, Mlp, OutputMode};
use crate::training::{train_supervised, LossCurve, TrainConfig};

// ---------------------------------------------------------------------------
// Regression tree / forest

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature_index: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        mean: Vec<f64>,
        n_samples: usize,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features considered per split; vacuous with a single input feature.
    pub features_per_split: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 12,
            min_leaf: 2,
            features_per_split: 1,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Forest {
    pub params: ForestParams,
    pub trees: Vec<TreeNode>,
}

fn leaf(ids: &[usize], y: &Matrix) -> TreeNode {
    let n = ids.len();
    let mut mean = vec![0.0; y.cols()];
    for &i in ids {
        for (m, v) in mean.iter_mut().zip(y.row(i)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    TreeNode::Leaf { mean, n_samples: n }
}

/// Summed squared deviation from the mean, over all output columns, for
/// `ids[lo..hi]` given per-column prefix sums of y and y^2.
fn sse(prefix: &[Vec<f64>], prefix_sq: &[Vec<f64>], lo: usize, hi: usize) -> f64 {
    let n = (hi - lo) as f64;
    let mut total = 0.0;
    for c in 0..prefix.len() {
        let s = prefix[c][hi] - prefix[c][lo];
        let sq = prefix_sq[c][hi] - prefix_sq[c][lo];
        total += sq - s * s / n;
    }
    total
}

fn build_tree(
    x: &[f64],
    y: &Matrix,
    ids: &mut [usize],
    depth: usize,
    params: &ForestParams,
) -> TreeNode {
    let n = ids.len();
    if depth >= params.max_depth || n < 2 * params.min_leaf {
        return leaf(ids, y);
    }
    ids.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());
    if x[ids[0]] == x[ids[n - 1]] {
        return leaf(ids, y); // degenerate: all inputs equal
    }

    // Per-column prefix sums over the sorted order.
    let cols = y.cols();
    let mut prefix = vec![vec![0.0; n + 1]; cols];
    let mut prefix_sq = vec![vec![0.0; n + 1]; cols];
    for (k, &i) in ids.iter().enumerate() {
        let row = y.row(i);
        for c in 0..cols {
            prefix[c][k + 1] = prefix[c][k] + row[c];
            prefix_sq[c][k + 1] = prefix_sq[c][k] + row[c] * row[c];
        }
    }

    let parent = sse(&prefix, &prefix_sq, 0, n);
    let mut best: Option<(usize, f64)> = None; // (split position, cost)
    for k in params.min_leaf..=(n - params.min_leaf) {
        if x[ids[k - 1]] == x[ids[k]] {
            continue; // threshold must separate distinct input values
        }
        let cost = sse(&prefix, &prefix_sq, 0, k) + sse(&prefix, &prefix_sq, k, n);
        if best.is_none_or(|(_, c)| cost < c) {
            best = Some((k, cost));
        }
    }
    let Some((k, cost)) = best else {
        return leaf(ids, y);
    };
    if cost >= parent {
        return leaf(ids, y); // no variance reduction
    }
    let threshold = 0.5 * (x[ids[k - 1]] + x[ids[k]]);
    let (left_ids, right_ids) = ids.split_at_mut(k);
    TreeNode::Split {
        feature_index: 0,
        threshold,
        left: Box::new(build_tree(x, y, left_ids, depth + 1, params)),
        right: Box::new(build_tree(x, y, right_ids, depth + 1, params)),
    }
}

/// CART on the single hardness input: greedy splits minimizing the summed
/// per-output variance of the children.
pub fn fit_tree(x: &[f64], y: &Matrix, params: &ForestParams) -> Result<TreeNode> {
    if x.len() != y.rows() || x.is_empty() {
        return Err(Error::dim(
            "fit_tree",
            format!("{} rows", y.rows()),
            format!("{}", x.len()),
        ));
    }
    let mut ids: Vec<usize> = (0..x.len()).collect();
    Ok(build_tree(x, y, &mut ids, 0, params))
}

pub fn predict_tree(node: &TreeNode, x: f64) -> &[f64] {
    match node {
        TreeNode::Leaf { mean, .. } => mean,
        TreeNode::Split {
            threshold,
            left,
            right,
            ..
        } => {
            if x <= *threshold {
                predict_tree(left, x)
            } else {
                predict_tree(right, x)
            }
        }
    }
}

/// Fits `n_trees` CART trees on (optionally bootstrapped) resamples.
/// Per-tree seeds derive from the master seed by tree index.
pub fn fit_forest(x: &[f64], y: &Matrix, params: &ForestParams) -> Result<Forest> {
    if params.n_trees == 0 {
        return Err(Error::Config("n_trees must be >= 1".into()));
    }
    let n = x.len();
    let mut trees = Vec::with_capacity(params.n_trees);
    for t in 0..params.n_trees {
        let (xs, ys): (Vec<f64>, Matrix) = if params.bootstrap {
            let mut rng = ChaCha12Rng::seed_from_u64(params.seed.wrapping_add(t as u64));
            let mut xs = Vec::with_capacity(n);
            let mut rows = Vec::with_capacity(n);
            for _ in 0..n {
                let i = rng.random_range(0..n);
                xs.push(x[i]);
                rows.push(y.row(i).to_vec());
            }
            (xs, Matrix::from_rows(&rows)?)
        } else {
            (x.to_vec(), y.clone())
        };
        trees.push(fit_tree(&xs, &ys, params)?);
    }
    Ok(Forest {
        params: *params,
        trees,
    })
}

impl Forest {
    /// Unweighted mean of the per-tree predictions.
    pub fn predict(&self, x: f64) -> Vec<f64> {
        let cols = match &self.trees[0] {
            TreeNode::Leaf { mean, .. } => mean.len(),
            TreeNode::Split { left, .. } => {
                let mut node: &TreeNode = left;
                loop {
                    match node {
                        TreeNode::Leaf { mean, .. } => break mean.len(),
                        TreeNode::Split { left, .. } => node = left,
                    }
                }
            }
        };
        let mut out = vec![0.0; cols];
        for tree in &self.trees {
            for (o, v) in out.iter_mut().zip(predict_tree(tree, x)) {
                *o += v;
            }
        }
        for o in &mut out {
            *o /= self.trees.len() as f64;
        }
        out
    }

    pub fn predict_batch(&self, xs: &[f64]) -> Result<Matrix> {
        Matrix::from_rows(&xs.iter().map(|&x| self.predict(x)).collect::<Vec<_>>())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(json: &str) -> Result<Forest> {
        let f: Forest = serde_json::from_str(json)?;
        if f.trees.is_empty() {
            return Err(Error::Invariant("forest has no trees".into()));
        }
        Ok(f)
    }
}

// ---------------------------------------------------------------------------
// Direct-inverse MLP

/// Standard supervised training of the inverted dataset: hardness as the
/// input, the 13 features as the regression target.
pub fn train_direct_inverse(
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
) -> Result<(Mlp, LossCurve)> {
    if !train.normalized || !val.normalized {
        return Err(Error::Invariant(
            "train_direct_inverse expects normalized datasets".into(),
        ));
    }
    let mut net = Mlp::init(1, cfg.hidden_width, N_FEATURES, OutputMode::Sigmoid, cfg.seed);
    let x = Matrix::column(&train.targets)?;
    let x_val = Matrix::column(&val.targets)?;
    let curve = train_supervised(&mut net, &x, &train.features, &x_val, &val.features, cfg)?;
    Ok((net, curve))
}
