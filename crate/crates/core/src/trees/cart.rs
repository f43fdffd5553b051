//! Binary CART with Gini impurity and exact threshold search.

use serde::{Deserialize, Serialize};

use super::TreeError;
use crate::matrix::Matrix;

/// Stopping rules for tree growth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeHyper {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_impurity_decrease: f64,
}

impl Default for TreeHyper {
    fn default() -> Self {
        Self { max_depth: 12, min_samples_leaf: 5, min_impurity_decrease: 1e-7 }
    }
}

/// `x[feature] <= threshold` routes left.
#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    Leaf { probability: f64, samples: usize },
    Split { feature: usize, threshold: f64, left: Box<TreeNode>, right: Box<TreeNode> },
}

impl TreeNode {
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Highest feature index referenced plus one.
    pub fn required_dim(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { feature, left, right, .. } => {
                (feature + 1).max(left.required_dim()).max(right.required_dim())
            }
        }
    }
}

/// Gini impurity `1 - p_pos^2 - p_neg^2`.
pub fn gini(count_pos: usize, count_neg: usize) -> Result<f64, TreeError> {
    let total = count_pos + count_neg;
    if total == 0 {
        return Err(TreeError::EmptyNode);
    }
    let p = count_pos as f64 / total as f64;
    let q = count_neg as f64 / total as f64;
    Ok(1.0 - p * p - q * q)
}

/// The best split of a set of rows: feature, threshold and weighted Gini
/// decrease. Candidates are midpoints of consecutive distinct sorted values;
/// both children must keep at least `min_samples_leaf` rows. Ties go to the
/// lower feature index, then the lower threshold.
pub(crate) fn best_split(
    x: &Matrix,
    y: &[u8],
    rows: &[usize],
    min_samples_leaf: usize,
) -> Option<(usize, f64, f64)> {
    let n = rows.len();
    let pos = rows.iter().filter(|&&r| y[r] == 1).count();
    let parent = gini(pos, n - pos).ok()?;
    let mut best: Option<(usize, f64, f64)> = None;

    let mut column: Vec<(f64, u8)> = Vec::with_capacity(n);
    for feature in 0..x.cols() {
        column.clear();
        column.extend(rows.iter().map(|&r| (x.get(r, feature), y[r])));
        column.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));

        let mut left_pos = 0usize;
        let mut left_n = 0usize;
        for i in 0..n - 1 {
            left_pos += usize::from(column[i].1 == 1);
            left_n += 1;
            if column[i].0 == column[i + 1].0 {
                continue;
            }
            let right_n = n - left_n;
            if left_n < min_samples_leaf || right_n < min_samples_leaf {
                continue;
            }
            let right_pos = pos - left_pos;
            let gl = gini(left_pos, left_n - left_pos).expect("non-empty child");
            let gr = gini(right_pos, right_n - right_pos).expect("non-empty child");
            let decrease =
                parent - (left_n as f64 / n as f64) * gl - (right_n as f64 / n as f64) * gr;
            let threshold = 0.5 * (column[i].0 + column[i + 1].0);
            // Strict improvement keeps the first (lowest feature, lowest
            // threshold) candidate on exact ties.
            if best.map_or(true, |(_, _, d)| decrease > d) {
                best = Some((feature, threshold, decrease));
            }
        }
    }
    best
}

fn grow(x: &Matrix, y: &[u8], rows: &[usize], hyper: &TreeHyper, depth: usize) -> TreeNode {
    let n = rows.len();
    let pos = rows.iter().filter(|&&r| y[r] == 1).count();
    let leaf = TreeNode::Leaf { probability: pos as f64 / n as f64, samples: n };
    if pos == 0 || pos == n || depth >= hyper.max_depth || n < 2 * hyper.min_samples_leaf {
        return leaf;
    }
    let Some((feature, threshold, decrease)) = best_split(x, y, rows, hyper.min_samples_leaf)
    else {
        return leaf;
    };
    if decrease < hyper.min_impurity_decrease {
        return leaf;
    }
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
        rows.iter().partition(|&&r| x.get(r, feature) <= threshold);
    TreeNode::Split {
        feature,
        threshold,
        left: Box::new(grow(x, y, &left_rows, hyper, depth + 1)),
        right: Box::new(grow(x, y, &right_rows, hyper, depth + 1)),
    }
}

/// Greedy CART fit. Degenerate input (pure labels, too few rows, constant
/// features) yields a single leaf.
pub fn fit_tree(x: &Matrix, y: &[u8], hyper: &TreeHyper) -> TreeNode {
    assert!(x.rows() >= 1, "need at least one sample");
    assert_eq!(x.rows(), y.len(), "row/label count mismatch");
    let rows: Vec<usize> = (0..x.rows()).collect();
    grow(x, y, &rows, hyper, 0)
}

/// Leaf probability for one row.
pub fn predict_tree_row(tree: &TreeNode, row: &[f64]) -> f64 {
    match tree {
        TreeNode::Leaf { probability, .. } => *probability,
        TreeNode::Split { feature, threshold, left, right } => {
            if row[*feature] <= *threshold {
                predict_tree_row(left, row)
            } else {
                predict_tree_row(right, row)
            }
        }
    }
}

/// Routes every row to a leaf; label 1 iff leaf probability >= 0.5.
pub fn predict_tree(tree: &TreeNode, x: &Matrix) -> Result<(Vec<f64>, Vec<u8>), TreeError> {
    let need = tree.required_dim();
    if x.cols() < need {
        return Err(TreeError::DimensionMismatch { expected: need, got: x.cols() });
    }
    let mut probs = Vec::with_capacity(x.rows());
    let mut labels = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let p = predict_tree_row(tree, x.row(r));
        probs.push(p);
        labels.push(u8::from(p >= 0.5));
    }
    Ok((probs, labels))
}
