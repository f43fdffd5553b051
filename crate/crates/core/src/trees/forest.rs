//! Random forest over the CART implementation: bootstrapped rows and a
//! random feature subset per tree, majority vote across trees.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cart::{fit_tree, predict_tree_row, TreeHyper, TreeNode};
use super::TreeError;
use crate::matrix::Matrix;
use crate::rng::{derive, rng_from, Stream};

/// How many features each tree sees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FeatureSubset {
    /// `ceil(sqrt(d))` features.
    Sqrt,
    All,
    Fraction(f64),
}

impl FeatureSubset {
    fn count(&self, d: usize) -> usize {
        match self {
            FeatureSubset::Sqrt => (d as f64).sqrt().ceil() as usize,
            FeatureSubset::All => d,
            FeatureSubset::Fraction(f) => ((d as f64 * f).ceil() as usize).clamp(1, d),
        }
        .clamp(1, d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub subset: FeatureSubset,
    pub bootstrap: bool,
    pub tree: TreeHyper,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 100, subset: FeatureSubset::Sqrt, bootstrap: true, tree: TreeHyper::default() }
    }
}

/// Trees paired with the (sorted) feature indices they were fitted on.
#[derive(Clone, Debug, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<(TreeNode, Vec<usize>)>,
}

/// Fits `n_trees` independent trees; deterministic given the seed.
pub fn fit_random_forest(
    x: &Matrix,
    y: &[u8],
    config: &ForestConfig,
    seed: u64,
) -> Result<ForestModel, TreeError> {
    let pos = y.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(TreeError::SingleClassDataset);
    }
    assert!(config.n_trees >= 1, "forest needs at least one tree");
    let d = x.cols();
    let n = x.rows();
    let n_feats = config.subset.count(d);
    let mut trees = Vec::with_capacity(config.n_trees);
    for t in 0..config.n_trees {
        let mut rng = rng_from(derive(seed, Stream::Tree, t as u64));
        let rows: Vec<usize> = if config.bootstrap {
            (0..n).map(|_| rng.gen_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let feats: Vec<usize> = if n_feats == d {
            (0..d).collect()
        } else {
            // Partial Fisher-Yates draw without replacement, then sorted so
            // sub-matrix column order is stable.
            let mut pool: Vec<usize> = (0..d).collect();
            for i in 0..n_feats {
                let j = rng.gen_range(i..d);
                pool.swap(i, j);
            }
            let mut chosen = pool[..n_feats].to_vec();
            chosen.sort_unstable();
            chosen
        };
        let sub_x = x.select_rows(&rows).select_cols(&feats);
        let sub_y: Vec<u8> = rows.iter().map(|&r| y[r]).collect();
        trees.push((fit_tree(&sub_x, &sub_y, &config.tree), feats));
    }
    Ok(ForestModel { trees })
}

/// Majority vote over per-tree labels; the reported probability is the mean
/// of the per-tree leaf probabilities.
pub fn predict_forest(model: &ForestModel, x: &Matrix) -> Result<(Vec<f64>, Vec<u8>), TreeError> {
    for (tree, feats) in &model.trees {
        let local = tree.required_dim();
        let need = if local == 0 { 0 } else { feats[local - 1] + 1 };
        if x.cols() < need {
            return Err(TreeError::DimensionMismatch { expected: need, got: x.cols() });
        }
    }
    let n_trees = model.trees.len();
    let mut probs = Vec::with_capacity(x.rows());
    let mut labels = Vec::with_capacity(x.rows());
    let mut buf: Vec<f64> = Vec::new();
    for r in 0..x.rows() {
        let row = x.row(r);
        let mut votes = 0usize;
        let mut prob_sum = 0.0;
        for (tree, feats) in &model.trees {
            buf.clear();
            buf.extend(feats.iter().map(|&f| row[f]));
            let p = predict_tree_row(tree, &buf);
            prob_sum += p;
            votes += usize::from(p >= 0.5);
        }
        probs.push(prob_sum / n_trees as f64);
        labels.push(u8::from(2 * votes >= n_trees));
    }
    Ok((probs, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::cart::predict_tree;

    fn xor_data() -> (Matrix, Vec<u8>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..200 {
            let a = (i / 100) as f64;
            let b = ((i / 50) % 2) as f64;
            let jx = ((i * 13 % 23) as f64 / 23.0 - 0.5) * 0.4;
            let jy = ((i * 7 % 19) as f64 / 19.0 - 0.5) * 0.4;
            rows.push(vec![a + jx, b + jy]);
            labels.push(u8::from((a as i32 ^ b as i32) == 1));
        }
        (Matrix::from_rows(&rows), labels)
    }

    #[test]
    fn single_tree_no_bootstrap_reduces_to_fit_tree() {
        let (x, y) = xor_data();
        let config = ForestConfig {
            n_trees: 1,
            subset: FeatureSubset::All,
            bootstrap: false,
            tree: TreeHyper::default(),
        };
        let forest = fit_random_forest(&x, &y, &config, 5).unwrap();
        let plain = fit_tree(&x, &y, &TreeHyper::default());
        let (_, forest_labels) = predict_forest(&forest, &x).unwrap();
        let (_, tree_labels) = predict_tree(&plain, &x).unwrap();
        assert_eq!(forest_labels, tree_labels);
    }

    #[test]
    fn forest_solves_xor() {
        let (x, y) = xor_data();
        let forest = fit_random_forest(&x, &y, &ForestConfig::default(), 5).unwrap();
        let (_, labels) = predict_forest(&forest, &x).unwrap();
        let correct = labels.iter().zip(&y).filter(|(a, b)| a == b).count();
        assert!(correct as f64 / y.len() as f64 >= 0.95, "accuracy {}", correct);
    }

    #[test]
    fn deterministic_given_seed() {
        let (x, y) = xor_data();
        let a = fit_random_forest(&x, &y, &ForestConfig::default(), 7).unwrap();
        let b = fit_random_forest(&x, &y, &ForestConfig::default(), 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_rejected() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]);
        assert_eq!(
            fit_random_forest(&x, &[0, 0], &ForestConfig::default(), 1),
            Err(TreeError::SingleClassDataset)
        );
    }

    #[test]
    fn sqrt_subset_counts() {
        assert_eq!(FeatureSubset::Sqrt.count(2), 2);
        assert_eq!(FeatureSubset::Sqrt.count(9), 3);
        assert_eq!(FeatureSubset::Sqrt.count(64), 8);
        assert_eq!(FeatureSubset::Fraction(0.5).count(9), 5);
        assert_eq!(FeatureSubset::All.count(9), 9);
    }
}
