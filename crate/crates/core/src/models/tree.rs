//! Greedy CART classification trees split on Gini impurity.
//!
//! The same builder backs the binary tweet classifier and the multi-class
//! audience tree. Samples with `x[feature] <= threshold` go left.

use serde::{Deserialize, Serialize};

use super::{check_dim, check_labels, LabeledExample, ModelError};

const TIE_EPS: f64 = 1e-12;

/// `sum_i p_i (1 - p_i)` for a class distribution.
pub fn gini_impurity(probs: &[f64]) -> Result<f64, ModelError> {
    if probs.is_empty() {
        return Err(ModelError::InvalidDistribution("empty distribution".into()));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(ModelError::InvalidDistribution(format!("bad probability {p}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(ModelError::InvalidDistribution(format!("probabilities sum to {total}")));
    }
    Ok(probs.iter().map(|p| p * (1.0 - p)).sum())
}

fn gini_counts(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: 12,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        /// Dense id, assigned left-to-right over the leaves.
        leaf_id: usize,
        probs: Vec<f64>,
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        impurity: f64,
        samples: usize,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self, Self::Leaf { .. })
    }

    pub fn depth(&self) -> usize {
        match self {
            Self::Leaf { .. } => 0,
            Self::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Self::Leaf { .. } => 1,
            Self::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }
}

/// One decision taken while routing a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub feature: usize,
    pub threshold: f64,
    pub value: f64,
    /// `value <= threshold`, i.e. the sample went left.
    pub went_left: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub n_features: usize,
    pub n_classes: usize,
}

impl DecisionTree {
    /// Fits a tree on dense rows with class labels in `0..n_classes`.
    ///
    /// Splits minimize the sample-weighted child Gini impurity. Ties go to
    /// the lowest feature index, then the lowest threshold. A node becomes
    /// a leaf when it is pure, at `max_depth`, or when no split leaves
    /// `min_leaf` samples on both sides.
    pub fn fit(
        rows: &[&[f64]],
        labels: &[usize],
        n_classes: usize,
        config: &TreeConfig,
    ) -> Result<Self, ModelError> {
        if rows.is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        check_dim(rows.len(), labels.len())?;
        let n_features = rows[0].len();
        for r in rows {
            check_dim(n_features, r.len())?;
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(ModelError::InvalidConfig(format!(
                "label {bad} outside 0..{n_classes}"
            )));
        }
        let builder = Builder {
            rows,
            labels,
            n_classes,
            min_leaf: config.min_leaf.max(1),
            max_depth: config.max_depth,
        };
        let mut next_leaf = 0;
        let idx: Vec<usize> = (0..rows.len()).collect();
        let root = builder.grow(idx, 0, &mut next_leaf);
        Ok(Self {
            root,
            n_features,
            n_classes,
        })
    }

    fn leaf_node(&self, x: &[f64]) -> Result<&TreeNode, ModelError> {
        check_dim(self.n_features, x.len())?;
        let mut node = &self.root;
        while let TreeNode::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } = node
        {
            node = if x[*feature] <= *threshold { left } else { right };
        }
        Ok(node)
    }

    /// Predicted class (argmax, lowest index on ties) and the leaf distribution.
    pub fn predict_features(&self, x: &[f64]) -> Result<(usize, Vec<f64>), ModelError> {
        match self.leaf_node(x)? {
            TreeNode::Leaf { probs, .. } => {
                let mut best = 0;
                for (i, p) in probs.iter().enumerate() {
                    if *p > probs[best] {
                        best = i;
                    }
                }
                Ok((best, probs.clone()))
            }
            TreeNode::Split { .. } => unreachable!("routing ends at a leaf"),
        }
    }

    pub fn leaf_id(&self, x: &[f64]) -> Result<usize, ModelError> {
        match self.leaf_node(x)? {
            TreeNode::Leaf { leaf_id, .. } => Ok(*leaf_id),
            TreeNode::Split { .. } => unreachable!("routing ends at a leaf"),
        }
    }

    /// Decisions from the root to the leaf reached by `x`.
    pub fn path(&self, x: &[f64]) -> Result<Vec<PathStep>, ModelError> {
        check_dim(self.n_features, x.len())?;
        let mut steps = Vec::new();
        let mut node = &self.root;
        while let TreeNode::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } = node
        {
            let went_left = x[*feature] <= *threshold;
            steps.push(PathStep {
                feature: *feature,
                threshold: *threshold,
                value: x[*feature],
                went_left,
            });
            node = if went_left { left } else { right };
        }
        Ok(steps)
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn all_finite(&self) -> bool {
        fn walk(n: &TreeNode) -> bool {
            match n {
                TreeNode::Leaf { probs, .. } => probs.iter().all(|p| p.is_finite()),
                TreeNode::Split {
                    threshold,
                    left,
                    right,
                    ..
                } => threshold.is_finite() && walk(left) && walk(right),
            }
        }
        walk(&self.root)
    }
}

struct Builder<'a> {
    rows: &'a [&'a [f64]],
    labels: &'a [usize],
    n_classes: usize,
    min_leaf: usize,
    max_depth: usize,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &i in idx {
            c[self.labels[i]] += 1;
        }
        c
    }

    fn grow(&self, idx: Vec<usize>, depth: usize, next_leaf: &mut usize) -> TreeNode {
        let counts = self.counts(&idx);
        let impurity = gini_counts(&counts, idx.len());
        let split = if impurity > 0.0 && depth < self.max_depth && idx.len() >= 2 * self.min_leaf {
            self.best_split(&idx)
        } else {
            None
        };
        match split {
            Some(s) => {
                let (l, r): (Vec<usize>, Vec<usize>) = idx
                    .iter()
                    .partition(|&&i| self.rows[i][s.feature] <= s.threshold);
                let samples = idx.len();
                let left = Box::new(self.grow(l, depth + 1, next_leaf));
                let right = Box::new(self.grow(r, depth + 1, next_leaf));
                TreeNode::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    impurity,
                    samples,
                    left,
                    right,
                }
            }
            None => {
                let n = idx.len() as f64;
                let leaf_id = *next_leaf;
                *next_leaf += 1;
                TreeNode::Leaf {
                    leaf_id,
                    probs: counts.iter().map(|&c| c as f64 / n).collect(),
                    samples: idx.len(),
                }
            }
        }
    }

    fn best_split(&self, idx: &[usize]) -> Option<SplitChoice> {
        let n = idx.len();
        let total = self.counts(idx);
        let mut best: Option<SplitChoice> = None;
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);
        for feature in 0..self.rows[idx[0]].len() {
            sorted.clear();
            sorted.extend(idx.iter().map(|&i| (self.rows[i][feature], self.labels[i])));
            let first = sorted[0].0;
            if sorted.iter().all(|(v, _)| *v == first) {
                continue;
            }
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = vec![0usize; self.n_classes];
            for k in 0..n - 1 {
                left[sorted[k].1] += 1;
                let (lo, hi) = (sorted[k].0, sorted[k + 1].0);
                let n_left = k + 1;
                if lo == hi || n_left < self.min_leaf || n - n_left < self.min_leaf {
                    continue;
                }
                let score = weighted_gini(&left, &total, n_left, n);
                if best.as_ref().is_none_or(|b| score < b.score - TIE_EPS) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(SplitChoice {
                        feature,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }
}

fn weighted_gini(left: &[usize], total: &[usize], n_left: usize, n: usize) -> f64 {
    let n_right = n - n_left;
    let mut sq_l = 0.0;
    let mut sq_r = 0.0;
    for (l, t) in left.iter().zip(total) {
        let r = t - l;
        sq_l += (*l as f64).powi(2);
        sq_r += (r as f64).powi(2);
    }
    let gl = 1.0 - sq_l / (n_left as f64).powi(2);
    let gr = 1.0 - sq_r / (n_right as f64).powi(2);
    (n_left as f64 * gl + n_right as f64 * gr) / n as f64
}

/// Binary tweet tree over the dense feature vectors.
pub fn dtree_fit(data: &[LabeledExample], config: &TreeConfig) -> Result<DecisionTree, ModelError> {
    check_labels(data)?;
    let rows: Vec<&[f64]> = data.iter().map(|e| e.features()).collect();
    let labels: Vec<usize> = data.iter().map(|e| usize::from(e.label)).collect();
    DecisionTree::fit(&rows, &labels, 2, config)
}

/// Class and class distribution for one encoded text.
pub fn dtree_predict(
    tree: &DecisionTree,
    x: &crate::text::EncodedText,
) -> Result<(usize, Vec<f64>), ModelError> {
    tree.predict_features(&x.features)
}
