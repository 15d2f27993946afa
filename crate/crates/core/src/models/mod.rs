//! From-scratch binary classifiers for pro-tobacco text detection.
//!
//! Every model trains with plain (sub)gradient descent or greedy splitting
//! and exposes a probability through [`Classifier`]. Label `1` is the
//! pro-tobacco class.

pub mod charcnn;
pub mod checkpoint;
pub mod conv;
pub mod eval;
pub mod logreg;
pub mod mlp;
pub mod svm;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::text::{EncodedText, OneHot};

pub use charcnn::{CharCnnConfig, CharCnnParams, ConvSpec};
pub use checkpoint::{Checkpoint, CheckpointError};
pub use conv::{temporal_conv, ConvLayer};
pub use eval::{evaluate, EvalConfig, EvalReport, RunMetrics, Trainer};
pub use logreg::{LogRegConfig, LogRegParams};
pub use mlp::{MlpConfig, MlpParams};
pub use svm::{SvmConfig, SvmParams};
pub use tree::{gini_impurity, DecisionTree, TreeConfig, TreeNode};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("objective became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid class distribution: {0}")]
    InvalidDistribution(String),
    #[error("input length {len} is shorter than kernel width {width}")]
    InputTooShort { len: usize, width: usize },
    #[error("corpus has {0} examples, at least 10 are required")]
    CorpusTooSmall(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("label {0} is not 0 or 1")]
    InvalidLabel(u8),
}

/// An encoded text with its binary label (`1` = pro-tobacco).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub encoded: EncodedText,
    pub label: u8,
}

impl LabeledExample {
    pub fn new(encoded: EncodedText, label: u8) -> Self {
        Self { encoded, label }
    }

    /// Example carrying only a dense feature vector; used by the classical
    /// models and in tests.
    pub fn from_features(features: Vec<f64>, label: u8) -> Self {
        Self {
            encoded: EncodedText {
                onehot: OneHot::from_columns(0, Vec::new()),
                features,
                source_len: 0,
            },
            label,
        }
    }

    pub fn features(&self) -> &[f64] {
        &self.encoded.features
    }

    /// Label in `{-1, +1}`.
    pub fn signed_label(&self) -> f64 {
        2.0 * f64::from(self.label) - 1.0
    }
}

/// Trained parameters plus the objective recorded at initialization
/// (`history[0]`) and after every epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trained<P> {
    pub params: P,
    pub history: Vec<f64>,
}

/// Anything that yields `Pr(y = 1 | x)`.
pub trait Classifier: Send + Sync {
    fn predict_proba(&self, x: &EncodedText) -> Result<f64, ModelError>;

    /// Hard decision at the 0.5 threshold.
    fn predict(&self, x: &EncodedText) -> Result<u8, ModelError> {
        Ok(u8::from(self.predict_proba(x)? >= 0.5))
    }
}

/// Logistic function, stable for large `|z|`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn relu(z: f64) -> f64 {
    z.max(0.0)
}

pub fn relu_slice(z: &mut [f64]) {
    z.iter_mut().for_each(|v| *v = v.max(0.0));
}

/// Binary cross-entropy of a logit, `-ln Pr(y | z)`.
pub fn logit_cross_entropy(z: f64, y: f64) -> f64 {
    softplus(z) - y * z
}

pub(crate) fn check_labels(data: &[LabeledExample]) -> Result<(), ModelError> {
    if data.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    match data.iter().find(|e| e.label > 1) {
        Some(e) => Err(ModelError::InvalidLabel(e.label)),
        None => Ok(()),
    }
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<(), ModelError> {
    if expected == actual {
        Ok(())
    } else {
        Err(ModelError::DimensionMismatch { expected, actual })
    }
}

/// Sparse view of each example's feature vector.
pub(crate) fn sparse_rows(data: &[LabeledExample]) -> Vec<Vec<(usize, f64)>> {
    data.iter()
        .map(|e| {
            e.features()
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect()
        })
        .collect()
}

/// Which classifier to train, with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Logreg(LogRegConfig),
    Dtree(TreeConfig),
    Svm(SvmConfig),
    Mlp(MlpConfig),
    Charcnn(CharCnnConfig),
}

impl ModelSpec {
    /// Spec with default hyperparameters for a CLI model name.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "logreg" => Self::Logreg(LogRegConfig::default()),
            "dtree" => Self::Dtree(TreeConfig::default()),
            "svm" => Self::Svm(SvmConfig::default()),
            "mlp" => Self::Mlp(MlpConfig::default()),
            "charcnn" => Self::Charcnn(CharCnnConfig::default()),
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Logreg(_) => "logreg",
            Self::Dtree(_) => "dtree",
            Self::Svm(_) => "svm",
            Self::Mlp(_) => "mlp",
            Self::Charcnn(_) => "charcnn",
        }
    }

    /// Row label used in accuracy tables.
    pub fn display_name(&self) -> &'static str {
        match self {
            Self::Logreg(_) => "Logistic Regression",
            Self::Dtree(_) => "Decision Tree",
            Self::Svm(_) => "SVM",
            Self::Mlp(_) => "MLP",
            Self::Charcnn(_) => "Char-CNN",
        }
    }

    pub fn all_defaults() -> Vec<Self> {
        ["logreg", "dtree", "svm", "mlp", "charcnn"]
            .into_iter()
            .filter_map(Self::from_name)
            .collect()
    }

    pub fn train(&self, data: &[LabeledExample], seed: u64) -> Result<TrainedModel, ModelError> {
        Ok(match self {
            Self::Logreg(c) => TrainedModel::Logreg(logreg::logreg_train(data, c)?.params),
            Self::Dtree(c) => TrainedModel::Dtree(tree::dtree_fit(data, c)?),
            Self::Svm(c) => TrainedModel::Svm(svm::svm_train(data, c)?.params),
            Self::Mlp(c) => TrainedModel::Mlp(mlp::mlp_train(data, c, seed)?.params),
            Self::Charcnn(c) => TrainedModel::Charcnn(charcnn::charcnn_train(data, c, seed)?.params),
        })
    }
}

impl Trainer for ModelSpec {
    fn name(&self) -> String {
        self.display_name().to_string()
    }

    fn fit(&self, train: &[LabeledExample], seed: u64) -> Result<Box<dyn Classifier>, ModelError> {
        Ok(Box::new(self.train(train, seed)?))
    }
}

/// Parameters of any trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum TrainedModel {
    Logreg(LogRegParams),
    Dtree(DecisionTree),
    Svm(SvmParams),
    Mlp(MlpParams),
    Charcnn(CharCnnParams),
}

impl TrainedModel {
    pub fn all_finite(&self) -> bool {
        match self {
            Self::Logreg(p) => p.theta.iter().all(|v| v.is_finite()),
            Self::Dtree(t) => t.all_finite(),
            Self::Svm(p) => p.is_finite(),
            Self::Mlp(p) => p.is_finite(),
            Self::Charcnn(p) => p.is_finite(),
        }
    }
}

impl Classifier for TrainedModel {
    fn predict_proba(&self, x: &EncodedText) -> Result<f64, ModelError> {
        match self {
            Self::Logreg(p) => p.predict_proba(&x.features),
            Self::Dtree(t) => Ok(t.predict_features(&x.features)?.1[1]),
            // Margin squashed through the logistic; >= 0.5 iff margin >= 0,
            // consistent with the +1 tie-break on the hyperplane.
            Self::Svm(p) => Ok(sigmoid(p.predict(&x.features)?.1)),
            Self::Mlp(p) => p.predict_proba(&x.features),
            Self::Charcnn(p) => p.predict_proba(&x.onehot),
        }
    }
}
