//! Repeated random train/test splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Classifier, LabeledExample, ModelError};

/// Produces a fitted classifier from a training split.
pub trait Trainer: Sync {
    fn name(&self) -> String;
    fn fit(&self, train: &[LabeledExample], seed: u64) -> Result<Box<dyn Classifier>, ModelError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub n_runs: usize,
    /// Fraction of the corpus used for training.
    pub split: f64,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_runs: 10,
            split: 0.7,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub run: usize,
    pub accuracy: f64,
    /// Test recall of the positive class; 1.0 when the test split has no
    /// positives.
    pub recall: f64,
    pub train_accuracy: f64,
    pub train_recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub mean_accuracy: f64,
    /// Population standard deviation of the per-run test accuracy.
    pub std_accuracy: f64,
    pub mean_recall: f64,
    pub mean_train_recall: f64,
    pub n_runs: usize,
    pub runs: Vec<RunMetrics>,
}

/// Deterministic per-run seed derived from the evaluation seed.
pub fn run_seed(seed: u64, run: usize) -> u64 {
    // splitmix64 step
    let mut z = seed.wrapping_add((run as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Shuffled `(train, test)` index sets for one run. Both sides are
/// non-empty for `n >= 2`.
pub fn split_indices(n: usize, split: f64, seed: u64, run: usize) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed(seed, run));
    idx.shuffle(&mut rng);
    let n_train = ((n as f64 * split).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    let test = idx.split_off(n_train);
    (idx, test)
}

fn score(model: &dyn Classifier, data: &[LabeledExample], idx: &[usize]) -> Result<(f64, f64), ModelError> {
    let (mut correct, mut tp, mut pos) = (0usize, 0usize, 0usize);
    for &i in idx {
        let e = &data[i];
        let pred = model.predict(&e.encoded)?;
        correct += usize::from(pred == e.label);
        if e.label == 1 {
            pos += 1;
            tp += usize::from(pred == 1);
        }
    }
    let acc = correct as f64 / idx.len() as f64;
    let recall = if pos == 0 { 1.0 } else { tp as f64 / pos as f64 };
    Ok((acc, recall))
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Trains and scores `trainer` on `n_runs` independent seeded splits.
///
/// Runs are independent and may execute in parallel; results are ordered
/// by run index, so the report is identical for a fixed seed.
pub fn evaluate(
    trainer: &dyn Trainer,
    corpus: &[LabeledExample],
    config: &EvalConfig,
) -> Result<EvalReport, ModelError> {
    if corpus.len() < 10 {
        return Err(ModelError::CorpusTooSmall(corpus.len()));
    }
    if !(config.split > 0.0 && config.split < 1.0) {
        return Err(ModelError::InvalidConfig(format!(
            "split must be in (0, 1), got {}",
            config.split
        )));
    }
    if config.n_runs == 0 {
        return Err(ModelError::InvalidConfig("need at least one run".into()));
    }
    let runs: Vec<RunMetrics> = (0..config.n_runs)
        .into_par_iter()
        .map(|run| {
            let (train_idx, test_idx) = split_indices(corpus.len(), config.split, config.seed, run);
            let train: Vec<LabeledExample> = train_idx.iter().map(|&i| corpus[i].clone()).collect();
            let model = trainer.fit(&train, run_seed(config.seed ^ 0x5eed, run))?;
            let (accuracy, recall) = score(model.as_ref(), corpus, &test_idx)?;
            let (train_accuracy, train_recall) = score(model.as_ref(), corpus, &train_idx)?;
            Ok(RunMetrics {
                run,
                accuracy,
                recall,
                train_accuracy,
                train_recall,
            })
        })
        .collect::<Result<_, ModelError>>()?;
    let (mean_accuracy, std_accuracy) = mean_std(runs.iter().map(|r| r.accuracy));
    let (mean_recall, _) = mean_std(runs.iter().map(|r| r.recall));
    let (mean_train_recall, _) = mean_std(runs.iter().map(|r| r.train_recall));
    Ok(EvalReport {
        model: trainer.name(),
        mean_accuracy,
        std_accuracy,
        mean_recall,
        mean_train_recall,
        n_runs: config.n_runs,
        runs,
    })
}

/// Fixed-width table with one row per report.
pub fn format_table(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<20} {:>9} {:>19} {:>8}\n",
        "Classifier", "Accuracy", "Standard Deviation", "Recall"
    ));
    out.push_str(&format!("{}\n", "-".repeat(59)));
    for r in reports {
        out.push_str(&format!(
            "{:<20} {:>9.4} {:>19.4} {:>8.4}\n",
            r.model, r.mean_accuracy, r.std_accuracy, r.mean_recall
        ));
    }
    out
}
