use notobot_core::corpus::encode_corpus;
use notobot_core::models::charcnn::charcnn_train;
use notobot_core::models::eval::split_indices;
use notobot_core::models::logreg::{log_likelihood, logreg_train};
use notobot_core::models::svm::{svm_objective, svm_train};
use notobot_core::models::tree::{dtree_fit, dtree_predict};
use notobot_core::models::{
    evaluate, gini_impurity, CharCnnConfig, Classifier, ConvSpec, EvalConfig, LabeledExample,
    LogRegConfig, LogRegParams, ModelError, ModelSpec, SvmConfig, SvmParams, Trainer, TreeConfig,
};
use notobot_core::synth::{synthetic_corpus, CorpusMix};
use notobot_core::text::{EncodedText, TextEncoder};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ex(x: &[f64], y: u8) -> LabeledExample {
    LabeledExample::from_features(x.to_vec(), y)
}

fn random_dataset(seed: u64, n: usize, p: usize) -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            ex(&x, rng.gen_range(0..=1))
        })
        .collect()
}

#[test]
fn logreg_examples() {
    let pair = [ex(&[-1.0], 0), ex(&[1.0], 1)];
    let t = logreg_train(&pair, &LogRegConfig { lr: 0.1, epochs: 200 }).unwrap();
    for e in &pair {
        assert_eq!(u8::from(t.params.predict_proba(e.features()).unwrap() >= 0.5), e.label);
    }

    let ones = [ex(&[0.3, -0.2], 1), ex(&[-0.7, 0.1], 1), ex(&[0.0, 0.9], 1)];
    let t = logreg_train(&ones, &LogRegConfig::default()).unwrap();
    for e in &ones {
        assert!(t.params.predict_proba(e.features()).unwrap() > 0.5);
    }

    let zero = LogRegParams::zeros(3);
    assert_eq!(zero.predict_proba(&[4.0, -1.0, 2.0]).unwrap(), 0.5);
    let aligned = LogRegParams {
        theta: vec![10.0, 10.0, 0.0],
    };
    let p = aligned.predict_proba(&[1.0, 1.0]).unwrap();
    assert!(p >= 0.99);
    let q = aligned.likelihood(&[1.0, 1.0], 0).unwrap();
    assert!((p + q - 1.0).abs() < 1e-15);
    assert!(matches!(
        aligned.predict_proba(&[1.0]),
        Err(ModelError::DimensionMismatch { .. })
    ));
}

#[test]
fn tree_examples_through_predict() {
    let single = [ex(&[1.0], 1), ex(&[2.0], 1)];
    let t = dtree_fit(&single, &TreeConfig::default()).unwrap();
    assert_eq!(t.leaf_count(), 1);

    let line = [ex(&[0.0], 0), ex(&[1.0], 1)];
    let t = dtree_fit(&line, &TreeConfig::default()).unwrap();
    assert_eq!(t.depth(), 1);
    for e in &line {
        let x = EncodedText {
            features: e.features().to_vec(),
            ..e.encoded.clone()
        };
        assert_eq!(dtree_predict(&t, &x).unwrap().0, usize::from(e.label));
    }

    let xor = [
        ex(&[0.0, 0.0], 0),
        ex(&[0.0, 1.0], 1),
        ex(&[1.0, 0.0], 1),
        ex(&[1.0, 1.0], 0),
    ];
    let t = dtree_fit(&xor, &TreeConfig { max_depth: 2, min_leaf: 1 }).unwrap();
    for e in &xor {
        assert_eq!(t.predict_features(e.features()).unwrap().0, usize::from(e.label));
    }
}

#[test]
fn gini_is_maximal_at_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for k in 2..=6 {
        let uniform = vec![1.0 / k as f64; k];
        let top = gini_impurity(&uniform).unwrap();
        assert!((top - (1.0 - 1.0 / k as f64)).abs() < 1e-12);
        for _ in 0..200 {
            let raw: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|v| v / s).collect();
            let g = gini_impurity(&p).unwrap();
            assert!((0.0..1.0).contains(&g));
            assert!(g <= top + 1e-12);
        }
    }
}

#[test]
fn svm_objective_does_not_grow() {
    for seed in 0..10 {
        let data = random_dataset(seed, 40, 5);
        let t = svm_train(&data, &SvmConfig::default()).unwrap();
        let start = svm_objective(&SvmParams::zeros(5, 0.01), &data).unwrap();
        assert!(svm_objective(&t.params, &data).unwrap() <= start);
        assert!(t.params.is_finite());
    }
}

#[test]
fn every_model_trains_to_finite_parameters() {
    let enc = TextEncoder::default();
    let items = synthetic_corpus(60, &CorpusMix::default(), 1);
    let data = encode_corpus(&items, &enc);
    for mut spec in ModelSpec::all_defaults() {
        if let ModelSpec::Charcnn(c) = &mut spec {
            c.epochs = 2;
        }
        let model = spec.train(&data, 3).unwrap();
        assert!(model.all_finite(), "{}", spec.name());
        let p = model.predict_proba(&data[0].encoded).unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
}

fn smok_corpus(len: usize) -> Vec<LabeledExample> {
    let enc = TextEncoder::new(Default::default(), len, 64);
    let pos = [
        "smoking now", "i smoke", "smoky bar", "smoke break", "we smoked", "smok3 up",
        "go smoke", "smoker life", "smokes", "smokin",
    ];
    let neg = [
        "small talk", "some more", "mock trial", "no smog", "so moky", "snow ok",
        "mask up", "smile", "joke time", "stroke",
    ];
    pos.iter()
        .map(|t| LabeledExample::new(enc.encode(t), 1))
        .chain(neg.iter().map(|t| LabeledExample::new(enc.encode(t), 0)))
        .collect()
}

#[test]
fn charcnn_fits_substring_rule() {
    let data = smok_corpus(16);
    let cfg = CharCnnConfig {
        embed_dim: 8,
        convs: vec![
            ConvSpec {
                filters: 16,
                width: 4,
                stride: 1,
            },
            ConvSpec {
                filters: 8,
                width: 2,
                stride: 1,
            },
        ],
        lr: 0.2,
        epochs: 300,
        batch_size: 4,
        shuffle: true,
    };
    let t = charcnn_train(&data, &cfg, 5).unwrap();
    for e in &data {
        let p = t.params.predict_proba(&e.encoded.onehot).unwrap();
        assert_eq!(u8::from(p >= 0.5), e.label, "p = {p}");
    }
}

#[test]
fn charcnn_is_order_free_without_shuffling() {
    let data = smok_corpus(12);
    let cfg = CharCnnConfig {
        embed_dim: 4,
        convs: vec![
            ConvSpec {
                filters: 6,
                width: 3,
                stride: 1,
            },
            ConvSpec {
                filters: 4,
                width: 2,
                stride: 1,
            },
        ],
        lr: 0.1,
        epochs: 10,
        batch_size: data.len(),
        shuffle: false,
    };
    let a = charcnn_train(&data, &cfg, 8).unwrap();
    assert_eq!(a, charcnn_train(&data, &cfg, 8).unwrap());
    let mut reversed = data.clone();
    reversed.reverse();
    let b = charcnn_train(&reversed, &cfg, 8).unwrap();
    // Full-batch steps only differ by summation order.
    for (x, y) in a.params.to_flat().iter().zip(b.params.to_flat()) {
        assert!((x - y).abs() < 1e-9);
    }
}

/// Predicts the opposite of the wrapped model.
struct Flipped<'a>(&'a dyn Trainer);
struct FlippedModel(Box<dyn Classifier>);
impl Classifier for FlippedModel {
    fn predict_proba(&self, x: &EncodedText) -> Result<f64, ModelError> {
        self.0.predict_proba(x)
    }
    fn predict(&self, x: &EncodedText) -> Result<u8, ModelError> {
        Ok(1 - self.0.predict(x)?)
    }
}
impl Trainer for Flipped<'_> {
    fn name(&self) -> String {
        format!("not {}", self.0.name())
    }
    fn fit(&self, train: &[LabeledExample], seed: u64) -> Result<Box<dyn Classifier>, ModelError> {
        Ok(Box::new(FlippedModel(self.0.fit(train, seed)?)))
    }
}

#[test]
fn flipped_model_has_complementary_accuracy() {
    let data = encode_corpus(&synthetic_corpus(200, &CorpusMix::default(), 2), &TextEncoder::default());
    let spec = ModelSpec::Logreg(LogRegConfig { lr: 1.0, epochs: 100 });
    let cfg = EvalConfig::default();
    let base = evaluate(&spec, &data, &cfg).unwrap();
    let flipped = evaluate(&Flipped(&spec), &data, &cfg).unwrap();
    for (a, b) in base.runs.iter().zip(&flipped.runs) {
        assert!((a.accuracy + b.accuracy - 1.0).abs() < 1e-12);
    }
}

#[test]
fn evaluation_is_bitwise_reproducible() {
    let data = encode_corpus(&synthetic_corpus(120, &CorpusMix::default(), 3), &TextEncoder::default());
    let spec = ModelSpec::Svm(SvmConfig::default());
    let cfg = EvalConfig {
        n_runs: 10,
        split: 0.7,
        seed: 77,
    };
    let a = evaluate(&spec, &data, &cfg).unwrap();
    let b = evaluate(&spec, &data, &cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let (train, test) = split_indices(data.len(), 0.7, 77, 0);
    assert_eq!((train.len(), test.len()), (84, 36));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn logreg_likelihood_never_drops(seed in any::<u64>(), n in 5usize..60, p in 1usize..8) {
        let data = random_dataset(seed, n, p);
        let t = logreg_train(&data, &LogRegConfig { lr: 1e-3, epochs: 100 }).unwrap();
        for w in t.history.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
        let last = log_likelihood(&t.params, &data).unwrap();
        prop_assert!((last - t.history.last().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn deep_tree_fits_distinct_rows(rows in prop::collection::btree_set((0i8..20, 0i8..20), 1..40),
                                    labels in prop::collection::vec(0u8..2, 40)) {
        let data: Vec<LabeledExample> = rows
            .iter()
            .zip(&labels)
            .map(|((a, b), y)| ex(&[f64::from(*a), f64::from(*b)], *y))
            .collect();
        let t = dtree_fit(&data, &TreeConfig { max_depth: data.len(), min_leaf: 1 }).unwrap();
        for e in &data {
            prop_assert_eq!(t.predict_features(e.features()).unwrap().0, usize::from(e.label));
        }
    }
}
