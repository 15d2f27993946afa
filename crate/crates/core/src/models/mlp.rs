use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_dim, check_labels, logit_cross_entropy, sigmoid, sparse_rows, LabeledExample, ModelError,
    Trained,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            lr: 0.05,
            epochs: 50,
        }
    }
}

/// One hidden ReLU layer followed by a sigmoid output unit.
///
/// `w1` is `hidden x inputs`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub inputs: usize,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpParams {
    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        Self {
            inputs,
            hidden,
            w1: vec![0.0; hidden * inputs],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    /// Weights drawn from uniform(-0.1, 0.1); biases start at zero.
    pub fn init(inputs: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(inputs, hidden);
        p.w1.iter_mut().for_each(|w| *w = rng.gen_range(-0.1..0.1));
        p.w2.iter_mut().for_each(|w| *w = rng.gen_range(-0.1..0.1));
        p
    }

    pub fn is_finite(&self) -> bool {
        self.b2.is_finite()
            && self.w1.iter().chain(&self.b1).chain(&self.w2).all(|v| v.is_finite())
    }

    /// Parameters flattened as `w1, b1, w2, b2`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.w1.len() + 2 * self.hidden + 1);
        v.extend_from_slice(&self.w1);
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(&self.w2);
        v.push(self.b2);
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.w1.len() + 2 * self.hidden + 1);
        let (w1, rest) = flat.split_at(self.w1.len());
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, rest) = rest.split_at(self.hidden);
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2 = rest[0];
    }

    fn hidden_from_sparse(&self, row: &[(usize, f64)], out: &mut [f64]) {
        for (j, h) in out.iter_mut().enumerate() {
            let w = &self.w1[j * self.inputs..(j + 1) * self.inputs];
            *h = (self.b1[j] + row.iter().map(|(i, v)| w[*i] * v).sum::<f64>()).max(0.0);
        }
    }

    fn output_logit(&self, hidden: &[f64]) -> f64 {
        self.b2 + self.w2.iter().zip(hidden).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn logit(&self, x: &[f64]) -> Result<f64, ModelError> {
        check_dim(self.inputs, x.len())?;
        let row: Vec<(usize, f64)> = x
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .collect();
        let mut h = vec![0.0; self.hidden];
        self.hidden_from_sparse(&row, &mut h);
        Ok(self.output_logit(&h))
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.logit(x).map(sigmoid)
    }
}

/// Mean binary cross-entropy over `data`.
pub fn mlp_loss(params: &MlpParams, data: &[LabeledExample]) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for e in data {
        total += logit_cross_entropy(params.logit(e.features())?, f64::from(e.label));
    }
    Ok(total / data.len() as f64)
}

/// Mean loss and its gradient by backpropagation, shaped like the params.
pub fn mlp_loss_and_grad(
    params: &MlpParams,
    data: &[LabeledExample],
) -> Result<(f64, MlpParams), ModelError> {
    check_labels(data)?;
    for e in data {
        check_dim(params.inputs, e.features().len())?;
    }
    let rows = sparse_rows(data);
    Ok(backprop(params, &rows, data))
}

fn backprop(
    params: &MlpParams,
    rows: &[Vec<(usize, f64)>],
    data: &[LabeledExample],
) -> (f64, MlpParams) {
    let n = data.len() as f64;
    let mut grad = MlpParams::zeros(params.inputs, params.hidden);
    let mut h = vec![0.0; params.hidden];
    let mut loss = 0.0;
    for (row, e) in rows.iter().zip(data) {
        params.hidden_from_sparse(row, &mut h);
        let z = params.output_logit(&h);
        let y = f64::from(e.label);
        loss += logit_cross_entropy(z, y);
        let dz = (sigmoid(z) - y) / n;
        grad.b2 += dz;
        for j in 0..params.hidden {
            grad.w2[j] += dz * h[j];
            if h[j] > 0.0 {
                let dh = dz * params.w2[j];
                grad.b1[j] += dh;
                let gw = &mut grad.w1[j * params.inputs..(j + 1) * params.inputs];
                for (i, v) in row {
                    gw[*i] += dh * v;
                }
            }
        }
    }
    (loss / n, grad)
}

/// Full-batch gradient descent on the cross-entropy.
///
/// History holds the mean training loss at initialization and after each
/// epoch.
pub fn mlp_train(
    data: &[LabeledExample],
    config: &MlpConfig,
    seed: u64,
) -> Result<Trained<MlpParams>, ModelError> {
    check_labels(data)?;
    if config.hidden == 0 {
        return Err(ModelError::InvalidConfig("hidden layer needs at least one unit".into()));
    }
    if !(config.lr > 0.0) {
        return Err(ModelError::InvalidConfig("learning rate must be positive".into()));
    }
    let inputs = data[0].features().len();
    for e in data {
        check_dim(inputs, e.features().len())?;
    }
    let rows = sparse_rows(data);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = MlpParams::init(inputs, config.hidden, &mut rng);
    let mut history = Vec::with_capacity(config.epochs + 1);
    for epoch in 0..config.epochs {
        let (loss, grad) = backprop(&params, &rows, data);
        if !loss.is_finite() {
            return Err(ModelError::NonFiniteLoss { epoch });
        }
        history.push(loss);
        for (p, g) in params.w1.iter_mut().zip(&grad.w1) {
            *p -= config.lr * g;
        }
        for (p, g) in params.b1.iter_mut().zip(&grad.b1) {
            *p -= config.lr * g;
        }
        for (p, g) in params.w2.iter_mut().zip(&grad.w2) {
            *p -= config.lr * g;
        }
        params.b2 -= config.lr * grad.b2;
    }
    let final_loss = mlp_loss(&params, data)?;
    if !final_loss.is_finite() || !params.is_finite() {
        return Err(ModelError::NonFiniteLoss { epoch: config.epochs });
    }
    history.push(final_loss);
    Ok(Trained { params, history })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> Vec<LabeledExample> {
        [([0.0, 0.0], 0), ([0.0, 1.0], 1), ([1.0, 0.0], 1), ([1.0, 1.0], 0)]
            .iter()
            .map(|(x, y)| LabeledExample::from_features(x.to_vec(), *y))
            .collect()
    }

    #[test]
    fn learns_xor() {
        let data = xor();
        let cfg = MlpConfig {
            hidden: 4,
            lr: 0.5,
            epochs: 5000,
        };
        let t = mlp_train(&data, &cfg, 7).unwrap();
        for e in &data {
            let p = t.params.predict_proba(e.features()).unwrap();
            assert_eq!(u8::from(p >= 0.5), e.label, "p = {p}");
        }
        assert!(t.history.last().unwrap() < &t.history[0]);
    }

    #[test]
    fn zero_input_depends_only_on_biases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = MlpParams::init(3, 5, &mut rng);
        p.b1 = vec![0.3, -0.2, 0.1, 0.0, 0.5];
        p.b2 = -0.4;
        let expected = sigmoid(
            p.b2 + p.w2.iter().zip(&p.b1).map(|(w, b)| w * b.max(0.0)).sum::<f64>(),
        );
        let got = p.predict_proba(&[0.0; 3]).unwrap();
        assert!((got - expected).abs() < 1e-15);
        // Changing W1 leaves a zero input unaffected.
        p.w1.iter_mut().for_each(|w| *w += 1.0);
        assert!((p.predict_proba(&[0.0; 3]).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn flat_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = MlpParams::init(4, 3, &mut rng);
        let mut q = MlpParams::zeros(4, 3);
        q.set_flat(&p.to_flat());
        assert_eq!(p, q);
    }

    #[test]
    fn errors() {
        assert_eq!(
            mlp_train(&[], &MlpConfig::default(), 0).unwrap_err(),
            ModelError::EmptyDataset
        );
        let cfg = MlpConfig {
            hidden: 0,
            ..MlpConfig::default()
        };
        assert!(matches!(mlp_train(&xor(), &cfg, 0), Err(ModelError::InvalidConfig(_))));
        let p = MlpParams::zeros(2, 2);
        assert!(matches!(p.predict_proba(&[1.0]), Err(ModelError::DimensionMismatch { .. })));
    }

    #[test]
    fn same_seed_same_weights() {
        let cfg = MlpConfig {
            hidden: 3,
            lr: 0.1,
            epochs: 20,
        };
        let a = mlp_train(&xor(), &cfg, 9).unwrap();
        let b = mlp_train(&xor(), &cfg, 9).unwrap();
        assert_eq!(a, b);
    }
}
