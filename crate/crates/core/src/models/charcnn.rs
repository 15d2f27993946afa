//! Character-level CNN: lookup embedding, stacked temporal convolutions with
//! ReLU, global max-over-time pooling and a sigmoid output unit.
//!
//! Each layer computes `x(l+1) = relu(W(l) * x(l))` with `*` the temporal
//! convolution from [`super::conv`].

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conv::{axpy, dot, ConvLayer};
use super::{check_labels, logit_cross_entropy, sigmoid, LabeledExample, ModelError, Trained};
use crate::text::OneHot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub filters: usize,
    pub width: usize,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CharCnnConfig {
    pub embed_dim: usize,
    pub convs: Vec<ConvSpec>,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Reshuffle the training order every epoch (seeded).
    pub shuffle: bool,
}

impl Default for CharCnnConfig {
    fn default() -> Self {
        Self {
            embed_dim: 16,
            convs: vec![
                ConvSpec {
                    filters: 64,
                    width: 7,
                    stride: 1,
                },
                ConvSpec {
                    filters: 64,
                    width: 3,
                    stride: 1,
                },
            ],
            lr: 0.05,
            epochs: 50,
            batch_size: 32,
            shuffle: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharCnnParams {
    pub alphabet_size: usize,
    pub seq_len: usize,
    pub embed_dim: usize,
    /// `alphabet_size x embed_dim`, row-major.
    pub embedding: Vec<f64>,
    pub convs: Vec<ConvLayer>,
    pub dense_w: Vec<f64>,
    pub dense_b: f64,
}

struct Forward {
    /// Embedded input, `len x embed_dim`.
    x0: Vec<f64>,
    /// Post-ReLU activations of each conv layer, position-major.
    acts: Vec<Vec<f64>>,
    argmax: Vec<usize>,
    pooled: Vec<f64>,
    logit: f64,
}

impl CharCnnParams {
    /// Architecture with every parameter zero.
    pub fn zeros(
        alphabet_size: usize,
        seq_len: usize,
        embed_dim: usize,
        convs: &[ConvSpec],
    ) -> Result<Self, ModelError> {
        if convs.is_empty() || embed_dim == 0 {
            return Err(ModelError::InvalidConfig(
                "need an embedding and at least one conv layer".into(),
            ));
        }
        let mut layers = Vec::with_capacity(convs.len());
        let mut channels = embed_dim;
        let mut len = seq_len;
        for c in convs {
            if c.filters == 0 || c.width == 0 || c.stride == 0 {
                return Err(ModelError::InvalidConfig("conv sizes must be positive".into()));
            }
            let layer = ConvLayer::zeros(channels, c.filters, c.width, c.stride);
            len = layer.output_len(len).ok_or(ModelError::InputTooShort {
                len,
                width: c.width,
            })?;
            channels = c.filters;
            layers.push(layer);
        }
        Ok(Self {
            alphabet_size,
            seq_len,
            embed_dim,
            embedding: vec![0.0; alphabet_size * embed_dim],
            convs: layers,
            dense_w: vec![0.0; channels],
            dense_b: 0.0,
        })
    }

    /// Seeded initialization: embedding uniform(-0.5, 0.5), conv kernels
    /// He-uniform, dense weights uniform(+-1/sqrt(channels)), zero biases.
    pub fn init(
        alphabet_size: usize,
        seq_len: usize,
        config: &CharCnnConfig,
        rng: &mut impl Rng,
    ) -> Result<Self, ModelError> {
        let mut p = Self::zeros(alphabet_size, seq_len, config.embed_dim, &config.convs)?;
        p.embedding.iter_mut().for_each(|v| *v = rng.gen_range(-0.5..0.5));
        for layer in &mut p.convs {
            let bound = (6.0 / (layer.width * layer.in_channels) as f64).sqrt();
            layer.weights.iter_mut().for_each(|v| *v = rng.gen_range(-bound..bound));
        }
        let bound = 1.0 / (p.dense_w.len() as f64).sqrt();
        p.dense_w.iter_mut().for_each(|v| *v = rng.gen_range(-bound..bound));
        Ok(p)
    }

    pub fn is_finite(&self) -> bool {
        self.dense_b.is_finite()
            && self.embedding.iter().chain(&self.dense_w).all(|v| v.is_finite())
            && self.convs.iter().all(ConvLayer::is_finite)
    }

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.clear();
        z
    }

    fn clear(&mut self) {
        self.embedding.fill(0.0);
        for l in &mut self.convs {
            l.weights.fill(0.0);
            l.bias.fill(0.0);
        }
        self.dense_w.fill(0.0);
        self.dense_b = 0.0;
    }

    /// Parameters flattened as embedding, then each layer's weights and
    /// bias, then the dense weights and bias.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.embedding.clone();
        for l in &self.convs {
            v.extend_from_slice(&l.weights);
            v.extend_from_slice(&l.bias);
        }
        v.extend_from_slice(&self.dense_w);
        v.push(self.dense_b);
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut rest = flat;
        let mut take = |dst: &mut [f64]| {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        };
        take(&mut self.embedding);
        for l in &mut self.convs {
            take(&mut l.weights);
            take(&mut l.bias);
        }
        take(&mut self.dense_w);
        let mut b = [0.0];
        take(&mut b);
        self.dense_b = b[0];
        assert!(rest.is_empty(), "flat parameter vector too long");
    }

    fn check_input(&self, x: &OneHot) -> Result<(), ModelError> {
        if x.rows() != self.alphabet_size {
            return Err(ModelError::DimensionMismatch {
                expected: self.alphabet_size,
                actual: x.rows(),
            });
        }
        if x.cols() != self.seq_len {
            return Err(ModelError::DimensionMismatch {
                expected: self.seq_len,
                actual: x.cols(),
            });
        }
        Ok(())
    }

    /// Number of input columns that influence the pooled output.
    ///
    /// With unit strides, every output position whose receptive field lies
    /// entirely in the trailing zero padding has the same value, so one
    /// such position stands in for all of them.
    fn effective_len(&self, x: &OneHot) -> usize {
        if self.convs.iter().any(|l| l.stride != 1) {
            return self.seq_len;
        }
        let field: usize = self.convs.iter().map(|l| l.width - 1).sum::<usize>() + 1;
        (x.occupied_len() + field).min(self.seq_len)
    }

    fn forward(&self, x: &OneHot, trim: bool) -> Forward {
        let len = if trim { self.effective_len(x) } else { self.seq_len };
        let e = self.embed_dim;
        let mut x0 = vec![0.0; len * e];
        for t in 0..len {
            if let Some(r) = x.hot(t) {
                x0[t * e..(t + 1) * e].copy_from_slice(&self.embedding[r * e..(r + 1) * e]);
            }
        }
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.convs.len());
        let mut cur_len = len;
        for layer in &self.convs {
            let input = acts.last().unwrap_or(&x0);
            let positions = layer.output_len(cur_len).expect("shape checked at construction");
            let mut out = Vec::new();
            layer.forward_positions(input, positions, &mut out);
            out.iter_mut().for_each(|v| *v = v.max(0.0));
            acts.push(out);
            cur_len = positions;
        }
        let last = acts.last().expect("at least one layer");
        let channels = self.dense_w.len();
        let mut pooled = vec![f64::NEG_INFINITY; channels];
        let mut argmax = vec![0; channels];
        for (y, row) in last.chunks_exact(channels).enumerate() {
            for c in 0..channels {
                if row[c] > pooled[c] {
                    pooled[c] = row[c];
                    argmax[c] = y;
                }
            }
        }
        let logit = self.dense_b + dot(&self.dense_w, &pooled);
        Forward {
            x0,
            acts,
            argmax,
            pooled,
            logit,
        }
    }

    pub fn logit(&self, x: &OneHot) -> Result<f64, ModelError> {
        self.check_input(x)?;
        Ok(self.forward(x, true).logit)
    }

    pub fn predict_proba(&self, x: &OneHot) -> Result<f64, ModelError> {
        self.logit(x).map(sigmoid)
    }

    /// Accumulates `scale * dLoss/dparams` for one example into `grad` and
    /// returns the example's loss.
    fn accumulate(&self, x: &OneHot, y: f64, scale: f64, grad: &mut Self) -> f64 {
        let fw = self.forward(x, true);
        let loss = logit_cross_entropy(fw.logit, y);
        let dz = scale * (sigmoid(fw.logit) - y);
        grad.dense_b += dz;
        axpy(dz, &fw.pooled, &mut grad.dense_w);

        let channels = self.dense_w.len();
        let last = fw.acts.last().expect("at least one layer");
        let mut d_act = vec![0.0; last.len()];
        for c in 0..channels {
            let idx = fw.argmax[c] * channels + c;
            if last[idx] > 0.0 {
                d_act[idx] = dz * self.dense_w[c];
            }
        }
        for l in (0..self.convs.len()).rev() {
            let input = if l == 0 { &fw.x0 } else { &fw.acts[l - 1] };
            let mut d_input = vec![0.0; input.len()];
            self.convs[l].backward(input, &d_act, &mut grad.convs[l], Some(&mut d_input));
            if l > 0 {
                // ReLU of the layer below.
                for (d, a) in d_input.iter_mut().zip(&fw.acts[l - 1]) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            d_act = d_input;
        }
        let e = self.embed_dim;
        for (t, d) in d_act.chunks_exact(e).enumerate() {
            if let Some(r) = x.hot(t) {
                axpy(1.0, d, &mut grad.embedding[r * e..(r + 1) * e]);
            }
        }
        loss
    }

    fn apply(&mut self, grad: &Self, lr: f64) {
        axpy(-lr, &grad.embedding, &mut self.embedding);
        for (l, g) in self.convs.iter_mut().zip(&grad.convs) {
            axpy(-lr, &g.weights, &mut l.weights);
            axpy(-lr, &g.bias, &mut l.bias);
        }
        axpy(-lr, &grad.dense_w, &mut self.dense_w);
        self.dense_b -= lr * grad.dense_b;
    }
}

/// Mean cross-entropy over `data`.
pub fn charcnn_loss(params: &CharCnnParams, data: &[LabeledExample]) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for e in data {
        total += logit_cross_entropy(params.logit(&e.encoded.onehot)?, f64::from(e.label));
    }
    Ok(total / data.len() as f64)
}

/// Mean loss and its gradient by backpropagation, shaped like the params.
pub fn charcnn_loss_and_grad(
    params: &CharCnnParams,
    data: &[LabeledExample],
) -> Result<(f64, CharCnnParams), ModelError> {
    check_labels(data)?;
    let mut grad = params.zeros_like();
    let scale = 1.0 / data.len() as f64;
    let mut loss = 0.0;
    for e in data {
        params.check_input(&e.encoded.onehot)?;
        loss += params.accumulate(&e.encoded.onehot, f64::from(e.label), scale, &mut grad);
    }
    Ok((loss * scale, grad))
}

/// Mini-batch gradient descent on the cross-entropy.
///
/// `history[e]` is the mean mini-batch loss seen during epoch `e`.
pub fn charcnn_train(
    data: &[LabeledExample],
    config: &CharCnnConfig,
    seed: u64,
) -> Result<Trained<CharCnnParams>, ModelError> {
    check_labels(data)?;
    if !(config.lr > 0.0) || config.batch_size == 0 {
        return Err(ModelError::InvalidConfig(
            "learning rate and batch size must be positive".into(),
        ));
    }
    let first = &data[0].encoded.onehot;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = CharCnnParams::init(first.rows(), first.cols(), config, &mut rng)?;
    for e in data {
        params.check_input(&e.encoded.onehot)?;
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = params.zeros_like();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad.clear();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let e = &data[i];
                epoch_loss += params.accumulate(&e.encoded.onehot, f64::from(e.label), scale, &mut grad);
            }
            params.apply(&grad, config.lr);
        }
        let mean = epoch_loss / data.len() as f64;
        if !mean.is_finite() || !params.is_finite() {
            return Err(ModelError::NonFiniteLoss { epoch });
        }
        history.push(mean);
    }
    Ok(Trained { params, history })
}
