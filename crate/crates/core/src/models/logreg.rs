use serde::{Deserialize, Serialize};

use super::{check_dim, check_labels, sigmoid, softplus, sparse_rows, LabeledExample, ModelError, Trained};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegConfig {
    pub lr: f64,
    pub epochs: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self { lr: 0.05, epochs: 50 }
    }
}

/// `theta` holds one weight per feature followed by the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    pub theta: Vec<f64>,
}

impl LogRegParams {
    pub fn zeros(dim: usize) -> Self {
        Self {
            theta: vec![0.0; dim + 1],
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.len() - 1
    }

    pub fn logit(&self, x: &[f64]) -> Result<f64, ModelError> {
        check_dim(self.dim(), x.len())?;
        let (w, b) = self.theta.split_at(self.dim());
        Ok(w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b[0])
    }

    /// `h_theta(x)`, the modeled probability of the pro-tobacco class.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.logit(x).map(sigmoid)
    }

    /// `Pr(y | x; theta)` for a label in `{0, 1}`.
    pub fn likelihood(&self, x: &[f64], y: u8) -> Result<f64, ModelError> {
        let h = self.predict_proba(x)?;
        Ok(if y == 1 { h } else { 1.0 - h })
    }

    fn sparse_logit(&self, row: &[(usize, f64)]) -> f64 {
        row.iter().map(|(i, v)| self.theta[*i] * v).sum::<f64>() + self.theta[self.dim()]
    }
}

/// Summed log-likelihood `sum_i ln Pr(y_i | x_i; theta)`.
pub fn log_likelihood(params: &LogRegParams, data: &[LabeledExample]) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for e in data {
        let z = params.logit(e.features())?;
        // ln h = -softplus(-z), ln(1 - h) = -softplus(z)
        total -= if e.label == 1 { softplus(-z) } else { softplus(z) };
    }
    Ok(total)
}

/// Batch gradient ascent on the log-likelihood.
///
/// The step uses the gradient of the mean log-likelihood so `lr` does not
/// scale with the dataset size; the recorded history is the summed
/// log-likelihood, starting from `theta = 0`.
pub fn logreg_train(
    data: &[LabeledExample],
    config: &LogRegConfig,
) -> Result<Trained<LogRegParams>, ModelError> {
    check_labels(data)?;
    if !(config.lr > 0.0) {
        return Err(ModelError::InvalidConfig("learning rate must be positive".into()));
    }
    let dim = data[0].features().len();
    for e in data {
        check_dim(dim, e.features().len())?;
    }
    let rows = sparse_rows(data);
    let n = data.len() as f64;
    let mut params = LogRegParams::zeros(dim);
    let mut history = Vec::with_capacity(config.epochs + 1);
    history.push(log_likelihood(&params, data)?);
    let mut grad = vec![0.0; dim + 1];
    for epoch in 1..=config.epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (row, e) in rows.iter().zip(data) {
            let residual = f64::from(e.label) - sigmoid(params.sparse_logit(row));
            for (i, v) in row {
                grad[*i] += residual * v;
            }
            grad[dim] += residual;
        }
        for (t, g) in params.theta.iter_mut().zip(&grad) {
            *t += config.lr * g / n;
        }
        let ll = log_likelihood(&params, data)?;
        if !ll.is_finite() || params.theta.iter().any(|t| !t.is_finite()) {
            return Err(ModelError::NonFiniteLoss { epoch });
        }
        history.push(ll);
    }
    Ok(Trained { params, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ex(x: &[f64], y: u8) -> LabeledExample {
        LabeledExample::from_features(x.to_vec(), y)
    }

    #[test]
    fn separable_pair() {
        let data = [ex(&[-1.0], 0), ex(&[1.0], 1)];
        let t = logreg_train(&data, &LogRegConfig { lr: 0.1, epochs: 200 }).unwrap();
        for e in &data {
            let p = t.params.predict_proba(e.features()).unwrap();
            assert_eq!(u8::from(p >= 0.5), e.label);
        }
    }

    #[test]
    fn all_positive_labels() {
        let data = [ex(&[0.2, 0.1], 1), ex(&[-0.3, 0.5], 1), ex(&[0.0, 0.0], 1)];
        let t = logreg_train(&data, &LogRegConfig::default()).unwrap();
        for e in &data {
            assert!(t.params.predict_proba(e.features()).unwrap() > 0.5);
        }
    }

    #[test]
    fn zero_theta_is_half() {
        let p = LogRegParams::zeros(3);
        assert_eq!(p.predict_proba(&[4.0, -2.0, 9.0]).unwrap(), 0.5);
    }

    #[test]
    fn aligned_theta_saturates() {
        let p = LogRegParams {
            theta: vec![10.0, 0.0, 0.0],
        };
        assert!(p.predict_proba(&[1.0, 0.0]).unwrap() >= 0.99);
    }

    #[test]
    fn bernoulli_identity() {
        let p = LogRegParams {
            theta: vec![0.3, -1.2, 0.4],
        };
        let x = [0.7, 0.1];
        let s = p.likelihood(&x, 1).unwrap() + p.likelihood(&x, 0).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let p = LogRegParams::zeros(2);
        assert_eq!(
            p.predict_proba(&[1.0]),
            Err(ModelError::DimensionMismatch { expected: 2, actual: 1 })
        );
    }

    #[test]
    fn errors() {
        assert_eq!(
            logreg_train(&[], &LogRegConfig::default()).unwrap_err(),
            ModelError::EmptyDataset
        );
        let data = [ex(&[1.0], 0), ex(&[1.0, 2.0], 1)];
        assert!(matches!(
            logreg_train(&data, &LogRegConfig::default()),
            Err(ModelError::DimensionMismatch { .. })
        ));
        let data = [ex(&[1e308], 1), ex(&[-1e308], 0)];
        assert!(matches!(
            logreg_train(&data, &LogRegConfig { lr: 1e10, epochs: 5 }),
            Err(ModelError::NonFiniteLoss { .. })
        ));
    }

    #[test]
    fn history_starts_at_n_ln_half() {
        let data = [ex(&[0.5], 0), ex(&[0.1], 1), ex(&[0.9], 1)];
        let t = logreg_train(&data, &LogRegConfig { lr: 1e-3, epochs: 3 }).unwrap();
        assert_eq!(t.history.len(), 4);
        assert!((t.history[0] - 3.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn small_lr_is_monotone(seed in any::<u64>(), n in 2usize..40, p in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<_> = (0..n)
                .map(|_| {
                    let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                    ex(&x, rng.gen_range(0..=1))
                })
                .collect();
            let t = logreg_train(&data, &LogRegConfig { lr: 1e-3, epochs: 60 }).unwrap();
            for w in t.history.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-12);
            }
        }
    }
}
