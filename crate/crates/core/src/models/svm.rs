use serde::{Deserialize, Serialize};

use super::{check_dim, check_labels, sparse_rows, LabeledExample, ModelError, Trained};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub lambda: f64,
    pub lr: f64,
    pub epochs: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            lr: 0.05,
            epochs: 50,
        }
    }
}

/// Soft-margin linear SVM with hyperplane `w . x - b = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub w: Vec<f64>,
    pub b: f64,
    pub lambda: f64,
}

impl SvmParams {
    pub fn zeros(dim: usize, lambda: f64) -> Self {
        Self {
            w: vec![0.0; dim],
            b: 0.0,
            lambda,
        }
    }

    /// Signed distance proxy `w . x - b`.
    pub fn margin(&self, x: &[f64]) -> Result<f64, ModelError> {
        check_dim(self.w.len(), x.len())?;
        Ok(self.w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - self.b)
    }

    /// Class in `{-1, +1}` and the margin. Points on the hyperplane are `+1`.
    pub fn predict(&self, x: &[f64]) -> Result<(i8, f64), ModelError> {
        let m = self.margin(x)?;
        Ok((if m >= 0.0 { 1 } else { -1 }, m))
    }

    pub fn is_finite(&self) -> bool {
        self.b.is_finite() && self.w.iter().all(|v| v.is_finite())
    }
}

/// Mean hinge loss plus `lambda * ||w||^2`.
pub fn svm_objective(params: &SvmParams, data: &[LabeledExample]) -> Result<f64, ModelError> {
    let mut hinge = 0.0;
    for e in data {
        hinge += (1.0 - e.signed_label() * params.margin(e.features())?).max(0.0);
    }
    let reg: f64 = params.w.iter().map(|v| v * v).sum();
    Ok(hinge / data.len() as f64 + params.lambda * reg)
}

/// Full-batch sub-gradient descent from `w = 0, b = 0`.
///
/// Examples with `y (w . x - b) < 1` contribute `-y x` to the `w`
/// sub-gradient and `+y` to the `b` sub-gradient.
pub fn svm_train(data: &[LabeledExample], config: &SvmConfig) -> Result<Trained<SvmParams>, ModelError> {
    check_labels(data)?;
    if !(config.lambda > 0.0) {
        return Err(ModelError::InvalidConfig("lambda must be positive".into()));
    }
    if !(config.lr > 0.0) {
        return Err(ModelError::InvalidConfig("learning rate must be positive".into()));
    }
    let dim = data[0].features().len();
    for e in data {
        check_dim(dim, e.features().len())?;
    }
    let rows = sparse_rows(data);
    let n = data.len() as f64;
    let mut params = SvmParams::zeros(dim, config.lambda);
    let mut history = Vec::with_capacity(config.epochs + 1);
    history.push(svm_objective(&params, data)?);
    let mut gw = vec![0.0; dim];
    for epoch in 1..=config.epochs {
        gw.iter_mut().zip(&params.w).for_each(|(g, w)| *g = 2.0 * config.lambda * w);
        let mut gb = 0.0;
        for (row, e) in rows.iter().zip(data) {
            let y = e.signed_label();
            let m = row.iter().map(|(i, v)| params.w[*i] * v).sum::<f64>() - params.b;
            if y * m < 1.0 {
                for (i, v) in row {
                    gw[*i] -= y * v / n;
                }
                gb += y / n;
            }
        }
        for (w, g) in params.w.iter_mut().zip(&gw) {
            *w -= config.lr * g;
        }
        params.b -= config.lr * gb;
        let obj = svm_objective(&params, data)?;
        if !obj.is_finite() || !params.is_finite() {
            return Err(ModelError::NonFiniteLoss { epoch });
        }
        history.push(obj);
    }
    Ok(Trained { params, history })
}
