//! Strided 1-D ("temporal") convolution over multi-channel sequences.
//!
//! Indexing follows valid cross-correlation: output position `y` reads the
//! input window `[y * stride, y * stride + width - 1]`, and
//!
//! ```text
//! h[o][y] = bias[o] + sum_i sum_{x=0}^{width-1} kernel[o][i][x] * g[i][y * stride + x]
//! ```
//!
//! This is the kernel-flipped form of `h(y) = sum_{x=1}^{k} f(x) g(y d - x + c)`
//! with `f(x) = kernel[width - x]` and offset `c = width`.

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub width: usize,
    pub stride: usize,
    /// Per output channel a `width x in_channels` block, position-major,
    /// so it lines up with a position-major input window.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn zeros(in_channels: usize, out_channels: usize, width: usize, stride: usize) -> Self {
        assert!(width >= 1 && stride >= 1, "width and stride must be positive");
        Self {
            in_channels,
            out_channels,
            width,
            stride,
            weights: vec![0.0; out_channels * width * in_channels],
            bias: vec![0.0; out_channels],
        }
    }

    fn row_len(&self) -> usize {
        self.width * self.in_channels
    }

    /// `kernel[o][i][x]`, `x` counted from the start of the window.
    pub fn kernel(&self, out: usize, input: usize, x: usize) -> f64 {
        self.weights[out * self.row_len() + x * self.in_channels + input]
    }

    pub fn set_kernel(&mut self, out: usize, input: usize, x: usize, value: f64) {
        let r = self.row_len();
        self.weights[out * r + x * self.in_channels + input] = value;
    }

    /// `floor((len - width) / stride) + 1`, or `None` when `len < width`.
    pub fn output_len(&self, input_len: usize) -> Option<usize> {
        (input_len >= self.width).then(|| (input_len - self.width) / self.stride + 1)
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }

    /// Forward pass on a position-major buffer (`len x in_channels`),
    /// computing only output positions `0..positions`.
    pub(crate) fn forward_positions(&self, input: &[f64], positions: usize, out: &mut Vec<f64>) {
        let r = self.row_len();
        out.clear();
        out.reserve(positions * self.out_channels);
        for y in 0..positions {
            let start = y * self.stride * self.in_channels;
            let window = &input[start..start + r];
            for o in 0..self.out_channels {
                let k = &self.weights[o * r..(o + 1) * r];
                out.push(self.bias[o] + dot(k, window));
            }
        }
    }

    /// Accumulates parameter gradients and, if requested, the input
    /// gradient for a pre-activation gradient `d_out` (`positions x out`).
    pub(crate) fn backward(
        &self,
        input: &[f64],
        d_out: &[f64],
        grad: &mut ConvLayer,
        mut d_input: Option<&mut [f64]>,
    ) {
        let r = self.row_len();
        for (y, dy) in d_out.chunks_exact(self.out_channels).enumerate() {
            let start = y * self.stride * self.in_channels;
            for (o, &g) in dy.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                grad.bias[o] += g;
                let window = &input[start..start + r];
                axpy(g, window, &mut grad.weights[o * r..(o + 1) * r]);
                if let Some(d) = d_input.as_deref_mut() {
                    axpy(g, &self.weights[o * r..(o + 1) * r], &mut d[start..start + r]);
                }
            }
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorize.
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * c + l] * b[4 * c + l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Applies `layer` to a channel-major input (`input[channel][position]`)
/// and returns `output[out_channel][position]`. No activation is applied.
pub fn temporal_conv(input: &[Vec<f64>], layer: &ConvLayer) -> Result<Vec<Vec<f64>>, ModelError> {
    if input.len() != layer.in_channels {
        return Err(ModelError::DimensionMismatch {
            expected: layer.in_channels,
            actual: input.len(),
        });
    }
    let len = input.first().map_or(0, Vec::len);
    if let Some(bad) = input.iter().find(|c| c.len() != len) {
        return Err(ModelError::DimensionMismatch {
            expected: len,
            actual: bad.len(),
        });
    }
    let out_len = layer.output_len(len).ok_or(ModelError::InputTooShort {
        len,
        width: layer.width,
    })?;
    let mut packed = Vec::with_capacity(len * layer.in_channels);
    for t in 0..len {
        packed.extend(input.iter().map(|c| c[t]));
    }
    let mut flat = Vec::new();
    layer.forward_positions(&packed, out_len, &mut flat);
    Ok((0..layer.out_channels)
        .map(|o| (0..out_len).map(|y| flat[y * layer.out_channels + o]).collect())
        .collect())
}
