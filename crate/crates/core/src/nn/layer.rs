//! Layer specifications, forward passes, and hand-derived backward passes.
//!
//! Conventions:
//! - Dense activations flow as `[batch, features]`.
//! - Conv/pool activations flow as `[batch, length, channels]`.
//! - Conv1D uses stride 1 and SAME zero-padding: `pad_total = kernel - 1`,
//!   split floor-left / ceil-right, so output length equals input length.
//! - Dropout is inverted: survivors are scaled by `1/(1-rate)` during
//!   training and inference is the identity.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Elementwise activation over a tensor.
pub fn activate(x: &Tensor, kind: Activation) -> Tensor {
    match kind {
        Activation::Relu => x.map(relu),
        Activation::Sigmoid => x.map(sigmoid),
    }
}

impl Activation {
    /// dL/dz from dL/dy, where y = act(z), expressed through y alone.
    fn backprop(&self, y: &Tensor, dy: &Tensor) -> Tensor {
        let mut dz = dy.clone();
        match self {
            Activation::Relu => {
                for (g, &out) in dz.data_mut().iter_mut().zip(y.data()) {
                    if out <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            Activation::Sigmoid => {
                for (g, &out) in dz.data_mut().iter_mut().zip(y.data()) {
                    *g *= out * (1.0 - out);
                }
            }
        }
        dz
    }
}

/// Architecture description of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        input: usize,
        units: usize,
        activation: Option<Activation>,
    },
    Conv1D {
        in_channels: usize,
        filters: usize,
        kernel: usize,
        activation: Option<Activation>,
    },
    MaxPool1D {
        pool: usize,
        stride: usize,
    },
    Dropout {
        rate: f64,
    },
    Flatten,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<(), NnError> {
        match *self {
            LayerSpec::Dense { input, units, .. } => {
                if input == 0 || units == 0 {
                    return Err(NnError::BadSpec("dense layer with zero width".into()));
                }
            }
            LayerSpec::Conv1D {
                in_channels,
                filters,
                kernel,
                ..
            } => {
                if kernel < 1 || filters < 1 || in_channels < 1 {
                    return Err(NnError::BadSpec(
                        "conv1d needs kernel/filters/channels >= 1".into(),
                    ));
                }
            }
            LayerSpec::MaxPool1D { pool, stride } => {
                if pool < 1 || stride < 1 {
                    return Err(NnError::BadSpec("maxpool needs pool/stride >= 1".into()));
                }
            }
            LayerSpec::Dropout { rate } => {
                if !(0.0..1.0).contains(&rate) {
                    return Err(NnError::BadSpec(format!(
                        "dropout rate {rate} outside [0,1)"
                    )));
                }
            }
            LayerSpec::Flatten => {}
        }
        Ok(())
    }
}

/// Per-layer state captured by the forward pass and consumed by backward.
#[derive(Debug, Clone)]
pub enum Cache {
    Dense {
        x: Tensor,
        y: Tensor,
    },
    Conv {
        x: Tensor,
        y: Tensor,
    },
    Pool {
        x_shape: Vec<usize>,
        argmax: Vec<usize>,
    },
    Dropout {
        mask: Vec<f64>,
    },
    Flatten {
        x_shape: Vec<usize>,
    },
    Identity,
}

/// y = xW + b, then the optional activation. Shapes: x [b,in], w [in,out], b [out].
pub fn dense_forward(
    x: &Tensor,
    w: &Tensor,
    b: &Tensor,
    activation: Option<Activation>,
) -> Result<Tensor, NnError> {
    let (xs, ws) = (x.shape(), w.shape());
    if xs.len() != 2 || ws.len() != 2 || xs[1] != ws[0] || b.len() != ws[1] {
        return Err(NnError::ShapeMismatch(format!(
            "dense: x {:?} w {:?} b {:?}",
            xs,
            ws,
            b.shape()
        )));
    }
    let (batch, n_in, n_out) = (xs[0], xs[1], ws[1]);
    let mut y = Tensor::zeros(&[batch, n_out]);
    for i in 0..batch {
        let xrow = &x.data()[i * n_in..(i + 1) * n_in];
        let yrow = &mut y.data_mut()[i * n_out..(i + 1) * n_out];
        yrow.copy_from_slice(b.data());
        for (k, &xv) in xrow.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let wrow = &w.data()[k * n_out..(k + 1) * n_out];
            for (yv, &wv) in yrow.iter_mut().zip(wrow) {
                *yv += xv * wv;
            }
        }
    }
    Ok(match activation {
        Some(a) => activate(&y, a),
        None => y,
    })
}

/// Gradients of the dense layer: returns (dw, db, dx).
pub fn dense_backward(
    x: &Tensor,
    w: &Tensor,
    y: &Tensor,
    dy: &Tensor,
    activation: Option<Activation>,
) -> (Tensor, Tensor, Tensor) {
    let dz = match activation {
        Some(a) => a.backprop(y, dy),
        None => dy.clone(),
    };
    let (batch, n_in) = (x.shape()[0], x.shape()[1]);
    let n_out = w.shape()[1];
    let mut dw = Tensor::zeros(&[n_in, n_out]);
    let mut db = Tensor::zeros(&[n_out]);
    let mut dx = Tensor::zeros(&[batch, n_in]);
    for i in 0..batch {
        let xrow = &x.data()[i * n_in..(i + 1) * n_in];
        let zrow = &dz.data()[i * n_out..(i + 1) * n_out];
        for (dbv, &zv) in db.data_mut().iter_mut().zip(zrow) {
            *dbv += zv;
        }
        for (k, &xv) in xrow.iter().enumerate() {
            if xv != 0.0 {
                let dwrow = &mut dw.data_mut()[k * n_out..(k + 1) * n_out];
                for (dwv, &zv) in dwrow.iter_mut().zip(zrow) {
                    *dwv += xv * zv;
                }
            }
        }
        let dxrow = &mut dx.data_mut()[i * n_in..(i + 1) * n_in];
        for (k, dxv) in dxrow.iter_mut().enumerate() {
            let wrow = &w.data()[k * n_out..(k + 1) * n_out];
            let mut acc = 0.0;
            for (&wv, &zv) in wrow.iter().zip(zrow) {
                acc += wv * zv;
            }
            *dxv = acc;
        }
    }
    (dw, db, dx)
}

fn pad_left(kernel: usize) -> usize {
    (kernel - 1) / 2
}

/// SAME-padded stride-1 convolution.
/// Shapes: x [b, l, c], kernels [k, c, f], bias [f] -> [b, l, f].
pub fn conv1d_forward(
    x: &Tensor,
    kernels: &Tensor,
    bias: &Tensor,
    activation: Option<Activation>,
) -> Result<Tensor, NnError> {
    let (xs, ks) = (x.shape(), kernels.shape());
    if xs.len() != 3 || ks.len() != 3 || xs[2] != ks[1] || bias.len() != ks[2] {
        return Err(NnError::ShapeMismatch(format!(
            "conv1d: x {:?} kernels {:?} bias {:?}",
            xs,
            ks,
            bias.shape()
        )));
    }
    let (batch, len, ch) = (xs[0], xs[1], xs[2]);
    let (kernel, _, filters) = (ks[0], ks[1], ks[2]);
    let pl = pad_left(kernel) as isize;
    let mut y = Tensor::zeros(&[batch, len, filters]);
    for b in 0..batch {
        for t in 0..len {
            let yrow = {
                let base = (b * len + t) * filters;
                &mut y.data_mut()[base..base + filters]
            };
            yrow.copy_from_slice(bias.data());
            for k in 0..kernel {
                let s = t as isize + k as isize - pl;
                if s < 0 || s >= len as isize {
                    continue;
                }
                let xrow = {
                    let base = (b * len + s as usize) * ch;
                    &x.data()[base..base + ch]
                };
                let kbase = k * ch * filters;
                for (c, &xv) in xrow.iter().enumerate() {
                    if xv == 0.0 {
                        continue;
                    }
                    let krow = &kernels.data()[kbase + c * filters..kbase + (c + 1) * filters];
                    for (yv, &kv) in yrow.iter_mut().zip(krow) {
                        *yv += xv * kv;
                    }
                }
            }
        }
    }
    Ok(match activation {
        Some(a) => activate(&y, a),
        None => y,
    })
}

/// Gradients of the SAME-padded convolution: returns (dkernels, dbias, dx).
pub fn conv1d_backward(
    x: &Tensor,
    kernels: &Tensor,
    y: &Tensor,
    dy: &Tensor,
    activation: Option<Activation>,
) -> (Tensor, Tensor, Tensor) {
    let dz = match activation {
        Some(a) => a.backprop(y, dy),
        None => dy.clone(),
    };
    let (batch, len, ch) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (kernel, filters) = (kernels.shape()[0], kernels.shape()[2]);
    let pl = pad_left(kernel) as isize;
    let mut dk = Tensor::zeros(&[kernel, ch, filters]);
    let mut db = Tensor::zeros(&[filters]);
    let mut dx = Tensor::zeros(&[batch, len, ch]);
    for b in 0..batch {
        for t in 0..len {
            let zrow = {
                let base = (b * len + t) * filters;
                &dz.data()[base..base + filters]
            };
            for (dbv, &zv) in db.data_mut().iter_mut().zip(zrow) {
                *dbv += zv;
            }
            for k in 0..kernel {
                let s = t as isize + k as isize - pl;
                if s < 0 || s >= len as isize {
                    continue;
                }
                let xbase = (b * len + s as usize) * ch;
                let kbase = k * ch * filters;
                for c in 0..ch {
                    let xv = x.data()[xbase + c];
                    if xv != 0.0 {
                        let dkrow =
                            &mut dk.data_mut()[kbase + c * filters..kbase + (c + 1) * filters];
                        for (dkv, &zv) in dkrow.iter_mut().zip(zrow) {
                            *dkv += xv * zv;
                        }
                    }
                    let krow = &kernels.data()[kbase + c * filters..kbase + (c + 1) * filters];
                    let mut acc = 0.0;
                    for (&kv, &zv) in krow.iter().zip(zrow) {
                        acc += kv * zv;
                    }
                    dx.data_mut()[xbase + c] += acc;
                }
            }
        }
    }
    (dk, db, dx)
}

/// Windowed max with stride = pool; an odd tail forms a singleton window.
/// Returns the pooled tensor and the flat argmax index per output element.
pub fn maxpool1d_forward(x: &Tensor, pool: usize, stride: usize) -> (Tensor, Vec<usize>) {
    let (batch, len, ch) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let out_len = len.div_ceil(stride);
    let mut y = Tensor::zeros(&[batch, out_len, ch]);
    let mut argmax = vec![0usize; batch * out_len * ch];
    for b in 0..batch {
        for o in 0..out_len {
            let start = o * stride;
            let end = (start + pool).min(len);
            for c in 0..ch {
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = 0;
                for t in start..end {
                    let idx = (b * len + t) * ch + c;
                    let v = x.data()[idx];
                    if v > best {
                        best = v;
                        best_idx = idx;
                    }
                }
                let oidx = (b * out_len + o) * ch + c;
                y.data_mut()[oidx] = best;
                argmax[oidx] = best_idx;
            }
        }
    }
    (y, argmax)
}

/// Route pooled gradients back to the positions that won the max.
pub fn maxpool1d_backward(x_shape: &[usize], argmax: &[usize], dy: &Tensor) -> Tensor {
    let mut dx = Tensor::zeros(x_shape);
    for (&src, &g) in argmax.iter().zip(dy.data()) {
        dx.data_mut()[src] += g;
    }
    dx
}

/// Inverted dropout. In training each unit is zeroed with probability `rate`
/// and survivors are scaled by `1/(1-rate)`; in inference this is the identity.
/// Returns the output and the applied mask (scale factors).
pub fn dropout_forward(
    x: &Tensor,
    rate: f64,
    rng: &mut impl Rng,
    training: bool,
) -> (Tensor, Vec<f64>) {
    if !training || rate == 0.0 {
        return (x.clone(), vec![1.0; x.len()]);
    }
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    let mask: Vec<f64> = (0..x.len())
        .map(|_| {
            if rng.random::<f64>() < rate {
                0.0
            } else {
                scale
            }
        })
        .collect();
    (apply_mask(x, &mask), mask)
}

/// Apply a fixed dropout mask; used by backward and by gradient checks.
pub fn apply_mask(x: &Tensor, mask: &[f64]) -> Tensor {
    let mut y = x.clone();
    for (v, &m) in y.data_mut().iter_mut().zip(mask) {
        *v *= m;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dense_identity_weights_pass_input_through() {
        let x = Tensor::from_vec(&[1, 2], vec![1.0, 2.0]);
        let w = Tensor::from_vec(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]);
        let b = Tensor::zeros(&[2]);
        let y = dense_forward(&x, &w, &b, None).unwrap();
        assert_eq!(y.data(), &[1.0, 2.0]);
    }

    #[test]
    fn dense_dot_product_arithmetic() {
        let x = Tensor::from_vec(&[1, 2], vec![1.0, 1.0]);
        let w = Tensor::from_vec(&[2, 1], vec![2.0, 3.0]);
        let b = Tensor::from_vec(&[1], vec![1.0]);
        let y = dense_forward(&x, &w, &b, None).unwrap();
        assert_eq!(y.data(), &[6.0]);
    }

    #[test]
    fn dense_batch_equals_stacked_single_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Tensor::from_vec(&[4, 3], (0..12).map(|_| rng.random::<f64>()).collect());
        let w = Tensor::from_vec(&[3, 2], (0..6).map(|_| rng.random::<f64>()).collect());
        let b = Tensor::from_vec(&[2], vec![0.1, -0.2]);
        let full = dense_forward(&x, &w, &b, Some(Activation::Relu)).unwrap();
        for i in 0..4 {
            let row = Tensor::from_vec(&[1, 3], x.data()[i * 3..(i + 1) * 3].to_vec());
            let single = dense_forward(&row, &w, &b, Some(Activation::Relu)).unwrap();
            for j in 0..2 {
                assert!((full.at2(i, j) - single.at2(0, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn dense_rejects_shape_mismatch() {
        let x = Tensor::zeros(&[1, 3]);
        let w = Tensor::zeros(&[2, 2]);
        let b = Tensor::zeros(&[2]);
        assert!(dense_forward(&x, &w, &b, None).is_err());
    }

    #[test]
    fn conv_same_padding_keeps_length() {
        // The first reference conv layer over a 6-wide input.
        let x = Tensor::zeros(&[2, 6, 1]);
        let k = Tensor::zeros(&[8, 1, 64]);
        let b = Tensor::zeros(&[64]);
        let y = conv1d_forward(&x, &k, &b, None).unwrap();
        assert_eq!(y.shape(), &[2, 6, 64]);
    }

    #[test]
    fn conv_zero_kernel_emits_bias() {
        let x = Tensor::from_vec(&[1, 4, 1], vec![3.0, -1.0, 2.0, 5.0]);
        let k = Tensor::zeros(&[3, 1, 2]);
        let b = Tensor::from_vec(&[2], vec![1.0, 1.0]);
        let y = conv1d_forward(&x, &k, &b, None).unwrap();
        assert!(y.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn conv_matches_naive_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (len, kernel, ch, filters) = (5, 3, 2, 2);
        let x = Tensor::from_vec(
            &[1, len, ch],
            (0..len * ch).map(|_| rng.random::<f64>() - 0.5).collect(),
        );
        let k = Tensor::from_vec(
            &[kernel, ch, filters],
            (0..kernel * ch * filters)
                .map(|_| rng.random::<f64>() - 0.5)
                .collect(),
        );
        let b = Tensor::from_vec(&[filters], vec![0.3, -0.7]);
        let y = conv1d_forward(&x, &k, &b, None).unwrap();
        let pl = (kernel - 1) / 2;
        for t in 0..len {
            for f in 0..filters {
                let mut want = b.data()[f];
                for kk in 0..kernel {
                    for c in 0..ch {
                        let s = t as isize + kk as isize - pl as isize;
                        if s >= 0 && (s as usize) < len {
                            want += x.at3(0, s as usize, c) * k.at3(kk, c, f);
                        }
                    }
                }
                assert!((y.at3(0, t, f) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn maxpool_windowed_max() {
        let x = Tensor::from_vec(&[1, 4, 1], vec![1.0, 3.0, 2.0, 5.0]);
        let (y, _) = maxpool1d_forward(&x, 2, 2);
        assert_eq!(y.data(), &[3.0, 5.0]);
    }

    #[test]
    fn maxpool_odd_tail_is_singleton_window() {
        let x = Tensor::from_vec(&[1, 5, 1], vec![1.0, 2.0, 3.0, 4.0, 9.0]);
        let (y, _) = maxpool1d_forward(&x, 2, 2);
        assert_eq!(y.shape(), &[1, 3, 1]);
        assert_eq!(y.data(), &[2.0, 4.0, 9.0]);
    }

    #[test]
    fn maxpool_constant_input_stays_constant() {
        let x = Tensor::from_vec(&[1, 6, 2], vec![7.0; 12]);
        let (y, _) = maxpool1d_forward(&x, 2, 2);
        assert!(y.data().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn relu_and_sigmoid_basics() {
        let x = Tensor::from_vec(&[3], vec![-1.0, 0.0, 2.0]);
        assert_eq!(activate(&x, Activation::Relu).data(), &[0.0, 0.0, 2.0]);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        // Large |x| must not overflow to NaN/inf; the naive 1/(1+exp(-x))
        // does for x = -500.
        assert_eq!(sigmoid(500.0), 1.0);
        assert!(sigmoid(-500.0) > 0.0 && sigmoid(-500.0) < 1e-200);
        assert!(sigmoid(500.0).is_finite());
        assert!(sigmoid(-500.0).is_finite());
        // Moderate magnitudes match the direct formula.
        for &v in &[-30.0f64, -4.2, 0.7, 12.0] {
            let direct = 1.0 / (1.0 + (-v).exp());
            assert!((sigmoid(v) - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn dropout_inference_is_identity() {
        let x = Tensor::from_vec(&[4], vec![1.0, 2.0, 3.0, 4.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (y, _) = dropout_forward(&x, 0.5, &mut rng, false);
        assert_eq!(y.data(), x.data());
        let (y0, _) = dropout_forward(&x, 0.0, &mut rng, true);
        assert_eq!(y0.data(), x.data());
    }

    #[test]
    fn dropout_statistics_match_rate() {
        let n = 100_000;
        let x = Tensor::from_vec(&[n], vec![1.0; n]);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let (y, mask) = dropout_forward(&x, 0.5, &mut rng, true);
        let zeros = mask.iter().filter(|&&m| m == 0.0).count() as f64 / n as f64;
        assert!((zeros - 0.5).abs() < 0.01, "zero fraction {zeros}");
        let mean_out = y.data().iter().sum::<f64>() / n as f64;
        assert!((mean_out - 1.0).abs() < 0.02, "mean {mean_out}");
    }
}
