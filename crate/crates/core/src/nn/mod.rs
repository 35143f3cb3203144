//! A small feed-forward / 1-D convolutional neural-network stack built on
//! plain `f64` tensors: layers with hand-derived backward passes, binary
//! cross-entropy, Adam, and a seeded training loop. Everything is
//! deterministic given a seed.

pub mod gradcheck;
pub mod layer;
pub mod loss;
pub mod optim;
pub mod tensor;
pub mod train;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use layer::{Activation, Cache, LayerSpec};
pub use optim::{Adam, AdamConfig};
pub use tensor::Tensor;
pub use train::{classify, evaluate, predict, train, History, LabeledData, TrainConfig};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid layer spec: {0}")]
    BadSpec(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("model file error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Shape of the per-sample activation between layers (batch axis elided).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatShape {
    Flat(usize),
    Seq { len: usize, ch: usize },
}

impl FeatShape {
    pub fn element_count(&self) -> usize {
        match *self {
            FeatShape::Flat(n) => n,
            FeatShape::Seq { len, ch } => len * ch,
        }
    }
}

/// Weights and bias of one parametric layer.
#[derive(Debug, Clone)]
pub struct LayerParams {
    pub weights: Tensor,
    pub bias: Tensor,
}

/// An ordered stack of layers plus their parameters.
///
/// A rank-2 input `[batch, features]` is lifted to `[batch, features, 1]`
/// on entry to the first convolution or pooling layer, so the same
/// `[samples, features]` matrices feed both dense-only and convolutional
/// models.
#[derive(Debug, Clone)]
pub struct Model {
    input_features: usize,
    specs: Vec<LayerSpec>,
    params: Vec<Option<LayerParams>>,
}

enum DropoutMode<'a> {
    Disabled,
    Sample(&'a mut ChaCha8Rng),
    Fixed(&'a [Option<Vec<f64>>]),
}

/// Per-layer parameter gradients, parallel to `Model::specs`.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub per_layer: Vec<Option<LayerParams>>,
}

impl Gradients {
    /// Flatten to a tensor list in the fixed order used by the optimizer.
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        for g in self.per_layer.iter().flatten() {
            out.push(&g.weights);
            out.push(&g.bias);
        }
        out
    }
}

impl Model {
    /// Build a model with Glorot-uniform weights drawn from a seeded RNG
    /// and zero biases. Fails if the layer chain is dimensionally unsound.
    pub fn init(input_features: usize, specs: Vec<LayerSpec>, seed: u64) -> Result<Self, NnError> {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with_rng(input_features, specs, &mut rng)
    }

    pub fn init_with_rng(
        input_features: usize,
        specs: Vec<LayerSpec>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self, NnError> {
        if input_features == 0 {
            return Err(NnError::BadSpec(
                "model needs at least one input feature".into(),
            ));
        }
        if specs.is_empty() {
            return Err(NnError::BadSpec("model needs at least one layer".into()));
        }
        for spec in &specs {
            spec.validate()?;
        }
        shape_chain(input_features, &specs)?;
        let params = specs.iter().map(|spec| init_params(spec, rng)).collect();
        Ok(Self {
            input_features,
            specs,
            params,
        })
    }

    pub fn input_features(&self) -> usize {
        self.input_features
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn layer_count(&self) -> usize {
        self.specs.len()
    }

    /// Per-layer output shapes (batch axis elided).
    pub fn shapes(&self) -> Vec<FeatShape> {
        shape_chain(self.input_features, &self.specs).expect("validated at construction")
    }

    /// Shape of the model output for a single sample.
    pub fn output_shape(&self) -> FeatShape {
        *self.shapes().last().expect("non-empty model")
    }

    /// Total number of trainable scalars.
    pub fn param_count(&self) -> usize {
        self.params
            .iter()
            .flatten()
            .map(|p| p.weights.len() + p.bias.len())
            .sum()
    }

    /// Mutable references to every parameter tensor, weights before bias,
    /// in layer order. The optimizer relies on this order being stable.
    pub fn param_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for p in self.params.iter_mut().flatten() {
            out.push(&mut p.weights);
            out.push(&mut p.bias);
        }
        out
    }

    pub fn param_tensors(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        for p in self.params.iter().flatten() {
            out.push(&p.weights);
            out.push(&p.bias);
        }
        out
    }

    /// Inference pass: dropout is the identity.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor, NnError> {
        Ok(self.forward_inner(x, DropoutMode::Disabled)?.0)
    }

    /// Training pass: dropout masks are sampled from `rng` and recorded in
    /// the returned caches for the matching backward pass.
    pub fn forward_train(
        &self,
        x: &Tensor,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Tensor, Vec<Cache>), NnError> {
        self.forward_inner(x, DropoutMode::Sample(rng))
    }

    /// Training-mode pass that replays previously sampled dropout masks
    /// (one entry per layer, `None` for non-dropout layers). This makes the
    /// loss a deterministic function of the parameters, which numerical
    /// gradient checks require.
    pub fn forward_with_masks(
        &self,
        x: &Tensor,
        masks: &[Option<Vec<f64>>],
    ) -> Result<Tensor, NnError> {
        if masks.len() != self.specs.len() {
            return Err(NnError::ShapeMismatch(format!(
                "mask list has {} entries for {} layers",
                masks.len(),
                self.specs.len()
            )));
        }
        Ok(self.forward_inner(x, DropoutMode::Fixed(masks))?.0)
    }

    /// Extract the dropout masks out of a set of forward caches, in the
    /// layout `forward_with_masks` expects.
    pub fn dropout_masks(caches: &[Cache]) -> Vec<Option<Vec<f64>>> {
        caches
            .iter()
            .map(|c| match c {
                Cache::Dropout { mask } => Some(mask.clone()),
                _ => None,
            })
            .collect()
    }

    fn forward_inner(
        &self,
        x: &Tensor,
        mut dropout: DropoutMode<'_>,
    ) -> Result<(Tensor, Vec<Cache>), NnError> {
        if x.shape().len() != 2 || x.shape()[1] != self.input_features {
            return Err(NnError::ShapeMismatch(format!(
                "model expects [batch, {}], got {:?}",
                self.input_features,
                x.shape()
            )));
        }
        let batch = x.shape()[0];
        let mut cur = x.clone();
        let mut caches = Vec::with_capacity(self.specs.len());
        for (idx, spec) in self.specs.iter().enumerate() {
            match spec {
                LayerSpec::Dense {
                    input,
                    units,
                    activation,
                } => {
                    if cur.shape().len() != 2 || cur.shape()[1] != *input {
                        return Err(NnError::ShapeMismatch(format!(
                            "dense layer {idx} expects width {input}, got {:?}",
                            cur.shape()
                        )));
                    }
                    let p = self.params[idx].as_ref().expect("dense has params");
                    let y = layer::dense_forward(&cur, &p.weights, &p.bias, *activation)?;
                    caches.push(Cache::Dense {
                        x: cur,
                        y: y.clone(),
                    });
                    let _ = units;
                    cur = y;
                }
                LayerSpec::Conv1D { activation, .. } => {
                    let lifted = lift_to_seq(&mut cur, batch);
                    let p = self.params[idx].as_ref().expect("conv has params");
                    let y = layer::conv1d_forward(&cur, &p.weights, &p.bias, *activation)?;
                    let mut cache_x = cur;
                    if lifted {
                        // Remember the lift so backward can restore rank 2.
                        cache_x = cache_x.reshaped(&[batch, cache_x.len() / batch, 1]);
                    }
                    caches.push(Cache::Conv {
                        x: cache_x,
                        y: y.clone(),
                    });
                    cur = y;
                }
                LayerSpec::MaxPool1D { pool, stride } => {
                    lift_to_seq(&mut cur, batch);
                    let x_shape = cur.shape().to_vec();
                    let (y, argmax) = layer::maxpool1d_forward(&cur, *pool, *stride);
                    caches.push(Cache::Pool { x_shape, argmax });
                    cur = y;
                }
                LayerSpec::Dropout { rate } => {
                    let (y, mask) = match &mut dropout {
                        DropoutMode::Disabled => (cur.clone(), vec![1.0; cur.len()]),
                        DropoutMode::Sample(rng) => layer::dropout_forward(&cur, *rate, rng, true),
                        DropoutMode::Fixed(masks) => {
                            let mask = masks[idx].as_ref().ok_or_else(|| {
                                NnError::ShapeMismatch(format!(
                                    "no mask supplied for dropout layer {idx}"
                                ))
                            })?;
                            if mask.len() != cur.len() {
                                return Err(NnError::ShapeMismatch(format!(
                                    "dropout mask length {} vs activation {}",
                                    mask.len(),
                                    cur.len()
                                )));
                            }
                            (layer::apply_mask(&cur, mask), mask.clone())
                        }
                    };
                    caches.push(Cache::Dropout { mask });
                    cur = y;
                }
                LayerSpec::Flatten => {
                    let x_shape = cur.shape().to_vec();
                    let flat = cur.len() / batch;
                    cur = cur.reshaped(&[batch, flat]);
                    caches.push(Cache::Flatten { x_shape });
                }
            }
        }
        Ok((cur, caches))
    }

    /// Backpropagate `dl_dy` (gradient of the loss w.r.t. the model output)
    /// through the cached forward pass. Returns parameter gradients.
    pub fn backward(&self, caches: &[Cache], dl_dy: &Tensor) -> Result<Gradients, NnError> {
        if caches.len() != self.specs.len() {
            return Err(NnError::ShapeMismatch(format!(
                "{} caches for {} layers",
                caches.len(),
                self.specs.len()
            )));
        }
        let mut grads: Vec<Option<LayerParams>> = vec![None; self.specs.len()];
        let mut dy = dl_dy.clone();
        for (idx, spec) in self.specs.iter().enumerate().rev() {
            match (spec, &caches[idx]) {
                (LayerSpec::Dense { activation, .. }, Cache::Dense { x, y }) => {
                    let p = self.params[idx].as_ref().expect("dense has params");
                    let (dw, db, dx) = layer::dense_backward(x, &p.weights, y, &dy, *activation);
                    grads[idx] = Some(LayerParams {
                        weights: dw,
                        bias: db,
                    });
                    dy = dx;
                }
                (LayerSpec::Conv1D { activation, .. }, Cache::Conv { x, y }) => {
                    let p = self.params[idx].as_ref().expect("conv has params");
                    let (dk, db, dx) = layer::conv1d_backward(x, &p.weights, y, &dy, *activation);
                    grads[idx] = Some(LayerParams {
                        weights: dk,
                        bias: db,
                    });
                    dy = dx;
                }
                (LayerSpec::MaxPool1D { .. }, Cache::Pool { x_shape, argmax }) => {
                    dy = layer::maxpool1d_backward(x_shape, argmax, &dy);
                }
                (LayerSpec::Dropout { .. }, Cache::Dropout { mask }) => {
                    dy = layer::apply_mask(&dy, mask);
                }
                (LayerSpec::Flatten, Cache::Flatten { x_shape }) => {
                    dy = dy.reshaped(x_shape);
                }
                _ => {
                    return Err(NnError::ShapeMismatch(format!(
                        "cache kind does not match layer {idx}"
                    )))
                }
            }
        }
        Ok(Gradients { per_layer: grads })
    }

    /// Serialize to a self-contained JSON document (weights as base64 of
    /// little-endian f64 bytes).
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            input_features: self.input_features,
            specs: self.specs.clone(),
            params: self
                .params
                .iter()
                .map(|p| p.as_ref().map(SavedParams::from_params))
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, NnError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| NnError::Format(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(NnError::Format(format!(
                "unsupported model format '{}'",
                file.format
            )));
        }
        if file.params.len() != file.specs.len() {
            return Err(NnError::Format("params/specs length mismatch".into()));
        }
        let mut params = Vec::with_capacity(file.specs.len());
        for (spec, saved) in file.specs.iter().zip(file.params) {
            let expects = matches!(spec, LayerSpec::Dense { .. } | LayerSpec::Conv1D { .. });
            match (expects, saved) {
                (true, Some(s)) => params.push(Some(s.into_params()?)),
                (false, None) => params.push(None),
                (true, None) => return Err(NnError::Format("missing parameters for layer".into())),
                (false, Some(_)) => {
                    return Err(NnError::Format("unexpected parameters for layer".into()))
                }
            }
        }
        let model = Self {
            input_features: file.input_features,
            specs: file.specs,
            params,
        };
        // Re-run validation so corrupt files fail here, not at inference.
        shape_chain(model.input_features, &model.specs)?;
        for (spec, p) in model.specs.iter().zip(&model.params) {
            if let Some(p) = p {
                check_param_shapes(spec, p)?;
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), NnError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, NnError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

/// Reshape a rank-2 activation to `[batch, len, 1]` in place.
/// Returns true if a lift happened.
fn lift_to_seq(cur: &mut Tensor, batch: usize) -> bool {
    if cur.shape().len() == 2 {
        let len = cur.shape()[1];
        *cur = cur.reshaped(&[batch, len, 1]);
        true
    } else {
        false
    }
}

const MODEL_FORMAT: &str = "floodlab-model-v1";

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    input_features: usize,
    specs: Vec<LayerSpec>,
    params: Vec<Option<SavedParams>>,
}

#[derive(Serialize, Deserialize)]
struct SavedParams {
    weights_shape: Vec<usize>,
    weights: String,
    bias_shape: Vec<usize>,
    bias: String,
}

impl SavedParams {
    fn from_params(p: &LayerParams) -> Self {
        Self {
            weights_shape: p.weights.shape().to_vec(),
            weights: encode_f64s(p.weights.data()),
            bias_shape: p.bias.shape().to_vec(),
            bias: encode_f64s(p.bias.data()),
        }
    }

    fn into_params(self) -> Result<LayerParams, NnError> {
        Ok(LayerParams {
            weights: decode_tensor(&self.weights_shape, &self.weights)?,
            bias: decode_tensor(&self.bias_shape, &self.bias)?,
        })
    }
}

fn encode_f64s(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    BASE64.encode(bytes)
}

fn decode_tensor(shape: &[usize], b64: &str) -> Result<Tensor, NnError> {
    let bytes = BASE64
        .decode(b64)
        .map_err(|e| NnError::Format(format!("bad base64 weights: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(NnError::Format(
            "weight blob is not a multiple of 8 bytes".into(),
        ));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let expected: usize = shape.iter().product();
    if values.len() != expected {
        return Err(NnError::Format(format!(
            "weight blob has {} values, shape {:?} needs {}",
            values.len(),
            shape,
            expected
        )));
    }
    Ok(Tensor::from_vec(shape, values))
}

/// Glorot-uniform initialization for parametric layers, zero biases.
fn init_params(spec: &LayerSpec, rng: &mut ChaCha8Rng) -> Option<LayerParams> {
    match *spec {
        LayerSpec::Dense { input, units, .. } => {
            let limit = (6.0 / (input + units) as f64).sqrt();
            Some(LayerParams {
                weights: sample_uniform(&[input, units], limit, rng),
                bias: Tensor::zeros(&[units]),
            })
        }
        LayerSpec::Conv1D {
            in_channels,
            filters,
            kernel,
            ..
        } => {
            let fan_in = kernel * in_channels;
            let fan_out = kernel * filters;
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            Some(LayerParams {
                weights: sample_uniform(&[kernel, in_channels, filters], limit, rng),
                bias: Tensor::zeros(&[filters]),
            })
        }
        _ => None,
    }
}

fn sample_uniform(shape: &[usize], limit: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let count: usize = shape.iter().product();
    let data = (0..count)
        .map(|_| rng.random_range(-limit..limit))
        .collect();
    Tensor::from_vec(shape, data)
}

fn check_param_shapes(spec: &LayerSpec, p: &LayerParams) -> Result<(), NnError> {
    let ok = match *spec {
        LayerSpec::Dense { input, units, .. } => {
            p.weights.shape() == [input, units] && p.bias.shape() == [units]
        }
        LayerSpec::Conv1D {
            in_channels,
            filters,
            kernel,
            ..
        } => p.weights.shape() == [kernel, in_channels, filters] && p.bias.shape() == [filters],
        _ => true,
    };
    if ok {
        Ok(())
    } else {
        Err(NnError::Format(
            "parameter shapes do not match layer spec".into(),
        ))
    }
}

/// Walk the layer chain and compute every intermediate shape, or fail if two
/// adjacent layers disagree.
pub fn shape_chain(input_features: usize, specs: &[LayerSpec]) -> Result<Vec<FeatShape>, NnError> {
    let mut cur = FeatShape::Flat(input_features);
    let mut out = Vec::with_capacity(specs.len());
    for (idx, spec) in specs.iter().enumerate() {
        cur = match *spec {
            LayerSpec::Dense { input, units, .. } => match cur {
                FeatShape::Flat(n) if n == input => FeatShape::Flat(units),
                other => {
                    return Err(NnError::BadSpec(format!(
                        "dense layer {idx} expects flat width {input}, got {other:?}"
                    )))
                }
            },
            LayerSpec::Conv1D {
                in_channels,
                filters,
                ..
            } => {
                let (len, ch) = match cur {
                    FeatShape::Flat(n) => (n, 1),
                    FeatShape::Seq { len, ch } => (len, ch),
                };
                if ch != in_channels {
                    return Err(NnError::BadSpec(format!(
                        "conv layer {idx} expects {in_channels} channels, got {ch}"
                    )));
                }
                FeatShape::Seq { len, ch: filters }
            }
            LayerSpec::MaxPool1D { stride, .. } => {
                let (len, ch) = match cur {
                    FeatShape::Flat(n) => (n, 1),
                    FeatShape::Seq { len, ch } => (len, ch),
                };
                if len == 0 {
                    return Err(NnError::BadSpec(format!(
                        "pool layer {idx} over empty length"
                    )));
                }
                FeatShape::Seq {
                    len: len.div_ceil(stride),
                    ch,
                }
            }
            LayerSpec::Dropout { .. } => cur,
            LayerSpec::Flatten => FeatShape::Flat(cur.element_count()),
        };
        out.push(cur);
    }
    Ok(out)
}
