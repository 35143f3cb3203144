//! Central-finite-difference verification of the hand-derived backward
//! passes.
//!
//! For a model with frozen dropout masks the training loss is a smooth
//! function of the parameters almost everywhere (ReLU kinks and pool
//! argmax switches are measure-zero), so every analytic gradient component
//! must agree with `(L(θ+h) - L(θ-h)) / 2h` up to truncation noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::loss::{bce, bce_grad};
use super::tensor::Tensor;
use super::{Activation, LayerSpec, Model, NnError};

/// Step size for the central difference. With losses of order 1 the
/// truncation error is ~h^2 and the rounding error ~1e-16/h, so 1e-5
/// keeps both far below the acceptance tolerance.
const STEP: f64 = 1e-5;

/// Relative tolerance on each gradient component.
pub const TOLERANCE: f64 = 1e-4;

/// Components whose analytic and numeric values are both below this are
/// treated as zero (the finite-difference noise floor).
const ABS_FLOOR: f64 = 1e-7;

/// Outcome of one architecture's check.
#[derive(Debug, Clone)]
pub struct ConfigResult {
    pub name: String,
    pub components_checked: usize,
    pub max_rel_err: f64,
}

/// Outcome of the whole suite.
#[derive(Debug, Clone)]
pub struct Report {
    pub configs: Vec<ConfigResult>,
    pub failures: Vec<String>,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn total_components(&self) -> usize {
        self.configs.iter().map(|c| c.components_checked).sum()
    }

    pub fn worst_rel_err(&self) -> f64 {
        self.configs
            .iter()
            .map(|c| c.max_rel_err)
            .fold(0.0, f64::max)
    }
}

/// One architecture + data instance to verify.
struct Case {
    name: String,
    model: Model,
    x: Tensor,
    y: Tensor,
    /// Cap on how many parameter components to probe (all if under the cap).
    budget: usize,
}

/// Run the standard suite: a spread of dense and convolutional stacks with
/// and without dropout and pooling, plus the two reference architectures.
/// Deterministic for a fixed seed.
pub fn run_standard_suite(seed: u64) -> Result<Report, NnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases = standard_cases(&mut rng)?;
    let mut report = Report {
        configs: Vec::with_capacity(cases.len()),
        failures: Vec::new(),
    };
    for case in cases {
        let result = check_case(&case, &mut rng)?;
        if result.max_rel_err > TOLERANCE {
            report.failures.push(format!(
                "{}: max relative error {:.3e} exceeds {:.0e}",
                result.name, result.max_rel_err, TOLERANCE
            ));
        }
        report.configs.push(result);
    }
    Ok(report)
}

fn standard_cases(rng: &mut ChaCha8Rng) -> Result<Vec<Case>, NnError> {
    let mut cases = Vec::new();

    // Plain dense stacks of varying depth/width.
    for (i, (inputs, hidden)) in [
        (1usize, vec![4usize]),
        (3, vec![8]),
        (6, vec![8, 4]),
        (10, vec![16, 8]),
        (5, vec![12, 6, 3]),
        (7, vec![9]),
    ]
    .into_iter()
    .enumerate()
    {
        let mut specs = Vec::new();
        let mut width = inputs;
        for h in &hidden {
            specs.push(LayerSpec::Dense {
                input: width,
                units: *h,
                activation: Some(Activation::Relu),
            });
            width = *h;
        }
        specs.push(LayerSpec::Dense {
            input: width,
            units: 1,
            activation: Some(Activation::Sigmoid),
        });
        cases.push(make_case(format!("dense-{i}"), inputs, specs, 3, rng)?);
    }

    // Dense with dropout in the middle.
    for (i, rate) in [0.25, 0.5].into_iter().enumerate() {
        let specs = vec![
            LayerSpec::Dense {
                input: 6,
                units: 12,
                activation: Some(Activation::Relu),
            },
            LayerSpec::Dropout { rate },
            LayerSpec::Dense {
                input: 12,
                units: 1,
                activation: Some(Activation::Sigmoid),
            },
        ];
        cases.push(make_case(format!("dense-dropout-{i}"), 6, specs, 2, rng)?);
    }

    // Single conv stage, assorted kernels/filters; odd and even lengths so
    // both full and singleton pool tails get exercised.
    for (i, (len, kernel, filters)) in [
        (4usize, 2usize, 3usize),
        (6, 3, 4),
        (7, 5, 2),
        (9, 8, 3),
        (5, 1, 2),
        (8, 4, 5),
    ]
    .into_iter()
    .enumerate()
    {
        let pooled = len.div_ceil(2);
        let specs = vec![
            LayerSpec::Conv1D {
                in_channels: 1,
                filters,
                kernel,
                activation: Some(Activation::Relu),
            },
            LayerSpec::MaxPool1D { pool: 2, stride: 2 },
            LayerSpec::Flatten,
            LayerSpec::Dense {
                input: pooled * filters,
                units: 1,
                activation: Some(Activation::Sigmoid),
            },
        ];
        cases.push(make_case(format!("conv-{i}"), len, specs, 2, rng)?);
    }

    // Two conv stages with pooling, no activation on the second conv so the
    // linear path is covered too.
    for (i, (len, f1, f2)) in [(6usize, 4usize, 3usize), (10, 3, 5), (9, 5, 2)]
        .into_iter()
        .enumerate()
    {
        let l1 = len.div_ceil(2);
        let l2 = l1.div_ceil(2);
        let specs = vec![
            LayerSpec::Conv1D {
                in_channels: 1,
                filters: f1,
                kernel: 3,
                activation: Some(Activation::Relu),
            },
            LayerSpec::MaxPool1D { pool: 2, stride: 2 },
            LayerSpec::Conv1D {
                in_channels: f1,
                filters: f2,
                kernel: 5,
                activation: None,
            },
            LayerSpec::MaxPool1D { pool: 2, stride: 2 },
            LayerSpec::Flatten,
            LayerSpec::Dense {
                input: l2 * f2,
                units: 1,
                activation: Some(Activation::Sigmoid),
            },
        ];
        cases.push(make_case(format!("conv2-{i}"), len, specs, 2, rng)?);
    }

    // Conv with dropout between pool and flatten.
    let specs = vec![
        LayerSpec::Conv1D {
            in_channels: 1,
            filters: 4,
            kernel: 3,
            activation: Some(Activation::Relu),
        },
        LayerSpec::MaxPool1D { pool: 2, stride: 2 },
        LayerSpec::Dropout { rate: 0.5 },
        LayerSpec::Flatten,
        LayerSpec::Dense {
            input: 3 * 4,
            units: 1,
            activation: Some(Activation::Sigmoid),
        },
    ];
    cases.push(make_case("conv-dropout".into(), 6, specs, 2, rng)?);

    // The two reference architectures at the production feature width.
    let cnn = crate::models::build_cnn(6, rng.random())?;
    cases.push(data_for("reference-cnn".into(), cnn, 2, 200, rng));
    let fnn = crate::models::build_fnn(6, rng.random())?;
    cases.push(data_for("reference-fnn".into(), fnn, 3, 400, rng));

    Ok(cases)
}

fn make_case(
    name: String,
    inputs: usize,
    specs: Vec<LayerSpec>,
    batch: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Case, NnError> {
    let model = Model::init_with_rng(inputs, specs, rng)?;
    Ok(data_for(name, model, batch, usize::MAX, rng))
}

fn data_for(name: String, model: Model, batch: usize, budget: usize, rng: &mut ChaCha8Rng) -> Case {
    let inputs = model.input_features();
    let x = Tensor::from_vec(
        &[batch, inputs],
        (0..batch * inputs)
            .map(|_| rng.random_range(-1.5..1.5))
            .collect(),
    );
    let y = Tensor::from_vec(
        &[batch, 1],
        (0..batch)
            .map(|_| f64::from(rng.random::<bool>()))
            .collect(),
    );
    Case {
        name,
        model,
        x,
        y,
        budget,
    }
}

fn check_case(case: &Case, rng: &mut ChaCha8Rng) -> Result<ConfigResult, NnError> {
    let mut model = case.model.clone();
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(rng.random());
    let (pred, caches) = model.forward_train(&case.x, &mut dropout_rng)?;
    let masks = Model::dropout_masks(&caches);
    let dl = bce_grad(&pred, &case.y)?;
    let analytic: Vec<Tensor> = model
        .backward(&caches, &dl)?
        .tensors()
        .into_iter()
        .cloned()
        .collect();

    let mut max_rel: f64 = 0.0;
    let mut checked = 0usize;
    for (slot, grad) in analytic.iter().enumerate() {
        let len = grad.len();
        let indices: Vec<usize> = if len <= case.budget {
            (0..len).collect()
        } else {
            // Deterministic subsample for the big reference models.
            (0..case.budget).map(|_| rng.random_range(0..len)).collect()
        };
        for idx in indices {
            let a = grad.data()[idx];
            let n = numeric_component(&mut model, slot, idx, &case.x, &case.y, &masks)?;
            checked += 1;
            if a.abs() < ABS_FLOOR && n.abs() < ABS_FLOOR {
                continue;
            }
            let rel = (a - n).abs() / a.abs().max(n.abs());
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    Ok(ConfigResult {
        name: case.name.clone(),
        components_checked: checked,
        max_rel_err: max_rel,
    })
}

/// Central difference of the loss along one parameter component,
/// restoring the original value bit-exactly afterwards.
fn numeric_component(
    model: &mut Model,
    slot: usize,
    idx: usize,
    x: &Tensor,
    y: &Tensor,
    masks: &[Option<Vec<f64>>],
) -> Result<f64, NnError> {
    let original = model.param_tensors()[slot].data()[idx];
    let set = |m: &mut Model, v: f64| m.param_tensors_mut()[slot].data_mut()[idx] = v;

    set(model, original + STEP);
    let plus = bce(&model.forward_with_masks(x, masks)?, y)?;
    set(model, original - STEP);
    let minus = bce(&model.forward_with_masks(x, masks)?, y)?;
    set(model, original);

    Ok((plus - minus) / (2.0 * STEP))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_has_at_least_twenty_configs() {
        let report = run_standard_suite(17).unwrap();
        assert!(
            report.configs.len() >= 20,
            "only {} configs",
            report.configs.len()
        );
    }
}
