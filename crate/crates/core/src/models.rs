//! Builders for the two reference classifier architectures.
//!
//! Both take the input feature count and a seed and return a ready-to-train
//! [`Model`]: a three-stage 1-D CNN and a three-layer fully connected
//! network, each ending in a single sigmoid unit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::nn::{Activation, LayerSpec, Model, NnError};

/// The two supported architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchName {
    Cnn,
    Fnn,
}

impl ArchName {
    pub const ALL: [ArchName; 2] = [ArchName::Cnn, ArchName::Fnn];

    pub fn build(self, n_features: usize, seed: u64) -> Result<Model, NnError> {
        match self {
            ArchName::Cnn => build_cnn(n_features, seed),
            ArchName::Fnn => build_fnn(n_features, seed),
        }
    }
}

impl fmt::Display for ArchName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArchName::Cnn => write!(f, "cnn"),
            ArchName::Fnn => write!(f, "fnn"),
        }
    }
}

impl FromStr for ArchName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cnn" => Ok(ArchName::Cnn),
            "fnn" => Ok(ArchName::Fnn),
            other => Err(format!("unknown model '{other}', expected cnn or fnn")),
        }
    }
}

/// 1-D CNN: three conv/pool stages (64, 32, 16 filters with kernels 8, 16, 3,
/// all ReLU, SAME padding), dropout 0.5, flatten, Dense(64, ReLU),
/// Dense(1, Sigmoid).
pub fn build_cnn(n_features: usize, seed: u64) -> Result<Model, NnError> {
    if n_features < 1 {
        return Err(NnError::BadSpec(
            "cnn needs at least one input feature".into(),
        ));
    }
    // Sequence length after the three stride-2 pools (odd tails round up).
    let pooled_len = n_features.div_ceil(2).div_ceil(2).div_ceil(2);
    let flat = pooled_len * 16;
    let specs = vec![
        LayerSpec::Conv1D {
            in_channels: 1,
            filters: 64,
            kernel: 8,
            activation: Some(Activation::Relu),
        },
        LayerSpec::MaxPool1D { pool: 2, stride: 2 },
        LayerSpec::Conv1D {
            in_channels: 64,
            filters: 32,
            kernel: 16,
            activation: Some(Activation::Relu),
        },
        LayerSpec::MaxPool1D { pool: 2, stride: 2 },
        LayerSpec::Conv1D {
            in_channels: 32,
            filters: 16,
            kernel: 3,
            activation: Some(Activation::Relu),
        },
        LayerSpec::MaxPool1D { pool: 2, stride: 2 },
        LayerSpec::Dropout { rate: 0.5 },
        LayerSpec::Flatten,
        LayerSpec::Dense {
            input: flat,
            units: 64,
            activation: Some(Activation::Relu),
        },
        LayerSpec::Dense {
            input: 64,
            units: 1,
            activation: Some(Activation::Sigmoid),
        },
    ];
    Model::init(n_features, specs, seed)
}

/// Fully connected network: Dense(64, ReLU) -> Dense(32, ReLU) ->
/// Dense(1, Sigmoid).
pub fn build_fnn(n_features: usize, seed: u64) -> Result<Model, NnError> {
    if n_features < 1 {
        return Err(NnError::BadSpec(
            "fnn needs at least one input feature".into(),
        ));
    }
    let specs = vec![
        LayerSpec::Dense {
            input: n_features,
            units: 64,
            activation: Some(Activation::Relu),
        },
        LayerSpec::Dense {
            input: 64,
            units: 32,
            activation: Some(Activation::Relu),
        },
        LayerSpec::Dense {
            input: 32,
            units: 1,
            activation: Some(Activation::Sigmoid),
        },
    ];
    Model::init(n_features, specs, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{FeatShape, Tensor};

    #[test]
    fn fnn_parameter_counts() {
        // Hand arithmetic: n·64+64 + 64·32+32 + 32·1+1.
        assert_eq!(build_fnn(6, 0).unwrap().param_count(), 2_561);
        assert_eq!(build_fnn(1, 0).unwrap().param_count(), 2_241);
    }

    #[test]
    fn cnn_parameter_count_and_flatten_width() {
        let m = build_cnn(6, 0).unwrap();
        // conv1 8·1·64+64 = 576; conv2 16·64·32+32 = 32,800;
        // conv3 3·32·16+16 = 1,552; dense 16·64+64 = 1,088; out 64·1+1 = 65.
        assert_eq!(m.param_count(), 36_081);
        let shapes = m.shapes();
        // Lengths 6 -> 3 -> 2 -> 1; flatten is 1 x 16 channels.
        assert_eq!(shapes[1], FeatShape::Seq { len: 3, ch: 64 });
        assert_eq!(shapes[3], FeatShape::Seq { len: 2, ch: 32 });
        assert_eq!(shapes[5], FeatShape::Seq { len: 1, ch: 16 });
        assert_eq!(shapes[7], FeatShape::Flat(16));
    }

    #[test]
    fn cnn_layer_census() {
        let m = build_cnn(6, 0).unwrap();
        let convs = m
            .specs()
            .iter()
            .filter(|s| matches!(s, LayerSpec::Conv1D { .. }))
            .count();
        let pools = m
            .specs()
            .iter()
            .filter(|s| matches!(s, LayerSpec::MaxPool1D { .. }))
            .count();
        let dense = m
            .specs()
            .iter()
            .filter(|s| matches!(s, LayerSpec::Dense { .. }))
            .count();
        assert_eq!((convs, pools, dense), (3, 3, 2));
        let fnn = build_fnn(6, 0).unwrap();
        assert_eq!(fnn.layer_count(), 3);
    }

    #[test]
    fn cnn_single_feature_degenerates_gracefully() {
        let m = build_cnn(1, 3).unwrap();
        // All sequence lengths collapse to 1 but the model stays valid.
        let x = Tensor::from_vec(&[2, 1], vec![0.3, 0.9]);
        let y = m.forward(&x).unwrap();
        assert_eq!(y.shape(), &[2, 1]);
    }

    #[test]
    fn builders_reject_zero_features() {
        assert!(build_cnn(0, 0).is_err());
        assert!(build_fnn(0, 0).is_err());
    }

    #[test]
    fn outputs_are_probabilities() {
        let x = Tensor::from_vec(&[4, 6], (0..24).map(|i| (i as f64).sin()).collect());
        for arch in ArchName::ALL {
            let m = arch.build(6, 11).unwrap();
            let y = m.forward(&x).unwrap();
            assert_eq!(y.shape(), &[4, 1]);
            assert!(y.data().iter().all(|&p| (0.0..=1.0).contains(&p)), "{arch}");
        }
    }

    #[test]
    fn same_seed_reproduces_initial_parameters() {
        for arch in ArchName::ALL {
            let a = arch.build(6, 42).unwrap();
            let b = arch.build(6, 42).unwrap();
            for (ta, tb) in a.param_tensors().iter().zip(b.param_tensors()) {
                assert_eq!(ta.data(), tb.data());
            }
        }
    }

    #[test]
    fn arch_name_round_trips_through_strings() {
        assert_eq!("cnn".parse::<ArchName>().unwrap(), ArchName::Cnn);
        assert_eq!("FNN".parse::<ArchName>().unwrap(), ArchName::Fnn);
        assert!("mlp".parse::<ArchName>().is_err());
        assert_eq!(ArchName::Cnn.to_string(), "cnn");
    }
}
