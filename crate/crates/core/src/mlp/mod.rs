//! Feedforward log-sigmoid perceptron, backpropagation and model files.

mod network;
mod persist;
mod train;

pub use network::{grad_check, grad_check_with, logsig, Gradients, Network};
pub use persist::{load_model, save_model, MODEL_VERSION};
pub use train::{train, train_network, EpochRecord, StopReason, TrainConfig, TrainHistory};

use thiserror::Error;

use crate::features::{FeatureError, FeatureScaler};
use crate::model::Gesture;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlpError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("training data has a single class ({0}); need at least two")]
    SingleClass(Gesture),
    #[error("training data is empty")]
    EmptyDataset,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("model version `{found}` is not supported (expected `{MODEL_VERSION}`)")]
    Version { found: String },
    #[error("malformed model file: {0}")]
    Format(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Result of classifying one feature vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub gesture: Gesture,
    pub confidence: f64,
}

/// Anything that maps a raw feature vector to one of a fixed list of gestures.
pub trait GestureClassifier {
    fn classes(&self) -> &[Gesture];
    fn classify(&self, x: &[f64]) -> Result<Classification, MlpError>;
}

impl<T: GestureClassifier + ?Sized> GestureClassifier for &T {
    fn classes(&self) -> &[Gesture] {
        (**self).classes()
    }

    fn classify(&self, x: &[f64]) -> Result<Classification, MlpError> {
        (**self).classify(x)
    }
}

/// A trained network together with its input scaler and output labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    network: Network,
    scaler: FeatureScaler,
    classes: Vec<Gesture>,
}

impl MlpModel {
    pub fn new(network: Network, scaler: FeatureScaler, classes: Vec<Gesture>) -> Result<Self, MlpError> {
        if network.output_dim() != classes.len() {
            return Err(MlpError::Invalid(format!(
                "{} output units for {} classes",
                network.output_dim(),
                classes.len()
            )));
        }
        if scaler.dim() != network.input_dim() || scaler.sigmas.len() != scaler.means.len() {
            return Err(MlpError::Invalid(format!(
                "scaler has {} means and {} sigmas for {} inputs",
                scaler.means.len(),
                scaler.sigmas.len(),
                network.input_dim()
            )));
        }
        let finite = scaler.means.iter().chain(&scaler.sigmas).all(|v| v.is_finite());
        if !finite || !network.is_finite() {
            return Err(MlpError::Invalid("non-finite parameter".into()));
        }
        let mut seen = classes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != classes.len() {
            return Err(MlpError::Invalid("duplicate class label".into()));
        }
        Ok(Self {
            network,
            scaler,
            classes,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn scaler(&self) -> &FeatureScaler {
        &self.scaler
    }

    pub fn layer_sizes(&self) -> &[usize] {
        self.network.layer_sizes()
    }

    pub fn input_dim(&self) -> usize {
        self.network.input_dim()
    }

    /// Scale `x` and run it through the network.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, MlpError> {
        self.check_dim(x)?;
        let scaled = self.scaler.apply(x)?;
        Ok(self.network.output(&scaled))
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), MlpError> {
        if x.len() != self.input_dim() {
            return Err(MlpError::Dimension {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }
}

impl GestureClassifier for MlpModel {
    fn classes(&self) -> &[Gesture] {
        &self.classes
    }

    fn classify(&self, x: &[f64]) -> Result<Classification, MlpError> {
        let out = self.forward(x)?;
        let (idx, conf) = argmax(&out);
        Ok(Classification {
            gesture: self.classes[idx],
            confidence: conf,
        })
    }
}

/// Index and value of the largest entry; the first wins ties.
pub fn argmax(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best })
}
