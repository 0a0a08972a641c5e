//! Raw window -> filtered block -> wavelet moments, plus the windowing rules
//! shared by training and recognition.

use thiserror::Error;

use crate::dsp::{FilterConfig, FilterError, Preprocessor};
use crate::features::{feature_dim, feature_vector, FeatureError, FeatureVector};
use crate::model::{EmgRecording, Gesture, CHANNELS};
use crate::wavelet::{check_decomposable, WaveletError, WaveletSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Wavelet(#[from] WaveletError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("{seconds} s at {fs} Hz is not a whole number of samples")]
    Fractional { seconds: f64, fs: f64 },
}

/// Convert a duration to a sample count, refusing fractional results.
pub fn seconds_to_samples(seconds: f64, fs: f64) -> Result<usize, PipelineError> {
    let exact = seconds * fs;
    let n = exact.round();
    if !(n >= 0.0) || (exact - n).abs() > 1e-6 {
        return Err(PipelineError::Fractional { seconds, fs });
    }
    Ok(n as usize)
}

/// Preprocessing and feature extraction for one window.
#[derive(Debug, Clone)]
pub struct FeaturePipeline {
    pre: Preprocessor,
    wavelet: WaveletSpec,
    levels: usize,
}

impl FeaturePipeline {
    pub fn new(filter: &FilterConfig, wavelet: WaveletSpec, levels: usize) -> Result<Self, PipelineError> {
        Ok(Self {
            pre: Preprocessor::new(filter)?,
            wavelet,
            levels,
        })
    }

    pub fn filter(&self) -> &FilterConfig {
        self.pre.config()
    }

    pub fn wavelet(&self) -> &WaveletSpec {
        &self.wavelet
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dim(&self) -> usize {
        feature_dim(self.levels)
    }

    /// Fail early if windows of `len` samples cannot be decomposed.
    pub fn check_window_len(&self, len: usize) -> Result<(), PipelineError> {
        Ok(check_decomposable(len, &self.wavelet, self.levels)?)
    }

    /// Features of a raw channel-major block.
    pub fn features(&self, raw: &[Vec<f64>]) -> Result<FeatureVector, PipelineError> {
        let filtered = self.pre.block(raw)?;
        Ok(feature_vector(&filtered, &self.wavelet, self.levels)?)
    }
}

/// Mean absolute value over every sample of every channel.
pub fn mean_abs(window: &[Vec<f64>]) -> f64 {
    let n: usize = window.iter().map(Vec::len).sum();
    if n == 0 {
        return 0.0;
    }
    window.iter().flatten().map(|v| v.abs()).sum::<f64>() / n as f64
}

/// Activity gate: true when the window's mean absolute value reaches
/// `threshold`.
pub fn activity_gate(window: &[Vec<f64>], threshold: f64) -> bool {
    debug_assert_eq!(window.len(), CHANNELS);
    mean_abs(window) >= threshold
}

/// Start offsets of every full window of `len` samples stepped by `hop`.
pub fn window_starts(total: usize, len: usize, hop: usize) -> impl Iterator<Item = usize> {
    let last = total.checked_sub(len);
    (0..).map(move |k| k * hop).take_while(move |&s| last.is_some_and(|l| s <= l))
}

/// A labelled training window cut from a recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledWindow {
    pub start: usize,
    pub gesture: Gesture,
}

/// Windows lying entirely inside one non-Rest label segment whose raw
/// activity passes the gate. Windows that straddle two labels are dropped.
///
/// Returns `None` when the recording carries no labels.
pub fn labeled_windows(
    rec: &EmgRecording,
    len: usize,
    hop: usize,
    threshold: f64,
) -> Option<Vec<LabeledWindow>> {
    let labels = rec.labels()?;
    let windows = window_starts(rec.len(), len, hop)
        .filter_map(|start| {
            let span = &labels[start..start + len];
            let gesture = span[len / 2];
            if gesture.is_rest() || span.iter().any(|&g| g != gesture) {
                return None;
            }
            activity_gate(&rec.channel_block(start, start + len), threshold)
                .then_some(LabeledWindow { start, gesture })
        })
        .collect();
    Some(windows)
}
