//! Statistical-moment reduction of wavelet subbands.
//!
//! Each subband of each channel is summarized by four population moments:
//! mean, standard deviation, skewness and kurtosis (non-excess). The feature
//! vector is laid out channel-major, then subband (`D1..DL, AL`), then moment.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::CHANNELS;
use crate::wavelet::{dwt_decompose, WaveletError, WaveletSpec};

/// Below this standard deviation a sequence is treated as constant.
pub const DEGENERATE_SIGMA: f64 = 1e-12;

/// Moments per subband.
pub const MOMENTS_PER_BAND: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("cannot compute moments of an empty sequence")]
    Empty,
    #[error("expected {CHANNELS} channels, got {0}")]
    ChannelCount(usize),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("need at least 2 vectors to fit a scaler, got {0}")]
    TooFewVectors(usize),
    #[error(transparent)]
    Wavelet(#[from] WaveletError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatMoments {
    pub mean: f64,
    pub sigma: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

impl StatMoments {
    pub fn to_array(self) -> [f64; MOMENTS_PER_BAND] {
        [self.mean, self.sigma, self.skewness, self.kurtosis]
    }
}

/// Population mean, standard deviation, skewness and kurtosis of `s`.
///
/// When the standard deviation is below [`DEGENERATE_SIGMA`] the skewness and
/// kurtosis are reported as zero instead of dividing by ~0.
pub fn moments(s: &[f64]) -> Result<StatMoments, FeatureError> {
    if s.is_empty() {
        return Err(FeatureError::Empty);
    }
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let (m2, m3, m4) = s.iter().fold((0.0, 0.0, 0.0), |(m2, m3, m4), &v| {
        let d = v - mean;
        let d2 = d * d;
        (m2 + d2, m3 + d2 * d, m4 + d2 * d2)
    });
    let sigma = (m2 / n).sqrt();
    if sigma < DEGENERATE_SIGMA {
        return Ok(StatMoments {
            mean,
            sigma,
            skewness: 0.0,
            kurtosis: 0.0,
        });
    }
    let s2 = sigma * sigma;
    Ok(StatMoments {
        mean,
        sigma,
        skewness: m3 / (n * s2 * sigma),
        kurtosis: m4 / (n * s2 * s2),
    })
}

/// Length of the feature vector for `levels` decomposition levels.
pub fn feature_dim(levels: usize) -> usize {
    CHANNELS * (levels + 1) * MOMENTS_PER_BAND
}

/// Classifier input: concatenated per-channel, per-subband moments.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Features of one preprocessed 8-channel window.
pub fn feature_vector(
    window: &[Vec<f64>],
    spec: &WaveletSpec,
    levels: usize,
) -> Result<FeatureVector, FeatureError> {
    if window.len() != CHANNELS {
        return Err(FeatureError::ChannelCount(window.len()));
    }
    let mut values = Vec::with_capacity(feature_dim(levels));
    for channel in window {
        let sb = dwt_decompose(channel, spec, levels)?;
        for band in sb.bands() {
            values.extend(moments(band)?.to_array());
        }
    }
    Ok(FeatureVector(values))
}

/// Per-dimension z-score normalization.
///
/// A dimension whose training spread is zero has `sigma == 0` and is passed
/// through untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub means: Vec<f64>,
    pub sigmas: Vec<f64>,
}

impl FeatureScaler {
    /// Scaler that leaves vectors of dimension `dim` unchanged.
    pub fn identity(dim: usize) -> Self {
        Self {
            means: vec![0.0; dim],
            sigmas: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, FeatureError> {
        if v.len() != self.dim() {
            return Err(FeatureError::Dimension {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(v.iter()
            .zip(self.means.iter().zip(&self.sigmas))
            .map(|(&x, (&m, &s))| if s == 0.0 { x } else { (x - m) / s })
            .collect())
    }
}

/// Fit means and population standard deviations over `vectors`.
pub fn fit_scaler<V: AsRef<[f64]>>(vectors: &[V]) -> Result<FeatureScaler, FeatureError> {
    if vectors.len() < 2 {
        return Err(FeatureError::TooFewVectors(vectors.len()));
    }
    let dim = vectors[0].as_ref().len();
    for v in vectors {
        if v.as_ref().len() != dim {
            return Err(FeatureError::Dimension {
                expected: dim,
                found: v.as_ref().len(),
            });
        }
    }
    let n = vectors.len() as f64;
    let mut means = vec![0.0; dim];
    for v in vectors {
        for (m, x) in means.iter_mut().zip(v.as_ref()) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut sigmas = vec![0.0; dim];
    for v in vectors {
        for ((s, m), x) in sigmas.iter_mut().zip(&means).zip(v.as_ref()) {
            *s += (x - m) * (x - m);
        }
    }
    for (s, m) in sigmas.iter_mut().zip(means.iter_mut()) {
        *s = (*s / n).sqrt();
        if *s <= DEGENERATE_SIGMA * m.abs().max(1.0) {
            *s = 0.0;
            *m = 0.0;
        }
    }
    Ok(FeatureScaler { means, sigmas })
}

pub fn apply_scaler(scaler: &FeatureScaler, v: &FeatureVector) -> Result<FeatureVector, FeatureError> {
    scaler.apply(&v.0).map(FeatureVector)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn one_to_four() {
        let m = moments(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(close(m.mean, 2.5, 1e-15));
        assert!(close(m.sigma, 1.25f64.sqrt(), 1e-15));
        assert!(close(m.skewness, 0.0, 1e-15));
        assert!(close(m.kurtosis, 1.64, 1e-12));
    }

    #[test]
    fn constant_is_degenerate() {
        let m = moments(&[-3.0; 17]).unwrap();
        assert_eq!(m, StatMoments { mean: -3.0, sigma: 0.0, skewness: 0.0, kurtosis: 0.0 });
    }

    #[test]
    fn alternating() {
        let s: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let m = moments(&s).unwrap();
        assert_eq!(m.to_array(), [0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn empty_is_error() {
        assert_eq!(moments(&[]).unwrap_err(), FeatureError::Empty);
    }

    #[test]
    fn zero_window_gives_zero_vector() {
        let w = vec![vec![0.0; 200]; CHANNELS];
        let f = feature_vector(&w, &WaveletSpec::db4(), 3).unwrap();
        assert_eq!(f.len(), 128);
        assert_eq!(feature_dim(3), 128);
        assert!(f.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn feature_vector_errors() {
        let w = vec![vec![0.0; 200]; 4];
        assert_eq!(
            feature_vector(&w, &WaveletSpec::db4(), 3).unwrap_err(),
            FeatureError::ChannelCount(4)
        );
        let w = vec![vec![0.0; 100]; CHANNELS];
        assert!(matches!(
            feature_vector(&w, &WaveletSpec::db4(), 3),
            Err(FeatureError::Wavelet(WaveletError::Divisibility { .. }))
        ));
    }

    #[test]
    fn scaler_centers_midpoint() {
        let s = fit_scaler(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(s.apply(&[1.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn zero_spread_passes_through() {
        let s = fit_scaler(&[vec![5.0, 1.0], vec![5.0, 3.0], vec![5.0, 2.0]]).unwrap();
        assert_eq!(s.sigmas[0], 0.0);
        let out = s.apply(&[7.5, 2.0]).unwrap();
        assert_eq!(out[0], 7.5);
        assert!(close(out[1], 0.0, 1e-15));
    }

    #[test]
    fn scaler_errors() {
        assert_eq!(fit_scaler(&[vec![1.0]]).unwrap_err(), FeatureError::TooFewVectors(1));
        assert!(matches!(
            fit_scaler(&[vec![1.0], vec![1.0, 2.0]]),
            Err(FeatureError::Dimension { expected: 1, found: 2 })
        ));
        let s = FeatureScaler::identity(3);
        assert!(s.apply(&[1.0]).is_err());
        assert_eq!(s.apply(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn scaled_training_set_is_standardized() {
        let data: Vec<Vec<f64>> = (0..50)
            .map(|i| {
                let x = i as f64;
                vec![x * 0.3 - 4.0, (x * 1.7).sin() * 20.0 + 100.0, 1e-3 * x * x]
            })
            .collect();
        let s = fit_scaler(&data).unwrap();
        let scaled: Vec<Vec<f64>> = data.iter().map(|v| s.apply(v).unwrap()).collect();
        for d in 0..3 {
            let n = scaled.len() as f64;
            let mean = scaled.iter().map(|v| v[d]).sum::<f64>() / n;
            let var = scaled.iter().map(|v| (v[d] - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-9);
            assert!((var.sqrt() - 1.0).abs() < 1e-9);
        }
    }
}
