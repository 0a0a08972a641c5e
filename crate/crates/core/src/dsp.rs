//! Bandpass and powerline-notch filtering of raw EMG.
//!
//! Filters are cascades of second-order sections designed with the bilinear
//! transform. Every call starts from zero state, so a window filters the same
//! way regardless of what came before it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::CHANNELS;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("invalid filter config: {0}")]
    Config(String),
    #[error("expected {CHANNELS} channels, got {0}")]
    ChannelCount(usize),
    #[error("channels have unequal lengths")]
    RaggedBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub fs: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub bp_order: usize,
    pub notch_f0: f64,
    pub notch_q: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            fs: f64::from(crate::model::DEFAULT_FS),
            band_lo: 10.0,
            band_hi: 95.0,
            bp_order: 4,
            notch_f0: 50.0,
            notch_q: 30.0,
        }
    }
}

impl FilterConfig {
    pub fn with_fs(fs: f64) -> Self {
        Self {
            fs,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        let nyquist = self.fs / 2.0;
        let bad = |msg: String| Err(FilterError::Config(msg));
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return bad(format!("fs must be positive, got {}", self.fs));
        }
        if !(self.band_lo > 0.0 && self.band_lo < self.band_hi && self.band_hi < nyquist) {
            return bad(format!(
                "need 0 < band_lo < band_hi < fs/2, got {} / {} with fs/2 = {nyquist}",
                self.band_lo, self.band_hi
            ));
        }
        if self.bp_order == 0 || !self.bp_order.is_multiple_of(2) {
            return bad(format!("bp_order must be even and positive, got {}", self.bp_order));
        }
        if !(self.notch_f0 > 0.0 && self.notch_f0 < nyquist) {
            return bad(format!("notch_f0 {} must lie in (0, fs/2)", self.notch_f0));
        }
        if !(self.notch_q.is_finite() && self.notch_q > 0.0) {
            return bad(format!("notch_q must be positive, got {}", self.notch_q));
        }
        Ok(())
    }
}

/// Normalized second-order section (`a0 == 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn normalized(b: [f64; 3], a0: f64, a1: f64, a2: f64) -> Self {
        Self {
            b: [b[0] / a0, b[1] / a0, b[2] / a0],
            a: [a1 / a0, a2 / a0],
        }
    }

    fn lowpass(fs: f64, f0: f64, q: f64) -> Self {
        let (cw, alpha) = rbj_terms(fs, f0, q);
        let k = (1.0 - cw) / 2.0;
        Self::normalized([k, 2.0 * k, k], 1.0 + alpha, -2.0 * cw, 1.0 - alpha)
    }

    fn highpass(fs: f64, f0: f64, q: f64) -> Self {
        let (cw, alpha) = rbj_terms(fs, f0, q);
        let k = (1.0 + cw) / 2.0;
        Self::normalized([k, -2.0 * k, k], 1.0 + alpha, -2.0 * cw, 1.0 - alpha)
    }

    fn notch(fs: f64, f0: f64, q: f64) -> Self {
        let (cw, alpha) = rbj_terms(fs, f0, q);
        Self::normalized([1.0, -2.0 * cw, 1.0], 1.0 + alpha, -2.0 * cw, 1.0 - alpha)
    }

    // first-order sections ride in a biquad with zeroed second taps
    fn lowpass_first_order(fs: f64, f0: f64) -> Self {
        let k = (PI * f0 / fs).tan();
        Self::normalized([k, k, 0.0], 1.0 + k, k - 1.0, 0.0)
    }

    fn highpass_first_order(fs: f64, f0: f64) -> Self {
        let k = (PI * f0 / fs).tan();
        Self::normalized([1.0, -1.0, 0.0], 1.0 + k, k - 1.0, 0.0)
    }

    /// Complex gain at `freq` Hz, returned as (re, im).
    pub fn response(&self, fs: f64, freq: f64) -> (f64, f64) {
        let w = 2.0 * PI * freq / fs;
        let (c1, s1, c2, s2) = (w.cos(), -w.sin(), (2.0 * w).cos(), -(2.0 * w).sin());
        let num = (self.b[0] + self.b[1] * c1 + self.b[2] * c2, self.b[1] * s1 + self.b[2] * s2);
        let den = (1.0 + self.a[0] * c1 + self.a[1] * c2, self.a[0] * s1 + self.a[1] * s2);
        let mag = den.0 * den.0 + den.1 * den.1;
        (
            (num.0 * den.0 + num.1 * den.1) / mag,
            (num.1 * den.0 - num.0 * den.1) / mag,
        )
    }
}

fn rbj_terms(fs: f64, f0: f64, q: f64) -> (f64, f64) {
    let w0 = 2.0 * PI * f0 / fs;
    (w0.cos(), w0.sin() / (2.0 * q))
}

/// Quality factors of the conjugate pole pairs of an analog Butterworth
/// prototype, plus whether a lone real pole remains.
fn butterworth_sections(order: usize) -> (Vec<f64>, bool) {
    let qs = (0..order / 2)
        .map(|k| {
            let theta = PI * (2 * k + 1) as f64 / (2 * order) as f64;
            1.0 / (2.0 * theta.sin())
        })
        .collect();
    (qs, order % 2 == 1)
}

/// A cascade of biquads applied in order.
#[derive(Debug, Clone, PartialEq)]
pub struct SosCascade {
    sections: Vec<Biquad>,
}

impl SosCascade {
    pub fn new(sections: Vec<Biquad>) -> Self {
        Self { sections }
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Butterworth bandpass as a highpass at `lo` followed by a lowpass at
    /// `hi`, each of half the total order.
    pub fn butterworth_bandpass(fs: f64, lo: f64, hi: f64, order: usize) -> Self {
        let half = order / 2;
        let (qs, odd) = butterworth_sections(half);
        let mut sections = Vec::with_capacity(order);
        if odd {
            sections.push(Biquad::highpass_first_order(fs, lo));
        }
        sections.extend(qs.iter().map(|&q| Biquad::highpass(fs, lo, q)));
        if odd {
            sections.push(Biquad::lowpass_first_order(fs, hi));
        }
        sections.extend(qs.iter().map(|&q| Biquad::lowpass(fs, hi, q)));
        Self { sections }
    }

    pub fn notch(fs: f64, f0: f64, q: f64) -> Self {
        Self {
            sections: vec![Biquad::notch(fs, f0, q)],
        }
    }

    /// Filter `signal` from zero initial conditions (transposed direct form II).
    pub fn apply(&self, signal: &[f64]) -> Vec<f64> {
        let mut out = signal.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for x in out.iter_mut() {
                let y = s.b[0] * *x + z1;
                z1 = s.b[1] * *x - s.a[0] * y + z2;
                z2 = s.b[2] * *x - s.a[1] * y;
                *x = y;
            }
        }
        out
    }

    /// Magnitude response at `freq` Hz.
    pub fn gain(&self, fs: f64, freq: f64) -> f64 {
        self.sections
            .iter()
            .map(|s| {
                let (re, im) = s.response(fs, freq);
                re.hypot(im)
            })
            .product()
    }
}

/// Coefficients for a validated [`FilterConfig`], computed once and reused
/// across windows.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessor {
    cfg: FilterConfig,
    bandpass: SosCascade,
    notch: SosCascade,
}

impl Preprocessor {
    pub fn new(cfg: &FilterConfig) -> Result<Self, FilterError> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.clone(),
            bandpass: SosCascade::butterworth_bandpass(cfg.fs, cfg.band_lo, cfg.band_hi, cfg.bp_order),
            notch: SosCascade::notch(cfg.fs, cfg.notch_f0, cfg.notch_q),
        })
    }

    pub fn config(&self) -> &FilterConfig {
        &self.cfg
    }

    pub fn bandpass(&self, signal: &[f64]) -> Vec<f64> {
        self.bandpass.apply(signal)
    }

    pub fn notch(&self, signal: &[f64]) -> Vec<f64> {
        self.notch.apply(signal)
    }

    /// Bandpass then notch, one channel at a time.
    pub fn channel(&self, signal: &[f64]) -> Vec<f64> {
        self.notch.apply(&self.bandpass.apply(signal))
    }

    pub fn block(&self, window: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, FilterError> {
        check_block(window)?;
        Ok(window.iter().map(|c| self.channel(c)).collect())
    }
}

fn check_block(window: &[Vec<f64>]) -> Result<(), FilterError> {
    if window.len() != CHANNELS {
        return Err(FilterError::ChannelCount(window.len()));
    }
    if window.iter().any(|c| c.len() != window[0].len()) {
        return Err(FilterError::RaggedBlock);
    }
    Ok(())
}

pub fn bandpass(signal: &[f64], cfg: &FilterConfig) -> Result<Vec<f64>, FilterError> {
    Ok(Preprocessor::new(cfg)?.bandpass(signal))
}

pub fn notch(signal: &[f64], cfg: &FilterConfig) -> Result<Vec<f64>, FilterError> {
    Ok(Preprocessor::new(cfg)?.notch(signal))
}

/// Per-channel bandpass then notch over an 8-channel block.
pub fn preprocess(window: &[Vec<f64>], cfg: &FilterConfig) -> Result<Vec<Vec<f64>>, FilterError> {
    Preprocessor::new(cfg)?.block(window)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs).sin()).collect()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn default_config_is_valid() {
        FilterConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_configs() {
        let base = FilterConfig::default();
        let cases = [
            FilterConfig { band_lo: 0.0, ..base.clone() },
            FilterConfig { band_hi: 100.0, ..base.clone() },
            FilterConfig { band_lo: 60.0, band_hi: 50.0, ..base.clone() },
            FilterConfig { bp_order: 3, ..base.clone() },
            FilterConfig { bp_order: 0, ..base.clone() },
            FilterConfig { notch_f0: 100.0, ..base.clone() },
            FilterConfig { notch_q: 0.0, ..base.clone() },
            FilterConfig { fs: -1.0, ..base.clone() },
        ];
        for cfg in cases {
            assert!(matches!(cfg.validate(), Err(FilterError::Config(_))), "{cfg:?}");
            assert!(bandpass(&[0.0], &cfg).is_err());
        }
    }

    #[test]
    fn butterworth_q_values() {
        let (q2, odd2) = butterworth_sections(2);
        assert!(!odd2);
        assert!((q2[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let (q4, _) = butterworth_sections(4);
        assert!((q4[0] - 1.306_562_964_876_376_6).abs() < 1e-12);
        assert!((q4[1] - 0.541_196_100_146_197).abs() < 1e-12);
        let (q3, odd3) = butterworth_sections(3);
        assert!(odd3);
        assert!((q3[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bandpass_corner_gains_are_half_power() {
        let cfg = FilterConfig::default();
        let bp = SosCascade::butterworth_bandpass(cfg.fs, cfg.band_lo, cfg.band_hi, cfg.bp_order);
        assert!(bp.gain(cfg.fs, 0.0) < 1e-12);
        assert!((bp.gain(cfg.fs, 50.0) - 1.0).abs() < 0.01);
        // each edge sees its own section at -3 dB, the other nearly flat
        assert!((bp.gain(cfg.fs, 10.0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.01);
        for order in [2, 6, 8] {
            let bp = SosCascade::butterworth_bandpass(cfg.fs, cfg.band_lo, cfg.band_hi, order);
            assert!(bp.gain(cfg.fs, 0.0) < 1e-12);
            assert!(bp.gain(cfg.fs, 50.0) > 0.95, "order {order}");
        }
    }

    #[test]
    fn constant_is_rejected_by_bandpass() {
        let cfg = FilterConfig::default();
        let c = 3.5;
        let out = bandpass(&vec![c; 400], &cfg).unwrap();
        for v in &out[200..] {
            assert!(v.abs() < 1e-3 * c, "{v}");
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let cfg = FilterConfig::default();
        assert!(bandpass(&[0.0; 64], &cfg).unwrap().iter().all(|&v| v == 0.0));
        assert!(notch(&[0.0; 64], &cfg).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn passband_tone_keeps_its_level() {
        let cfg = FilterConfig::default();
        let out = bandpass(&tone(50.0, 200.0, 1000), &cfg).unwrap();
        let level = rms(&out[800..]);
        let unit = std::f64::consts::FRAC_1_SQRT_2;
        assert!(level >= 0.707 * unit && level <= unit, "{level}");
    }

    #[test]
    fn notch_kills_powerline_and_keeps_dc() {
        let cfg = FilterConfig::default();
        let out = notch(&tone(50.0, 200.0, 2000), &cfg).unwrap();
        assert!(rms(&out[1800..]) <= 0.02 * std::f64::consts::FRAC_1_SQRT_2);
        let out = notch(&vec![2.0; 2000], &cfg).unwrap();
        assert!((out[1999] - 2.0).abs() < 1e-3 * 2.0);
        let n = SosCascade::notch(200.0, 60.0, 30.0);
        assert!((n.gain(200.0, 0.0) - 1.0).abs() < 1e-12);
        assert!(n.gain(200.0, 60.0) < 1e-9);
    }

    #[test]
    fn block_shape_errors() {
        let cfg = FilterConfig::default();
        let block = vec![vec![0.0; 10]; 7];
        assert_eq!(preprocess(&block, &cfg).unwrap_err(), FilterError::ChannelCount(7));
        let mut block = vec![vec![0.0; 10]; 8];
        block[4].pop();
        assert_eq!(preprocess(&block, &cfg).unwrap_err(), FilterError::RaggedBlock);
    }

    #[test]
    fn first_order_sections_match_bilinear_corner() {
        let lp = SosCascade::new(vec![Biquad::lowpass_first_order(200.0, 30.0)]);
        let hp = SosCascade::new(vec![Biquad::highpass_first_order(200.0, 30.0)]);
        let half = std::f64::consts::FRAC_1_SQRT_2;
        assert!((lp.gain(200.0, 30.0) - half).abs() < 1e-12);
        assert!((hp.gain(200.0, 30.0) - half).abs() < 1e-12);
        assert!((lp.gain(200.0, 0.0) - 1.0).abs() < 1e-12);
        assert!(hp.gain(200.0, 0.0) < 1e-12);
    }
}
