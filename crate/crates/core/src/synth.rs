//! Seeded synthetic 8-channel EMG.
//!
//! Each gesture is modelled as band-limited Gaussian noise whose per-channel
//! RMS follows a fixed amplitude profile. Rest is the noise floor alone. A
//! 50 Hz powerline tone is added to every channel before quantization.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::dsp::SosCascade;
use crate::model::{EmgRecording, Gesture, CHANNELS};

const POWERLINE_HZ: f64 = 50.0;
// samples discarded while the excitation filter settles
const WARMUP: usize = 128;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("segment {index}: duration {seconds} s must be positive")]
    Duration { index: usize, seconds: f64 },
    #[error("segment {index}: {seconds} s at {fs} Hz is not a whole number of samples")]
    Fractional { index: usize, seconds: f64, fs: u32 },
    #[error("no template for {0}")]
    MissingTemplate(Gesture),
    #[error("invalid template for {gesture}: {reason}")]
    Template { gesture: Gesture, reason: String },
    #[error("invalid plan: {0}")]
    Plan(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GestureTemplate {
    pub gesture: Gesture,
    /// Per-channel RMS in raw units.
    pub amp_profile: [f64; CHANNELS],
    /// Passband of the excitation noise, Hz.
    pub band: (f64, f64),
}

impl GestureTemplate {
    fn validate(&self, fs: f64) -> Result<(), SynthError> {
        let fail = |reason: String| {
            Err(SynthError::Template {
                gesture: self.gesture,
                reason,
            })
        };
        if self.amp_profile.iter().any(|a| !(*a >= 0.0)) {
            return fail("negative amplitude".into());
        }
        if !self.gesture.is_rest() && self.amp_profile.iter().all(|&a| a == 0.0) {
            return fail("all channels silent".into());
        }
        let (lo, hi) = self.band;
        if !(lo > 0.0 && lo < hi && hi < fs / 2.0) {
            return fail(format!("band {lo}-{hi} Hz outside (0, {})", fs / 2.0));
        }
        Ok(())
    }
}

/// Five templates with distinct channel activation patterns.
pub fn default_templates() -> Vec<GestureTemplate> {
    let band = (20.0, 90.0);
    let t = |gesture, amp_profile| GestureTemplate {
        gesture,
        amp_profile,
        band,
    };
    vec![
        t(Gesture::FingersSpread, [18.0, 8.0, 5.0, 5.0, 7.0, 12.0, 30.0, 42.0]),
        t(Gesture::Fist, [44.0, 40.0, 36.0, 32.0, 24.0, 20.0, 28.0, 38.0]),
        t(Gesture::WaveIn, [6.0, 9.0, 26.0, 45.0, 38.0, 14.0, 7.0, 5.0]),
        t(Gesture::WaveOut, [10.0, 34.0, 45.0, 24.0, 8.0, 5.0, 6.0, 8.0]),
        t(Gesture::DoubleTap, [14.0, 10.0, 7.0, 9.0, 28.0, 44.0, 24.0, 12.0]),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionPlan {
    pub segments: Vec<(Gesture, f64)>,
    pub fs: u32,
    /// RMS of the Gaussian floor present on every sample.
    pub noise_floor: f64,
    /// Peak amplitude of the 50 Hz tone.
    pub powerline_amp: f64,
    pub rng_seed: u64,
}

impl SessionPlan {
    pub fn new(segments: Vec<(Gesture, f64)>, fs: u32, rng_seed: u64) -> Self {
        Self {
            segments,
            fs,
            noise_floor: 1.0,
            powerline_amp: 1.5,
            rng_seed,
        }
    }

    /// Sample count of each segment.
    pub fn segment_samples(&self) -> Result<Vec<usize>, SynthError> {
        if self.fs == 0 {
            return Err(SynthError::Plan("fs must be positive".into()));
        }
        self.segments
            .iter()
            .enumerate()
            .map(|(index, &(_, seconds))| {
                if !(seconds > 0.0 && seconds.is_finite()) {
                    return Err(SynthError::Duration { index, seconds });
                }
                let exact = seconds * f64::from(self.fs);
                let n = exact.round();
                if (exact - n).abs() > 1e-6 {
                    return Err(SynthError::Fractional {
                        index,
                        seconds,
                        fs: self.fs,
                    });
                }
                Ok(n as usize)
            })
            .collect()
    }

    pub fn total_seconds(&self) -> f64 {
        self.segments.iter().map(|s| s.1).sum()
    }
}

/// Parse `Label:seconds` tokens separated by commas or whitespace, e.g.
/// `Rest:2, Fist:2, Rest:2`.
pub fn parse_segments(text: &str) -> Result<Vec<(Gesture, f64)>, SynthError> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|token| {
            let (label, secs) = token
                .split_once(':')
                .ok_or_else(|| SynthError::Plan(format!("token `{token}` is not Label:seconds")))?;
            let gesture = label
                .parse::<Gesture>()
                .map_err(|_| SynthError::Plan(format!("unknown gesture `{label}` in token `{token}`")))?;
            let seconds = secs
                .parse::<f64>()
                .map_err(|_| SynthError::Plan(format!("bad duration in token `{token}`")))?;
            Ok((gesture, seconds))
        })
        .collect()
}

/// Rest, then each active gesture for 2 s followed by 2 s of rest.
pub fn demo_segments() -> Vec<(Gesture, f64)> {
    let mut segs = vec![(Gesture::Rest, 2.0)];
    for g in Gesture::ACTIVE {
        segs.push((g, 2.0));
        segs.push((Gesture::Rest, 2.0));
    }
    segs
}

/// `reps` rounds over all active gestures, `hold` seconds each, with 1 s of
/// rest in between.
pub fn corpus_segments(reps: usize, hold: f64) -> Vec<(Gesture, f64)> {
    let mut segs = vec![(Gesture::Rest, 1.0)];
    for _ in 0..reps {
        for g in Gesture::ACTIVE {
            segs.push((g, hold));
            segs.push((Gesture::Rest, 1.0));
        }
    }
    segs
}

fn unit_band_noise(rng: &mut ChaCha8Rng, filter: &SosCascade, n: usize) -> Vec<f64> {
    let white: Vec<f64> = (0..n + WARMUP).map(|_| StandardNormal.sample(rng)).collect();
    let mut shaped = filter.apply(&white);
    shaped.drain(..WARMUP);
    let rms = (shaped.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if rms > 0.0 {
        shaped.iter_mut().for_each(|v| *v /= rms);
    }
    shaped
}

/// Render a plan into a labelled recording.
pub fn gen_recording(plan: &SessionPlan, templates: &[GestureTemplate]) -> Result<EmgRecording, SynthError> {
    let counts = plan.segment_samples()?;
    let fs = f64::from(plan.fs);
    if !(plan.noise_floor >= 0.0 && plan.powerline_amp >= 0.0) {
        return Err(SynthError::Plan("noise_floor and powerline_amp must be non-negative".into()));
    }
    for t in templates {
        t.validate(fs)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(plan.rng_seed);
    let total: usize = counts.iter().sum();
    let mut rows = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut t0 = 0usize;

    for (&(gesture, _), &n) in plan.segments.iter().zip(&counts) {
        let mut block = vec![vec![0.0; n]; CHANNELS];
        if !gesture.is_rest() {
            let tpl = templates
                .iter()
                .find(|t| t.gesture == gesture)
                .ok_or(SynthError::MissingTemplate(gesture))?;
            let filter = SosCascade::butterworth_bandpass(fs, tpl.band.0, tpl.band.1, 4);
            for (chan, &amp) in block.iter_mut().zip(&tpl.amp_profile) {
                let noise = unit_band_noise(&mut rng, &filter, n);
                chan.iter_mut().zip(noise).for_each(|(v, e)| *v += amp * e);
            }
        }
        for chan in block.iter_mut() {
            for (i, v) in chan.iter_mut().enumerate() {
                let floor: f64 = StandardNormal.sample(&mut rng);
                let t = (t0 + i) as f64 / fs;
                *v += plan.noise_floor * floor + plan.powerline_amp * (2.0 * PI * POWERLINE_HZ * t).sin();
            }
        }
        for i in 0..n {
            let mut row = [0i8; CHANNELS];
            for (c, slot) in row.iter_mut().enumerate() {
                *slot = block[c][i].round().clamp(-128.0, 127.0) as i8;
            }
            rows.push(row);
        }
        labels.extend(std::iter::repeat_n(gesture, n));
        t0 += n;
    }

    Ok(EmgRecording::from_rows(plan.fs, rows, Some(labels)).expect("generator output is valid"))
}
