#![allow(dead_code)]

use emg_core::dsp::FilterConfig;
use emg_core::mlp::{train, MlpModel, TrainConfig, TrainHistory};
use emg_core::pipeline::{labeled_windows, FeaturePipeline};
use emg_core::recognizer::{default_lexicon, Recognizer, RecognizerConfig};
use emg_core::synth::{corpus_segments, default_templates, demo_segments, gen_recording, SessionPlan};
use emg_core::wavelet::WaveletSpec;
use emg_core::{EmgRecording, Gesture};

pub const FS: u32 = 200;
pub const WINDOW: usize = 200;
pub const HOP: usize = 50;
pub const LEVELS: usize = 3;
pub const GATE: f64 = 4.0;

pub fn pipeline() -> FeaturePipeline {
    FeaturePipeline::new(&FilterConfig::default(), WaveletSpec::db4(), LEVELS).unwrap()
}

pub fn synth(segments: Vec<(Gesture, f64)>, seed: u64) -> EmgRecording {
    gen_recording(&SessionPlan::new(segments, FS, seed), &default_templates()).unwrap()
}

pub fn demo(seed: u64) -> EmgRecording {
    synth(demo_segments(), seed)
}

/// Feature vectors of every active labelled window.
pub fn window_features(rec: &EmgRecording) -> Vec<(Vec<f64>, Gesture)> {
    let p = pipeline();
    labeled_windows(rec, WINDOW, HOP, GATE)
        .unwrap()
        .into_iter()
        .map(|w| (p.features(&rec.channel_block(w.start, w.start + WINDOW)).unwrap().0, w.gesture))
        .collect()
}

/// `reps` rounds of 2 s gestures; each segment yields five windows.
pub fn corpus_features(reps: usize, seed: u64) -> Vec<(Vec<f64>, Gesture)> {
    window_features(&synth(corpus_segments(reps, 2.0), seed))
}

pub fn trained_model(seed: u64) -> (MlpModel, TrainHistory) {
    let data = corpus_features(10, seed);
    let cfg = TrainConfig {
        rng_seed: seed,
        ..TrainConfig::default()
    };
    train(&data, &cfg).unwrap()
}

pub fn recognizer(model: &MlpModel, cfg: RecognizerConfig) -> Recognizer<&MlpModel> {
    Recognizer::new(model, default_lexicon(), cfg, &FilterConfig::default(), WaveletSpec::db4(), LEVELS).unwrap()
}
