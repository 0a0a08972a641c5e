//! Continuous-stream recognition: sliding windows, activity gating,
//! debouncing, the post-event hold and the gesture lexicon.
//!
//! Every window is either inactive (Rest) or classified. A run is a maximal
//! sequence of consecutive windows with the same classification. A run fires
//! at most one event, at the first window where it has `debounce_k` members
//! and the previous event's hold has expired.

use std::collections::VecDeque;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::FilterConfig;
use crate::mlp::{Classification, GestureClassifier, MlpError};
use crate::model::{EmgRecording, Gesture, CHANNELS};
use crate::pipeline::{activity_gate, seconds_to_samples, window_starts, FeaturePipeline, PipelineError};
use crate::wavelet::WaveletSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecognizerError {
    #[error("recording is sampled at {recording} Hz but the filter expects {config} Hz")]
    FsMismatch { recording: f64, config: f64 },
    #[error("invalid recognizer config: {0}")]
    Config(String),
    #[error("lexicon line {line}: {reason}")]
    Lexicon { line: usize, reason: String },
    #[error("lexicon has no phrase for {0}")]
    MissingPhrase(Gesture),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Classifier(#[from] MlpError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub gesture: Gesture,
    pub phrase: String,
    pub audio_ref: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
}

/// The built-in gesture-to-phrase mapping.
pub fn default_lexicon() -> Lexicon {
    let entry = |gesture, phrase: &str| LexiconEntry {
        gesture,
        phrase: phrase.to_string(),
        audio_ref: None,
    };
    Lexicon {
        entries: vec![
            entry(Gesture::FingersSpread, "HELLO"),
            entry(Gesture::Fist, "YES"),
            entry(Gesture::WaveIn, "NO"),
            entry(Gesture::WaveOut, "THANK YOU"),
            entry(Gesture::DoubleTap, "GOOD BYE"),
        ],
    }
}

impl Lexicon {
    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn get(&self, gesture: Gesture) -> Option<&LexiconEntry> {
        self.entries.iter().find(|e| e.gesture == gesture)
    }

    /// Replace or add an entry.
    pub fn set(&mut self, entry: LexiconEntry) {
        match self.entries.iter_mut().find(|e| e.gesture == entry.gesture) {
            Some(slot) => *slot = entry,
            None => self.entries.push(entry),
        }
    }

    /// Apply `Gesture=phrase[;audio_ref]` lines on top of this lexicon.
    /// Blank lines and `#` comments are skipped.
    pub fn apply_overrides(&mut self, text: &str) -> Result<(), RecognizerError> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |reason: String| RecognizerError::Lexicon { line, reason };
            let (name, rest) = trimmed
                .split_once('=')
                .ok_or_else(|| err("expected `Gesture=phrase`".into()))?;
            let gesture: Gesture = name.trim().parse().map_err(|e: crate::model::UnknownGesture| err(e.to_string()))?;
            if gesture.is_rest() {
                return Err(err("Rest cannot carry a phrase".into()));
            }
            let (phrase, audio) = match rest.split_once(';') {
                Some((p, a)) => (p.trim(), Some(a.trim())),
                None => (rest.trim(), None),
            };
            if phrase.is_empty() {
                return Err(err(format!("empty phrase for {gesture}")));
            }
            self.set(LexiconEntry {
                gesture,
                phrase: phrase.to_string(),
                audio_ref: audio.filter(|a| !a.is_empty()).map(PathBuf::from),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecognizerConfig {
    /// Window length in seconds.
    pub window_len: f64,
    /// Step between window starts in seconds.
    pub hop: f64,
    /// Mean absolute raw value a window needs to count as active.
    pub activity_threshold: f64,
    /// Consecutive agreeing windows required before an event fires.
    pub debounce_k: usize,
    /// Seconds after an event during which no other event may fire.
    pub hold: f64,
}

impl Default for RecognizerConfig {
    fn default() -> Self {
        Self {
            window_len: 1.0,
            hop: 0.25,
            activity_threshold: 4.0,
            debounce_k: 3,
            hold: 1.0,
        }
    }
}

impl RecognizerConfig {
    pub fn validate(&self) -> Result<(), RecognizerError> {
        let bad = |m: String| Err(RecognizerError::Config(m));
        if !(self.hop > 0.0 && self.window_len >= self.hop) {
            return bad(format!("need window_len >= hop > 0, got {} / {}", self.window_len, self.hop));
        }
        if self.debounce_k == 0 {
            return bad("debounce_k must be at least 1".into());
        }
        // hold = 0 disables the refractory period
        if !(self.hold >= 0.0 && self.hold.is_finite()) {
            return bad(format!("hold must be non-negative, got {}", self.hold));
        }
        if !(self.activity_threshold >= 0.0) {
            return bad(format!("activity_threshold must be non-negative, got {}", self.activity_threshold));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionEvent {
    pub gesture: Gesture,
    pub phrase: String,
    pub audio_ref: Option<PathBuf>,
    pub confidence: f64,
    /// Seconds from the start of the stream to the decision that fired.
    pub start_time: f64,
    pub hold: f64,
}

impl fmt::Display for RecognitionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "t={:.3} gesture={} phrase=\"{}\" conf={:.2}",
            self.start_time, self.gesture, self.phrase, self.confidence
        )
    }
}

/// Run bookkeeping shared by batch and streaming recognition.
#[derive(Debug, Clone, Default)]
struct EventTracker {
    run: Option<Gesture>,
    confidences: Vec<f64>,
    fired: bool,
    // first sample index at which a new event may fire
    next_allowed: usize,
}

impl EventTracker {
    fn step(&mut self, end_sample: usize, decision: Option<Classification>, k: usize, hold_samples: usize) -> Option<(Gesture, f64)> {
        let Some(c) = decision else {
            self.run = None;
            self.confidences.clear();
            self.fired = false;
            return None;
        };
        if self.run != Some(c.gesture) {
            self.run = Some(c.gesture);
            self.confidences.clear();
            self.fired = false;
        }
        self.confidences.push(c.confidence);
        if self.fired || self.confidences.len() < k || end_sample < self.next_allowed {
            return None;
        }
        self.fired = true;
        self.next_allowed = end_sample + hold_samples;
        let conf = self.confidences.iter().sum::<f64>() / self.confidences.len() as f64;
        Some((c.gesture, conf))
    }
}

/// A configured recognizer: classifier, lexicon and window geometry.
#[derive(Debug, Clone)]
pub struct Recognizer<C> {
    classifier: C,
    lexicon: Lexicon,
    cfg: RecognizerConfig,
    pipeline: FeaturePipeline,
    window: usize,
    hop: usize,
    hold_samples: usize,
}

impl<C: GestureClassifier> Recognizer<C> {
    pub fn new(
        classifier: C,
        lexicon: Lexicon,
        cfg: RecognizerConfig,
        filter: &FilterConfig,
        wavelet: WaveletSpec,
        levels: usize,
    ) -> Result<Self, RecognizerError> {
        cfg.validate()?;
        let pipeline = FeaturePipeline::new(filter, wavelet, levels)?;
        let window = seconds_to_samples(cfg.window_len, filter.fs)?;
        let hop = seconds_to_samples(cfg.hop, filter.fs)?;
        pipeline.check_window_len(window)?;
        for &g in classifier.classes() {
            if lexicon.get(g).is_none() {
                return Err(RecognizerError::MissingPhrase(g));
            }
        }
        let hold_samples = (cfg.hold * filter.fs - 1e-9).ceil().max(0.0) as usize;
        Ok(Self {
            classifier,
            lexicon,
            cfg,
            pipeline,
            window,
            hop,
            hold_samples,
        })
    }

    pub fn config(&self) -> &RecognizerConfig {
        &self.cfg
    }

    pub fn window_samples(&self) -> usize {
        self.window
    }

    pub fn hop_samples(&self) -> usize {
        self.hop
    }

    pub fn fs(&self) -> f64 {
        self.pipeline.filter().fs
    }

    /// Classification of one raw window, or `None` when the gate calls it Rest.
    pub fn decide(&self, raw: &[Vec<f64>]) -> Result<Option<Classification>, RecognizerError> {
        if !activity_gate(raw, self.cfg.activity_threshold) {
            return Ok(None);
        }
        let features = self.pipeline.features(raw)?;
        Ok(Some(self.classifier.classify(features.as_slice())?))
    }

    fn event(&self, gesture: Gesture, confidence: f64, end_sample: usize) -> RecognitionEvent {
        let entry = self.lexicon.get(gesture).expect("lexicon covers every class");
        RecognitionEvent {
            gesture,
            phrase: entry.phrase.clone(),
            audio_ref: entry.audio_ref.clone(),
            confidence,
            start_time: end_sample as f64 / self.fs(),
            hold: self.cfg.hold,
        }
    }

    /// Window decisions over a whole recording, as (end sample, decision).
    pub fn decisions(&self, rec: &EmgRecording) -> Result<Vec<(usize, Option<Classification>)>, RecognizerError> {
        self.check_fs(rec)?;
        window_starts(rec.len(), self.window, self.hop)
            .map(|start| {
                let end = start + self.window;
                Ok((end, self.decide(&rec.channel_block(start, end))?))
            })
            .collect()
    }

    fn check_fs(&self, rec: &EmgRecording) -> Result<(), RecognizerError> {
        let fs = f64::from(rec.fs());
        if fs != self.fs() {
            return Err(RecognizerError::FsMismatch {
                recording: fs,
                config: self.fs(),
            });
        }
        Ok(())
    }

    /// Events over a complete recording.
    pub fn recognize(&self, rec: &EmgRecording) -> Result<Vec<RecognitionEvent>, RecognizerError> {
        let mut tracker = EventTracker::default();
        let mut events = Vec::new();
        for (end, decision) in self.decisions(rec)? {
            if let Some((g, conf)) = tracker.step(end, decision, self.cfg.debounce_k, self.hold_samples) {
                events.push(self.event(g, conf, end));
            }
        }
        Ok(events)
    }

    /// Incremental recognizer fed one sample at a time.
    pub fn stream(&self) -> StreamRecognizer<'_, C> {
        StreamRecognizer {
            recognizer: self,
            buffer: VecDeque::with_capacity(self.window),
            seen: 0,
            tracker: EventTracker::default(),
        }
    }
}

/// Live counterpart of [`Recognizer::recognize`]. Holds the trailing window
/// and must be driven by a single producer.
#[derive(Debug)]
pub struct StreamRecognizer<'r, C> {
    recognizer: &'r Recognizer<C>,
    buffer: VecDeque<[i8; CHANNELS]>,
    seen: usize,
    tracker: EventTracker,
}

impl<C: GestureClassifier> StreamRecognizer<'_, C> {
    /// Feed one sample; returns an event if this sample completed a window
    /// that fired one.
    pub fn push(&mut self, ch: [i8; CHANNELS]) -> Result<Option<RecognitionEvent>, RecognizerError> {
        let r = self.recognizer;
        if self.buffer.len() == r.window {
            self.buffer.pop_front();
        }
        self.buffer.push_back(ch);
        self.seen += 1;
        if self.seen < r.window || !(self.seen - r.window).is_multiple_of(r.hop) {
            return Ok(None);
        }
        let mut block: Vec<Vec<f64>> = (0..CHANNELS).map(|_| Vec::with_capacity(r.window)).collect();
        for row in &self.buffer {
            for (c, v) in row.iter().enumerate() {
                block[c].push(f64::from(*v));
            }
        }
        let decision = r.decide(&block)?;
        Ok(self
            .tracker
            .step(self.seen, decision, r.cfg.debounce_k, r.hold_samples)
            .map(|(g, conf)| r.event(g, conf, self.seen)))
    }

    pub fn samples_seen(&self) -> usize {
        self.seen
    }
}

/// Batch recognition over a recording with an explicit configuration.
pub fn recognize_stream<C: GestureClassifier>(
    rec: &EmgRecording,
    model: C,
    lexicon: &Lexicon,
    cfg: &RecognizerConfig,
    filter: &FilterConfig,
    wavelet: &WaveletSpec,
    levels: usize,
) -> Result<Vec<RecognitionEvent>, RecognizerError> {
    Recognizer::new(model, lexicon.clone(), cfg.clone(), filter, wavelet.clone(), levels)?.recognize(rec)
}
