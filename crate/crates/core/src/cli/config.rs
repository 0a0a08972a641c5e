//! The pipeline config file: TOML with one table per stage.
//!
//! ```toml
//! fs = 200
//! seed = 7
//!
//! [filter]
//! band_lo = 10.0
//! band_hi = 95.0
//!
//! [wavelet]
//! name = "db4"
//! levels = 3
//!
//! [recognizer]
//! debounce_k = 3
//!
//! [mlp]
//! hidden = [40]
//!
//! [synth]
//! plan = "demo"
//! ```
//!
//! Every key is optional; missing keys take their defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::dsp::FilterConfig;
use crate::mlp::TrainConfig;
use crate::model::DEFAULT_FS;
use crate::pipeline::{seconds_to_samples, FeaturePipeline};
use crate::recognizer::RecognizerConfig;
use crate::wavelet::WaveletSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveletSection {
    pub name: String,
    pub levels: usize,
}

impl Default for WaveletSection {
    fn default() -> Self {
        Self {
            name: "db4".into(),
            levels: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// Share of labelled windows held out for the evaluation report.
    pub test_fraction: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self { test_fraction: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    /// `demo`, `corpus`, or an explicit `Label:seconds` list.
    pub plan: String,
    /// Repetitions per gesture for the `corpus` preset.
    pub corpus_reps: usize,
    /// Seconds per gesture segment for the `corpus` preset.
    pub corpus_hold: f64,
    pub noise_floor: f64,
    pub powerline_amp: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            plan: "corpus".into(),
            corpus_reps: 10,
            corpus_hold: 2.0,
            noise_floor: 1.0,
            powerline_amp: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub fs: u32,
    pub seed: u64,
    pub lexicon: Option<PathBuf>,
    pub filter: FilterConfig,
    pub wavelet: WaveletSection,
    pub recognizer: RecognizerConfig,
    pub mlp: TrainConfig,
    pub train: TrainSection,
    pub synth: SynthSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            fs: DEFAULT_FS,
            seed: 7,
            lexicon: None,
            filter: FilterConfig::default(),
            wavelet: WaveletSection::default(),
            recognizer: RecognizerConfig::default(),
            mlp: TrainConfig::default(),
            train: TrainSection::default(),
            synth: SynthSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        Self::parse(text).map_err(CliError::Config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|msg| CliError::Config(format!("{}: {msg}", path.display())))
    }

    fn parse(text: &str) -> Result<Self, String> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| match e.span() {
            Some(span) => format!("line {}: {}", text[..span.start].matches('\n').count() + 1, e.message()),
            None => e.message().to_string(),
        })?;
        cfg.sync();
        Ok(cfg)
    }

    /// Apply a seed override, keeping derived seeds in step.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.sync();
        self
    }

    // the top-level fs and seed are the single source for every stage
    fn sync(&mut self) {
        self.filter.fs = f64::from(self.fs);
        self.mlp.rng_seed = self.seed;
    }

    pub fn wavelet_spec(&self) -> Result<WaveletSpec, CliError> {
        Ok(WaveletSpec::by_name(&self.wavelet.name)?)
    }

    pub fn feature_pipeline(&self) -> Result<FeaturePipeline, CliError> {
        Ok(FeaturePipeline::new(&self.filter, self.wavelet_spec()?, self.wavelet.levels)?)
    }

    pub fn window_samples(&self) -> Result<usize, CliError> {
        Ok(seconds_to_samples(self.recognizer.window_len, self.filter.fs)?)
    }

    pub fn hop_samples(&self) -> Result<usize, CliError> {
        Ok(seconds_to_samples(self.recognizer.hop, self.filter.fs)?)
    }

    /// Check every stage's invariants, including that a window can be
    /// decomposed to the configured depth.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.fs == 0 {
            return Err(CliError::Config("fs must be positive".into()));
        }
        self.recognizer.validate()?;
        self.mlp.validate()?;
        let pipeline = self.feature_pipeline()?;
        pipeline.check_window_len(self.window_samples()?)?;
        self.hop_samples()?;
        let tf = self.train.test_fraction;
        if !(tf > 0.0 && tf < 1.0) {
            return Err(CliError::Config(format!("train.test_fraction must lie in (0, 1), got {tf}")));
        }
        Ok(())
    }
}
