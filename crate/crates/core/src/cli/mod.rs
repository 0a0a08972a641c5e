//! Command implementations behind the `emgspeak` binary.
//!
//! Each command writes its human-readable output to the supplied writer so
//! the same code paths run under tests and from the terminal.

mod commands;
mod config;

pub use commands::{
    build_lexicon, cmd_classify, cmd_eval, cmd_gen, cmd_stream, cmd_train, load_model_file, load_recording_file,
    resolve_plan, window_dataset, StreamTransport,
};
pub use config::{PipelineConfig, SynthSection, TrainSection, WaveletSection};

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dsp::FilterError;
use crate::evaluation::EvalError;
use crate::features::FeatureError;
use crate::mlp::MlpError;
use crate::model::ParseError;
use crate::pipeline::PipelineError;
use crate::recognizer::RecognizerError;
use crate::synth::SynthError;
use crate::wavelet::WaveletError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Recording {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("{path}: {source}")]
    Model {
        path: PathBuf,
        #[source]
        source: MlpError,
    },
    #[error("{0}: recording has no labels")]
    Unlabeled(PathBuf),
    #[error("{path}: recording is sampled at {found} Hz, config expects {expected} Hz")]
    FsMismatch { path: PathBuf, found: u32, expected: u32 },
    #[error("no active labelled windows in the training recordings")]
    NoWindows,
    #[error("transport: {0}")]
    Transport(String),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Wavelet(#[from] WaveletError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error(transparent)]
    Recognizer(#[from] RecognizerError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("output: {0}")]
    Output(#[from] io::Error),
}

impl CliError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
