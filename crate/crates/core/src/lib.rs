//! Surface-EMG gesture recognition.
//!
//! Raw 8-channel windows are bandpass and notch filtered, decomposed with a
//! periodic discrete wavelet transform, and reduced to four statistical
//! moments per subband. A log-sigmoid perceptron classifies the resulting
//! vector, and a streaming recognizer turns window decisions into timed
//! word/phrase events. A seeded synthetic generator and a framed byte
//! transport stand in for the armband.
//!
//! ```text
//! EmgRecording -> dsp -> wavelet -> features -> mlp -> recognizer -> events
//! ```

pub mod cli;
pub mod dsp;
pub mod evaluation;
pub mod features;
pub mod mlp;
pub mod model;
pub mod pipeline;
pub mod recognizer;
pub mod synth;
pub mod transport;
pub mod wavelet;

pub use model::{EmgRecording, EmgSample, Gesture, CHANNELS};
