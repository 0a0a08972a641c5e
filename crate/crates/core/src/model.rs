//! Core EMG domain types and the text recording format.
//!
//! A recording file looks like:
//!
//! ```text
//! #emgrec v1 fs=200
//! 0,1,-2,3,0,0,5,-1,2,Rest
//! 1,0,4,-3,1,2,2,0,-1,Rest
//! ```
//!
//! The trailing label column is optional but all-or-nothing per file.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Number of armband electrodes.
pub const CHANNELS: usize = 8;

/// Sampling rate used when a config does not say otherwise.
pub const DEFAULT_FS: u32 = 200;

const HEADER_PREFIX: &str = "#emgrec v1 fs=";

/// Gesture tags. `Rest` marks the absence of a gesture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gesture {
    FingersSpread,
    Fist,
    WaveIn,
    WaveOut,
    DoubleTap,
    Rest,
}

impl Gesture {
    /// Every tag, `Rest` last.
    pub const ALL: [Gesture; 6] = [
        Gesture::FingersSpread,
        Gesture::Fist,
        Gesture::WaveIn,
        Gesture::WaveOut,
        Gesture::DoubleTap,
        Gesture::Rest,
    ];

    /// The five active gestures, in the order used for classifier outputs.
    pub const ACTIVE: [Gesture; 5] = [
        Gesture::FingersSpread,
        Gesture::Fist,
        Gesture::WaveIn,
        Gesture::WaveOut,
        Gesture::DoubleTap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Gesture::FingersSpread => "FingersSpread",
            Gesture::Fist => "Fist",
            Gesture::WaveIn => "WaveIn",
            Gesture::WaveOut => "WaveOut",
            Gesture::DoubleTap => "DoubleTap",
            Gesture::Rest => "Rest",
        }
    }

    pub fn is_rest(self) -> bool {
        self == Gesture::Rest
    }
}

impl fmt::Display for Gesture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown gesture `{0}`")]
pub struct UnknownGesture(pub String);

impl FromStr for Gesture {
    type Err = UnknownGesture;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Gesture::ALL
            .iter()
            .copied()
            .find(|g| g.name() == s)
            .ok_or_else(|| UnknownGesture(s.to_string()))
    }
}

/// One multi-channel sample. Channel values are raw signed 8-bit activations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmgSample {
    pub t: u64,
    pub ch: [i8; CHANNELS],
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordingError {
    #[error("sampling rate must be positive")]
    ZeroRate,
    #[error("sample {position} has index {found}, expected {expected}")]
    NonMonotoneIndex {
        position: usize,
        expected: u64,
        found: u64,
    },
    #[error("{labels} labels for {samples} samples")]
    LabelLength { samples: usize, labels: usize },
}

/// A timestamped 8-channel series with optional per-sample labels.
///
/// Fields are private so the index and label invariants always hold; use
/// [`EmgRecording::new`] to build one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmgRecording {
    fs: u32,
    samples: Vec<EmgSample>,
    labels: Option<Vec<Gesture>>,
}

impl EmgRecording {
    pub fn new(
        fs: u32,
        samples: Vec<EmgSample>,
        labels: Option<Vec<Gesture>>,
    ) -> Result<Self, RecordingError> {
        if fs == 0 {
            return Err(RecordingError::ZeroRate);
        }
        for (i, pair) in samples.windows(2).enumerate() {
            let expected = pair[0].t + 1;
            if pair[1].t != expected {
                return Err(RecordingError::NonMonotoneIndex {
                    position: i + 1,
                    expected,
                    found: pair[1].t,
                });
            }
        }
        if let Some(l) = &labels {
            if l.len() != samples.len() {
                return Err(RecordingError::LabelLength {
                    samples: samples.len(),
                    labels: l.len(),
                });
            }
        }
        Ok(Self {
            fs,
            samples,
            labels,
        })
    }

    /// Build a recording from raw channel rows, indexing samples from zero.
    pub fn from_rows(
        fs: u32,
        rows: Vec<[i8; CHANNELS]>,
        labels: Option<Vec<Gesture>>,
    ) -> Result<Self, RecordingError> {
        let samples = rows
            .into_iter()
            .enumerate()
            .map(|(i, ch)| EmgSample { t: i as u64, ch })
            .collect();
        Self::new(fs, samples, labels)
    }

    pub fn fs(&self) -> u32 {
        self.fs
    }

    pub fn samples(&self) -> &[EmgSample] {
        &self.samples
    }

    pub fn labels(&self) -> Option<&[Gesture]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.fs as f64
    }

    /// Channel-major copy of samples `start..end` as floating point.
    pub fn channel_block(&self, start: usize, end: usize) -> Vec<Vec<f64>> {
        let mut block: Vec<Vec<f64>> = (0..CHANNELS).map(|_| Vec::with_capacity(end - start)).collect();
        for s in &self.samples[start..end] {
            for (c, v) in s.ch.iter().enumerate() {
                block[c].push(f64::from(*v));
            }
        }
        block
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: malformed header, expected `#emgrec v1 fs=<int>`")]
    Header { line: usize },
    #[error("line {line}: expected {expected} fields, found {found}")]
    Arity {
        line: usize,
        expected: String,
        found: usize,
    },
    #[error("line {line}: invalid number `{token}`")]
    Number { line: usize, token: String },
    #[error("line {line}: value {value} outside [-128, 127]")]
    Range { line: usize, value: i64 },
    #[error("line {line}: index {found} does not follow {previous}")]
    Index {
        line: usize,
        previous: u64,
        found: u64,
    },
    #[error("line {line}: {source}")]
    Label {
        line: usize,
        #[source]
        source: UnknownGesture,
    },
    #[error("line {line}: label column must be present on every row or on none")]
    MixedLabels { line: usize },
}

impl ParseError {
    /// 1-based line number the error refers to.
    pub fn line(&self) -> usize {
        match self {
            ParseError::Header { line }
            | ParseError::Arity { line, .. }
            | ParseError::Number { line, .. }
            | ParseError::Range { line, .. }
            | ParseError::Index { line, .. }
            | ParseError::Label { line, .. }
            | ParseError::MixedLabels { line } => *line,
        }
    }
}

/// Parse the text recording format.
pub fn parse_recording(text: &str) -> Result<EmgRecording, ParseError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(ParseError::Header { line: 1 })?;
    let fs: u32 = header
        .strip_prefix(HEADER_PREFIX)
        .and_then(|v| v.parse().ok())
        .filter(|&fs| fs > 0)
        .ok_or(ParseError::Header { line: 1 })?;

    let mut samples = Vec::new();
    let mut labels: Vec<Gesture> = Vec::new();
    let mut labelled: Option<bool> = None;

    for (i, raw) in lines.enumerate() {
        let line = i + 2;
        let fields: Vec<&str> = raw.split(',').collect();
        let has_label = match fields.len() {
            n if n == CHANNELS + 1 => false,
            n if n == CHANNELS + 2 => true,
            n => {
                return Err(ParseError::Arity {
                    line,
                    expected: format!("{} or {}", CHANNELS + 1, CHANNELS + 2),
                    found: n,
                })
            }
        };
        match labelled {
            None => labelled = Some(has_label),
            Some(prev) if prev != has_label => return Err(ParseError::MixedLabels { line }),
            Some(_) => {}
        }

        let t: u64 = fields[0].parse().map_err(|_| ParseError::Number {
            line,
            token: fields[0].to_string(),
        })?;
        if let Some(prev) = samples.last().map(|s: &EmgSample| s.t) {
            if t != prev + 1 {
                return Err(ParseError::Index {
                    line,
                    previous: prev,
                    found: t,
                });
            }
        }

        let mut ch = [0i8; CHANNELS];
        for (slot, token) in ch.iter_mut().zip(&fields[1..=CHANNELS]) {
            let v: i64 = token.parse().map_err(|_| ParseError::Number {
                line,
                token: token.to_string(),
            })?;
            *slot = i8::try_from(v).map_err(|_| ParseError::Range { line, value: v })?;
        }
        samples.push(EmgSample { t, ch });

        if has_label {
            let g = fields[CHANNELS + 1]
                .parse()
                .map_err(|source| ParseError::Label { line, source })?;
            labels.push(g);
        }
    }

    let labels = labelled.unwrap_or(false).then_some(labels);
    // Indices and label lengths were checked row by row above.
    Ok(EmgRecording::new(fs, samples, labels).expect("validated while parsing"))
}

/// Serialize a recording in the text format. `parse_recording` inverts this.
pub fn write_recording(rec: &EmgRecording) -> String {
    use std::fmt::Write;

    let mut out = String::with_capacity(16 + rec.len() * 40);
    let _ = writeln!(out, "{HEADER_PREFIX}{}", rec.fs);
    for (i, s) in rec.samples.iter().enumerate() {
        let _ = write!(out, "{}", s.t);
        for v in s.ch {
            let _ = write!(out, ",{v}");
        }
        if let Some(labels) = &rec.labels {
            let _ = write!(out, ",{}", labels[i]);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_rows() -> String {
        "#emgrec v1 fs=200\n\
         0,1,2,3,4,5,6,7,8\n\
         1,-1,-2,-3,-4,-5,-6,-7,-8\n\
         2,127,-128,0,0,0,0,0,0\n"
            .to_string()
    }

    #[test]
    fn parses_header_and_rows() {
        let rec = parse_recording(&three_rows()).unwrap();
        assert_eq!(rec.fs(), 200);
        assert_eq!(rec.len(), 3);
        assert_eq!(rec.samples()[2].ch[1], -128);
        assert!(rec.labels().is_none());
    }

    #[test]
    fn short_row_names_line() {
        let text = "#emgrec v1 fs=200\n0,1,2,3,4,5,6,7,8\n1,1,2,3,4,5,6,7\n";
        let err = parse_recording(text).unwrap_err();
        assert!(matches!(err, ParseError::Arity { line: 3, found: 8, .. }));
        assert!(err.to_string().starts_with("line 3:"));
    }

    #[test]
    fn out_of_range_value() {
        let text = "#emgrec v1 fs=200\n0,300,0,0,0,0,0,0,0\n";
        let err = parse_recording(text).unwrap_err();
        assert_eq!(err, ParseError::Range { line: 2, value: 300 });
    }

    #[test]
    fn bad_header() {
        for text in ["", "emgrec fs=200\n", "#emgrec v1 fs=0\n", "#emgrec v2 fs=200\n"] {
            assert_eq!(parse_recording(text).unwrap_err().line(), 1, "{text:?}");
        }
    }

    #[test]
    fn non_monotone_index() {
        let text = "#emgrec v1 fs=200\n5,0,0,0,0,0,0,0,0\n7,0,0,0,0,0,0,0,0\n";
        let err = parse_recording(text).unwrap_err();
        assert!(matches!(err, ParseError::Index { line: 3, previous: 5, found: 7 }));
    }

    #[test]
    fn labels_all_or_nothing() {
        let text = "#emgrec v1 fs=200\n0,0,0,0,0,0,0,0,0,Fist\n1,0,0,0,0,0,0,0,0\n";
        assert_eq!(
            parse_recording(text).unwrap_err(),
            ParseError::MixedLabels { line: 3 }
        );
        let text = "#emgrec v1 fs=200\n0,0,0,0,0,0,0,0,0,Punch\n";
        assert!(matches!(
            parse_recording(text).unwrap_err(),
            ParseError::Label { line: 2, .. }
        ));
    }

    #[test]
    fn empty_recording_is_header_only() {
        let rec = EmgRecording::new(200, vec![], None).unwrap();
        let text = write_recording(&rec);
        assert_eq!(text, "#emgrec v1 fs=200\n");
        assert_eq!(parse_recording(&text).unwrap(), rec);
    }

    #[test]
    fn labelled_roundtrip() {
        let rows = vec![[1, -2, 3, -4, 5, -6, 7, -8], [0; 8], [127; 8]];
        let labels = vec![Gesture::Rest, Gesture::Fist, Gesture::DoubleTap];
        let rec = EmgRecording::from_rows(500, rows, Some(labels)).unwrap();
        let text = write_recording(&rec);
        assert_eq!(parse_recording(&text).unwrap(), rec);
        assert_eq!(write_recording(&parse_recording(&text).unwrap()), text);
    }

    #[test]
    fn constructor_checks_invariants() {
        let s = |t| EmgSample { t, ch: [0; 8] };
        assert!(EmgRecording::new(200, vec![s(3), s(5)], None).is_err());
        assert!(EmgRecording::new(200, vec![s(0)], Some(vec![])).is_err());
        assert!(EmgRecording::new(0, vec![], None).is_err());
    }

    #[test]
    fn gesture_names_roundtrip() {
        for g in Gesture::ALL {
            assert_eq!(g.name().parse::<Gesture>().unwrap(), g);
        }
        assert!("fist".parse::<Gesture>().is_err());
    }
}
