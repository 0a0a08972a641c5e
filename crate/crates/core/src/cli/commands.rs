use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{CliError, PipelineConfig};
use crate::evaluation::{evaluate, split};
use crate::mlp::{load_model, save_model, train, MlpModel};
use crate::model::{parse_recording, write_recording, EmgRecording, Gesture};
use crate::pipeline::labeled_windows;
use crate::recognizer::{default_lexicon, Lexicon, RecognitionEvent, Recognizer};
use crate::synth::{corpus_segments, default_templates, demo_segments, gen_recording, parse_segments, SessionPlan};
use crate::transport::{read_frames, spawn_replay, tcp_replay, FrameDecoder};

// chunks buffered between the replay producer and the recognizer
const QUEUE_CAPACITY: usize = 64;

pub fn load_recording_file(path: &Path) -> Result<EmgRecording, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_recording(&text).map_err(|source| CliError::Recording {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model_file(path: &Path) -> Result<MlpModel, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    load_model(&text).map_err(|source| CliError::Model {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn check_fs(cfg: &PipelineConfig, path: &Path, rec: &EmgRecording) -> Result<(), CliError> {
    if rec.fs() != cfg.fs {
        return Err(CliError::FsMismatch {
            path: path.to_path_buf(),
            found: rec.fs(),
            expected: cfg.fs,
        });
    }
    Ok(())
}

/// Default lexicon with the config's override file applied.
pub fn build_lexicon(cfg: &PipelineConfig) -> Result<Lexicon, CliError> {
    let mut lex = default_lexicon();
    if let Some(path) = &cfg.lexicon {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        lex.apply_overrides(&text)?;
    }
    Ok(lex)
}

/// Turn a plan name or `Label:seconds` list into a session plan.
pub fn resolve_plan(cfg: &PipelineConfig, spec: Option<&str>) -> Result<SessionPlan, CliError> {
    let spec = spec.unwrap_or(&cfg.synth.plan);
    let segments = match spec.trim() {
        "demo" => demo_segments(),
        "corpus" => corpus_segments(cfg.synth.corpus_reps, cfg.synth.corpus_hold),
        other => parse_segments(other)?,
    };
    Ok(SessionPlan {
        segments,
        fs: cfg.fs,
        noise_floor: cfg.synth.noise_floor,
        powerline_amp: cfg.synth.powerline_amp,
        rng_seed: cfg.seed,
    })
}

/// Generate a labelled synthetic recording.
pub fn cmd_gen(cfg: &PipelineConfig, plan: Option<&str>, out_path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let plan = resolve_plan(cfg, plan)?;
    let rec = gen_recording(&plan, &default_templates())?;
    write_file(out_path, &write_recording(&rec))?;

    writeln!(out, "seed={} fs={} samples={} duration={:.2}s", plan.rng_seed, plan.fs, rec.len(), rec.duration_secs())?;
    let mut totals: Vec<(Gesture, usize, f64)> = Vec::new();
    for &(g, secs) in &plan.segments {
        match totals.iter_mut().find(|t| t.0 == g) {
            Some(t) => {
                t.1 += 1;
                t.2 += secs;
            }
            None => totals.push((g, 1, secs)),
        }
    }
    totals.sort_by_key(|t| t.0);
    for (g, n, secs) in totals {
        writeln!(out, "  {g:<13} segments={n:<3} seconds={secs:.2}")?;
    }
    writeln!(out, "wrote {}", out_path.display())?;
    Ok(())
}

/// Feature vectors of every active labelled window across `recordings`.
pub fn window_dataset(cfg: &PipelineConfig, recordings: &[PathBuf]) -> Result<Vec<(Vec<f64>, Gesture)>, CliError> {
    let pipeline = cfg.feature_pipeline()?;
    let (len, hop) = (cfg.window_samples()?, cfg.hop_samples()?);
    let mut data = Vec::new();
    for path in recordings {
        let rec = load_recording_file(path)?;
        check_fs(cfg, path, &rec)?;
        let windows = labeled_windows(&rec, len, hop, cfg.recognizer.activity_threshold)
            .ok_or_else(|| CliError::Unlabeled(path.clone()))?;
        for w in windows {
            let block = rec.channel_block(w.start, w.start + len);
            data.push((pipeline.features(&block)?.0, w.gesture));
        }
    }
    if data.is_empty() {
        return Err(CliError::NoWindows);
    }
    Ok(data)
}

/// Train, report held-out accuracy and save the model.
pub fn cmd_train(
    cfg: &PipelineConfig,
    recordings: &[PathBuf],
    model_out: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    cfg.validate()?;
    let data = window_dataset(cfg, recordings)?;
    let (train_set, test_set) = split(&data, 1.0 - cfg.train.test_fraction, cfg.seed)?;
    let (model, history) = train(&train_set, &cfg.mlp)?;
    let (cm, acc) = evaluate(&model, &test_set)?;
    write_file(model_out, &save_model(&model))?;

    writeln!(out, "seed={} windows={} train={} test={}", cfg.seed, data.len(), train_set.len(), test_set.len())?;
    let sizes: Vec<String> = model.layer_sizes().iter().map(usize::to_string).collect();
    writeln!(
        out,
        "topology={} epochs={} best_epoch={} best_mse={:.6} stop={:?}",
        sizes.join("-"),
        history.epochs.len() - 1,
        history.best_epoch,
        history.best_mse(),
        history.stop
    )?;
    write!(out, "{cm}")?;
    writeln!(out, "accuracy={acc:.4}")?;
    writeln!(out, "wrote {}", model_out.display())?;
    Ok(())
}

/// Window-level evaluation of a saved model on labelled recordings.
pub fn cmd_eval(
    cfg: &PipelineConfig,
    model_path: &Path,
    recordings: &[PathBuf],
    cells_out: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    cfg.validate()?;
    let model = load_model_file(model_path)?;
    let data = window_dataset(cfg, recordings)?;
    let (cm, acc) = evaluate(&model, &data)?;
    write!(out, "{cm}")?;
    writeln!(out, "accuracy={acc:.4}")?;
    if let Some(path) = cells_out {
        write_file(path, &cm.to_cells())?;
    }
    Ok(())
}

fn recognizer_for<'m>(cfg: &PipelineConfig, model: &'m MlpModel) -> Result<Recognizer<&'m MlpModel>, CliError> {
    cfg.validate()?;
    let lexicon = build_lexicon(cfg)?;
    Ok(Recognizer::new(
        model,
        lexicon,
        cfg.recognizer.clone(),
        &cfg.filter,
        cfg.wavelet_spec()?,
        cfg.wavelet.levels,
    )?)
}

fn print_events(events: &[RecognitionEvent], out: &mut dyn Write) -> Result<(), CliError> {
    for e in events {
        writeln!(out, "{e}")?;
    }
    Ok(())
}

/// Batch recognition over a recording file.
pub fn cmd_classify(
    cfg: &PipelineConfig,
    model_path: &Path,
    recording: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let model = load_model_file(model_path)?;
    let recognizer = recognizer_for(cfg, &model)?;
    let rec = load_recording_file(recording)?;
    check_fs(cfg, recording, &rec)?;
    let events = recognizer.recognize(&rec)?;
    print_events(&events, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StreamTransport {
    /// In-process bounded queue of encoded frames.
    #[default]
    Queue,
    /// Loopback TCP connection.
    Tcp,
}

/// Replay a recording through the framed transport into the live recognizer.
/// Event lines are written as they fire.
pub fn cmd_stream(
    cfg: &PipelineConfig,
    model_path: &Path,
    recording: &Path,
    rate: f64,
    transport: StreamTransport,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(CliError::Config(format!("rate must be a non-negative number, got {rate}")));
    }
    let model = load_model_file(model_path)?;
    let recognizer = recognizer_for(cfg, &model)?;
    let rec = load_recording_file(recording)?;
    check_fs(cfg, recording, &rec)?;

    let mut live = recognizer.stream();
    let mut emit = |ch| -> Result<(), CliError> {
        if let Some(e) = live.push(ch)? {
            writeln!(out, "{e}")?;
            out.flush()?;
        }
        Ok(())
    };

    let stats = match transport {
        StreamTransport::Queue => {
            let (rx, producer) = spawn_replay(rec, rate, QUEUE_CAPACITY);
            let mut decoder = FrameDecoder::new();
            for chunk in rx {
                decoder.push(&chunk);
                while let Some(frame) = decoder.next_frame() {
                    emit(frame.ch)?;
                }
            }
            producer.join().map_err(|_| CliError::Transport("replay thread panicked".into()))?;
            decoder.stats().clone()
        }
        StreamTransport::Tcp => {
            let (reader, writer) = tcp_replay(rec, rate).map_err(|e| CliError::Transport(e.to_string()))?;
            let mut failure = None;
            let stats = read_frames(reader, |frame| {
                emit(frame.ch).map_err(|e| {
                    let msg = e.to_string();
                    failure = Some(e);
                    std::io::Error::other(msg)
                })
            });
            if let Some(e) = failure {
                return Err(e);
            }
            let stats = stats.map_err(|e| CliError::Transport(e.to_string()))?;
            writer
                .join()
                .map_err(|_| CliError::Transport("replay thread panicked".into()))?
                .map_err(|e| CliError::Transport(e.to_string()))?;
            stats
        }
    };
    if stats.dropped > 0 || !stats.gaps.is_empty() {
        eprintln!("warning: dropped={} gaps={}", stats.dropped, stats.gaps.len());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_and_explicit_plans() {
        let cfg = PipelineConfig::default();
        assert_eq!(resolve_plan(&cfg, Some("demo")).unwrap().segments, demo_segments());
        let p = resolve_plan(&cfg, Some("Rest:1, Fist:2")).unwrap();
        assert_eq!(p.segments, vec![(Gesture::Rest, 1.0), (Gesture::Fist, 2.0)]);
        assert_eq!(p.rng_seed, cfg.seed);
        let err = resolve_plan(&cfg, Some("Rest:1, Wave:2")).unwrap_err();
        assert!(err.to_string().contains("Wave"));
    }

    #[test]
    fn missing_files_name_their_path() {
        let err = load_model_file(Path::new("/nonexistent/model.json")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/model.json"));
        let err = load_recording_file(Path::new("/nonexistent/rec.emg")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/rec.emg"));
    }
}
