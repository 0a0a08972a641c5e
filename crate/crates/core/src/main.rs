use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use emg_core::cli::{self, CliError, PipelineConfig, StreamTransport};

#[derive(Parser)]
#[command(name = "emgspeak", version, about = "EMG gesture recognition to words and phrases")]
struct Args {
    /// Pipeline config file (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled synthetic recording
    Gen {
        #[arg(long)]
        out: PathBuf,
        /// `demo`, `corpus`, or a `Label:seconds,...` list
        #[arg(long)]
        plan: Option<String>,
    },
    /// Train a model on labelled recordings and write it to --model
    Train {
        #[arg(long)]
        model: PathBuf,
        #[arg(required = true)]
        recordings: Vec<PathBuf>,
    },
    /// Evaluate a model on labelled recordings
    Eval {
        #[arg(long)]
        model: PathBuf,
        /// Write `true,predicted,count` cells here
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(required = true)]
        recordings: Vec<PathBuf>,
    },
    /// Recognize events in a recording (batch)
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        recording: PathBuf,
    },
    /// Replay a recording through the frame transport into the live recognizer
    Stream {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Playback speed as a multiple of real time; 0 = as fast as possible
        #[arg(long, default_value_t = 0.0)]
        rate: f64,
        /// Use a loopback TCP connection instead of the in-process queue
        #[arg(long)]
        tcp: bool,
        recording: PathBuf,
    },
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(|source| CliError::Io { path: p.clone(), source })?;
            Ok(Box::new(io::BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn run(args: Args) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg = cfg.with_seed(seed);
    }
    let mut stdout = io::stdout().lock();
    match args.command {
        Command::Gen { out, plan } => cli::cmd_gen(&cfg, plan.as_deref(), &out, &mut stdout),
        Command::Train { model, recordings } => cli::cmd_train(&cfg, &recordings, &model, &mut stdout),
        Command::Eval { model, out, recordings } => {
            cli::cmd_eval(&cfg, &model, &recordings, out.as_deref(), &mut stdout)
        }
        Command::Classify { model, out, recording } => {
            drop(stdout);
            let mut w = output(out.as_ref())?;
            cli::cmd_classify(&cfg, &model, &recording, &mut w)?;
            Ok(w.flush()?)
        }
        Command::Stream { model, out, rate, tcp, recording } => {
            drop(stdout);
            let mut w = output(out.as_ref())?;
            let transport = if tcp { StreamTransport::Tcp } else { StreamTransport::Queue };
            cli::cmd_stream(&cfg, &model, &recording, rate, transport, &mut w)?;
            Ok(w.flush()?)
        }
    }
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string();
            eprintln!("error: {}", msg.lines().map(str::trim).collect::<Vec<_>>().join(" "));
            ExitCode::FAILURE
        }
    }
}
