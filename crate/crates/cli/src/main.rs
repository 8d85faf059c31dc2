//! `vizsync` — music-driven interpolation schedules, renders, and
//! audio-visual synchrony scoring.
//!
//! Exit codes: 0 success, 1 usage error, 2 bad input (unreadable files,
//! out-of-range parameters), 3 backend or encoder failure.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{Config, Overrides};

#[derive(Debug)]
pub enum CliError {
    Core(vizsync_core::Error),
    Input(String),
}

impl CliError {
    pub fn input(msg: String) -> Self {
        CliError::Input(msg)
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if !e.is_input_error() => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => e.fmt(f),
            CliError::Input(msg) => f.write_str(msg),
        }
    }
}

impl From<vizsync_core::Error> for CliError {
    fn from(e: vizsync_core::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Parser)]
#[command(
    name = "vizsync",
    version,
    about = "Music-to-video synchronisation: energy-driven frame schedules, \
             oracle renders, and the audio-visual synchrony (AVS) metric"
)]
struct Cli {
    /// TOML config file; command-line flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Print reports to stdout instead of writing files
    #[arg(long, global = true)]
    stdout: bool,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-segment spectral analysis: component energy series, mel summary,
    /// cumulative energy
    Analyze {
        /// Input WAV file
        audio: PathBuf,
        /// Directory for per-segment JSON reports
        #[arg(short, long, default_value = "analysis")]
        out: PathBuf,
    },
    /// Per-segment cumulative energy vectors
    Energy {
        audio: PathBuf,
        #[arg(short, long, default_value = "energy.json")]
        out: PathBuf,
    },
    /// Per-segment frame schedules (interpolation parameter per frame)
    Schedule {
        audio: PathBuf,
        /// Uniform schedules instead of energy-driven ones
        #[arg(long)]
        linear: bool,
        #[arg(short, long, default_value = "schedules.json")]
        out: PathBuf,
    },
    /// Render frames for a track (and optionally mux a video)
    Render {
        audio: PathBuf,
        /// Output directory (frames land in OUT/frames, manifest in
        /// OUT/manifest.json)
        #[arg(short, long)]
        out: PathBuf,
        /// Seed image the key images are derived from (default: flat gray)
        #[arg(long, value_name = "PNG")]
        seed_image: Option<PathBuf>,
        /// Caption file: one JSON object per line with index, start_s,
        /// end_s, text
        #[arg(long, value_name = "FILE", conflicts_with = "captioner")]
        captions: Option<PathBuf>,
        /// Captioner command invoked per segment with a WAV path appended
        #[arg(long, value_name = "CMD")]
        captioner: Option<String>,
        /// Uniform schedules instead of energy-driven ones
        #[arg(long)]
        linear: bool,
        /// Mux frames and audio into this file using the encoder template
        #[arg(long, value_name = "VIDEO")]
        mux: Option<PathBuf>,
        /// Replace frames already present in the output directory
        #[arg(long)]
        overwrite: bool,
    },
    /// Score a rendered frame directory against an audio track
    Evaluate {
        audio: PathBuf,
        /// Directory of frame_%06d.png files
        frames: PathBuf,
        #[arg(short, long, default_value = "avs-report.json")]
        out: PathBuf,
    },
    /// Score two renders of the same audio and report the difference
    Compare {
        audio: PathBuf,
        frames_a: PathBuf,
        frames_b: PathBuf,
        #[arg(short, long, default_value = "compare.json")]
        out: PathBuf,
    },
    /// Print the genre → visual style lexicon
    Genres {
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("vizsync: {err}");
        std::process::exit(err.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    cfg.apply(&cli.overrides);
    cfg.validate()?;

    match cli.command {
        Command::Analyze { audio, out } => commands::analyze::run(&cfg, &audio, &out, cli.stdout),
        Command::Energy { audio, out } => commands::energy::run(&cfg, &audio, &out, cli.stdout),
        Command::Schedule { audio, linear, out } => {
            commands::schedule::run(&cfg, &audio, linear, &out, cli.stdout)
        }
        Command::Render {
            audio,
            out,
            seed_image,
            captions,
            captioner,
            linear,
            mux,
            overwrite,
        } => commands::render::run(
            &cfg,
            commands::render::RenderOpts {
                audio,
                out,
                seed_image,
                captions,
                captioner,
                linear,
                mux,
                overwrite,
            },
        ),
        Command::Evaluate { audio, frames, out } => {
            commands::evaluate::run(&cfg, &audio, &frames, &out, cli.stdout)
        }
        Command::Compare {
            audio,
            frames_a,
            frames_b,
            out,
        } => commands::compare::run(&cfg, &audio, &frames_a, &frames_b, &out, cli.stdout),
        Command::Genres { out } => commands::genres::run(out.as_deref(), cli.stdout),
    }
}
