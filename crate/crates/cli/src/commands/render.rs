use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};
use vizsync_core::audio_io::{read_wav, resample, segment, ANALYSIS_RATE};
use vizsync_core::energy::FrameSchedule;
use vizsync_core::generate::{
    crossfade_backend, generate_key_images, render_segment, ExternalBackend, GeneratorBackend,
    Image,
};
use vizsync_core::genre::{
    ingest_captions, track_genre, CaptionSource, GenreLexicon, PromptContext,
};
use vizsync_core::video_io::{mux, write_frames_from, FrameStore};

use crate::config::{BackendKind, Config};
use crate::CliError;

pub struct RenderOpts {
    pub audio: PathBuf,
    pub out: PathBuf,
    pub seed_image: Option<PathBuf>,
    pub captions: Option<PathBuf>,
    pub captioner: Option<String>,
    pub linear: bool,
    pub mux: Option<PathBuf>,
    pub overwrite: bool,
}

/// Everything needed to reproduce the render: input hashes, the full
/// effective config, and each decision taken along the way. Written even
/// when the render fails partway (with `error` set), so a broken run still
/// leaves evidence of how far it got.
#[derive(Serialize, Default)]
struct Manifest {
    tool: String,
    version: String,
    config_sha256: String,
    config: Option<Config>,
    #[serde(skip_serializing_if = "Option::is_none")]
    audio: Option<InputFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed_image: Option<InputFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    captions: Option<CaptionRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    genre: Option<GenreRecord>,
    schedule_mode: String,
    interp: String,
    #[serde(skip_serializing_if = "String::is_empty")]
    backend: String,
    segments: Vec<SegmentRecord>,
    frames_total: usize,
    frames_dir: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    mux: Option<MuxRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct InputFile {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct CaptionRecord {
    source: String,
    texts: Vec<String>,
}

#[derive(Serialize)]
struct GenreRecord {
    per_segment: Vec<Option<String>>,
    track: Option<String>,
    /// True when no genre could be recognised; key images were generated
    /// without style text.
    style_free: bool,
}

#[derive(Serialize)]
struct SegmentRecord {
    index: usize,
    start_s: f64,
    duration_s: f64,
    n_frames: usize,
    energy_fallback: bool,
}

#[derive(Serialize)]
struct MuxRecord {
    output: String,
    template: String,
}

fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(hex_digest(&bytes))
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn build_backend(cfg: &Config) -> Result<Box<dyn GeneratorBackend>, CliError> {
    match cfg.backend.kind {
        BackendKind::Crossfade => Ok(Box::new(crossfade_backend())),
        BackendKind::External => {
            let backend = ExternalBackend::new(
                cfg.backend.command.clone(),
                Duration::from_secs_f64(cfg.backend.timeout_s),
            )?;
            Ok(Box::new(backend))
        }
    }
}

pub fn run(cfg: &Config, opts: RenderOpts) -> Result<(), CliError> {
    std::fs::create_dir_all(&opts.out)
        .map_err(|e| CliError::input(format!("{}: {e}", opts.out.display())))?;

    let mut manifest = Manifest {
        tool: "vizsync".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: hex_digest(cfg.to_toml()?.as_bytes()),
        config: Some(cfg.clone()),
        schedule_mode: if opts.linear { "linear" } else { "energy" }.into(),
        interp: match cfg.interp {
            vizsync_core::generate::InterpMode::Slerp => "slerp".into(),
            vizsync_core::generate::InterpMode::Lerp => "lerp".into(),
        },
        frames_dir: "frames".into(),
        ..Manifest::default()
    };

    let result = render_inner(cfg, &opts, &mut manifest);
    if let Err(e) = &result {
        manifest.error = Some(e.to_string());
    }
    let manifest_path = opts.out.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::input(format!("manifest: {e}")))?;
    std::fs::write(&manifest_path, format!("{json}\n"))
        .map_err(|e| CliError::input(format!("{}: {e}", manifest_path.display())))?;
    if result.is_ok() {
        eprintln!(
            "{} frames written to {}, manifest at {}",
            manifest.frames_total,
            opts.out.join("frames").display(),
            manifest_path.display()
        );
    }
    result
}

fn render_inner(cfg: &Config, opts: &RenderOpts, manifest: &mut Manifest) -> Result<(), CliError> {
    let buf = read_wav(&opts.audio)?;
    manifest.audio = Some(InputFile {
        path: opts.audio.display().to_string(),
        sha256: sha256_file(&opts.audio)?,
    });

    let work = resample(&buf, ANALYSIS_RATE)?;
    let segments = segment(&work, cfg.segment_s)?;
    let plans = vizsync_core::pipeline::plan_segments(&buf, &cfg.analysis, cfg.fps, cfg.segment_s)?;

    // Captions → per-segment genres → one track-level genre.
    let caption_source = match (&opts.captions, &opts.captioner) {
        (Some(path), _) => Some(CaptionSource::File(path.clone())),
        (None, Some(cmd)) => {
            let argv: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
            if argv.is_empty() {
                return Err(CliError::input("empty captioner command".into()));
            }
            Some(CaptionSource::Command(argv))
        }
        (None, None) => None,
    };
    let lexicon = GenreLexicon::builtin();
    let per_segment: Vec<Option<String>> = match &caption_source {
        Some(source) => {
            let set = ingest_captions(source, &segments)?;
            manifest.captions = Some(CaptionRecord {
                source: match source {
                    CaptionSource::File(p) => format!("file:{}", p.display()),
                    CaptionSource::Command(argv) => format!("command:{}", argv.join(" ")),
                },
                texts: set.captions.iter().map(|c| c.text.clone()).collect(),
            });
            set.captions
                .iter()
                .map(|c| lexicon.classify_caption(&c.text))
                .collect()
        }
        None => vec![None; segments.len()],
    };
    let track = track_genre(&per_segment)?;
    manifest.genre = Some(GenreRecord {
        per_segment: per_segment.clone(),
        track: track.clone(),
        style_free: track.is_none(),
    });

    let style = PromptContext::new(
        track.as_deref(),
        &lexicon,
        cfg.image_weight,
        cfg.text_weight,
    )?;

    let seed = match &opts.seed_image {
        Some(path) => {
            manifest.seed_image = Some(InputFile {
                path: path.display().to_string(),
                sha256: sha256_file(path)?,
            });
            Image::from_png(path)?
        }
        None => Image::filled(cfg.key_width, cfg.key_height, [128, 128, 128]),
    };

    let backend = build_backend(cfg)?;
    manifest.backend = backend.id().to_string();

    // One key image per segment boundary, chained end-to-start so the
    // video is continuous across segments.
    let keys = generate_key_images(&seed, &style, segments.len() + 1, backend.as_ref())?;

    let store = FrameStore::new(opts.out.join("frames"), cfg.fps)?;
    let mut offset = 0usize;
    for plan in &plans {
        let sched = if opts.linear {
            FrameSchedule::linear(plan.schedule.len(), cfg.fps, plan.index)?
        } else {
            plan.schedule.clone()
        };
        let frames = render_segment(
            &keys[plan.index],
            &keys[plan.index + 1],
            &sched,
            backend.as_ref(),
            cfg.interp,
        )?;
        write_frames_from(&frames, &store, offset, opts.overwrite)?;
        offset += frames.len();
        manifest.segments.push(SegmentRecord {
            index: plan.index,
            start_s: plan.start_s,
            duration_s: plan.duration_s,
            n_frames: frames.len(),
            energy_fallback: plan.energy.fallback,
        });
    }
    manifest.frames_total = offset;

    if let Some(video) = &opts.mux {
        manifest.mux = Some(MuxRecord {
            output: video.display().to_string(),
            template: cfg.mux_template.clone(),
        });
        mux(&store, &opts.audio, video, &cfg.mux_template)?;
    }
    Ok(())
}
