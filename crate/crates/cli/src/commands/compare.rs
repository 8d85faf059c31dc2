use std::path::Path;

use vizsync_core::audio_io::read_wav;
use vizsync_core::pipeline::evaluate_sync;
use vizsync_core::video_io::{frame_iter, FrameStore};

use crate::config::Config;
use crate::CliError;

pub fn run(
    cfg: &Config,
    audio: &Path,
    frames_a: &Path,
    frames_b: &Path,
    out: &Path,
    stdout: bool,
) -> Result<(), CliError> {
    let buf = read_wav(audio)?;
    let mut reports = Vec::with_capacity(2);
    for frames in [frames_a, frames_b] {
        let store = FrameStore::new(frames, cfg.fps)?;
        reports.push(evaluate_sync(
            &buf,
            frame_iter(&store)?,
            cfg.fps,
            &cfg.avs,
            &cfg.analysis,
        )?);
    }
    let b = reports.pop().expect("two reports");
    let a = reports.pop().expect("two reports");
    let comparison = serde_json::json!({
        "audio": audio.display().to_string(),
        "a": { "frames": frames_a.display().to_string(), "report": a },
        "b": { "frames": frames_b.display().to_string(), "report": b },
        "delta": a.score - b.score,
    });
    super::emit(&comparison, out, stdout, "comparison")
}
