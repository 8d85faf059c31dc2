use std::path::Path;

use vizsync_core::audio_io::read_wav;
use vizsync_core::pipeline::evaluate_sync;
use vizsync_core::video_io::{frame_iter, FrameStore};

use crate::config::Config;
use crate::CliError;

pub fn run(
    cfg: &Config,
    audio: &Path,
    frames: &Path,
    out: &Path,
    stdout: bool,
) -> Result<(), CliError> {
    let buf = read_wav(audio)?;
    let store = FrameStore::new(frames, cfg.fps)?;
    let report = evaluate_sync(&buf, frame_iter(&store)?, cfg.fps, &cfg.avs, &cfg.analysis)?;
    if let Some(warning) = &report.warning {
        eprintln!("warning: {warning}");
    }
    super::emit(&report, out, stdout, "synchrony report")
}
